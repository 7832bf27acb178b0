//! Run configuration: a strict JSON file overlaid by command-line flags,
//! validated in one pass so every violation is reported together.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cylcore::CylGrid;
use crate::error::{Error, Result};
use crate::solver::SolveOpts;
use crate::specfun::{Order, Params};

/// Raw settings as read from a file or collected from flags; every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: Option<u32>,
    pub s: Option<f64>,
    pub alpha: Option<f64>,
    pub p: Option<f64>,
    #[serde(rename = "N")]
    pub big_n: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    /// `a0:a1:da` or a comma list.
    pub alpha_grid: Option<String>,
    pub p_grid: Option<String>,
    pub trials: Option<usize>,
}

macro_rules! overlay_fields {
    ($base:expr, $top:expr, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("config JSON: {e}")]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))?;
        Self::parse(&text)
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overlay(mut self, flags: ConfigFile) -> Self {
        overlay_fields!(self, flags, n, s, alpha, p, big_n, l, tol, max_iter, seed, jobs, out, cache_dir, alpha_grid, p_grid, trials);
        self
    }
}

/// What a command needs beyond (n, s).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Need {
    Order,
    Point,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub order: Order,
    pub params: Option<Params>,
    /// Explicit (L, N); `None` means the per-point default grid.
    pub grid: Option<CylGrid>,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub alphas: Vec<f64>,
    pub ps: Vec<f64>,
    pub trials: usize,
}

impl RunConfig {
    pub fn solve_opts(&self) -> SolveOpts {
        SolveOpts { tol: self.tol, max_iter: self.max_iter, ..SolveOpts::default() }
    }
}

/// Values of `a0:a1:da` (endpoint included when hit to rounding) or `x,y,z`.
pub fn parse_range(text: &str) -> std::result::Result<Vec<f64>, String> {
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range '{text}' must have the form a0:a1:da"));
        }
        let (a0, a1, da) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(da > 0.0) || a1 < a0 {
            return Err(format!("range '{text}' needs a0 <= a1 and da > 0"));
        }
        let count = ((a1 - a0) / da + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| a0 + i as f64 * da).collect())
    } else {
        let v = text.split(',').map(num).collect::<std::result::Result<Vec<f64>, String>>()?;
        if v.is_empty() {
            return Err("empty list".into());
        }
        Ok(v)
    }
}

pub fn validate(raw: &ConfigFile, need: Need) -> Result<RunConfig> {
    let mut bad = Vec::new();
    let (n, s) = match (raw.n, raw.s) {
        (Some(n), Some(s)) => (n, s),
        _ => {
            bad.push("both n and s are required".to_string());
            (3, 0.5)
        }
    };
    let order = Order::new(n, s);
    if let Err(e) = &order {
        bad.push(e.to_string());
    }
    let mut params = None;
    if need == Need::Point {
        match (raw.alpha, raw.p) {
            (Some(a), Some(p)) if order.is_ok() => {
                let v = Params::violations(n, s, p, a);
                if v.is_empty() {
                    params = Some(Params { n, s, p, alpha: a });
                }
                bad.extend(v);
            }
            (Some(_), Some(_)) => {}
            _ => bad.push("alpha and p are required".to_string()),
        }
    }
    let mut axis = |name: &str, text: &Option<String>| -> Vec<f64> {
        if need != Need::Sweep {
            return Vec::new();
        }
        match text {
            None => {
                bad.push(format!("{name} is required for a sweep"));
                Vec::new()
            }
            Some(t) => parse_range(t).unwrap_or_else(|e| {
                bad.push(format!("{name}: {e}"));
                Vec::new()
            }),
        }
    };
    let alphas = axis("alpha_grid", &raw.alpha_grid);
    let ps = axis("p_grid", &raw.p_grid);
    let grid = match (raw.l, raw.big_n) {
        (Some(l), Some(big_n)) => CylGrid::new(l, big_n).map_err(|e| bad.push(e.to_string())).ok(),
        (None, None) => None,
        _ => {
            bad.push("L and N must be given together".to_string());
            None
        }
    };
    let tol = raw.tol.unwrap_or(SolveOpts::default().tol);
    if !(tol > 0.0 && tol.is_finite()) {
        bad.push(format!("tol = {tol} must be positive"));
    }
    let max_iter = raw.max_iter.unwrap_or(SolveOpts::default().max_iter);
    if max_iter == 0 {
        bad.push("max_iter must be at least 1".to_string());
    }
    let jobs = raw.jobs.unwrap_or_else(|| std::thread::available_parallelism().map(|x| x.get()).unwrap_or(1));
    if jobs == 0 {
        bad.push("jobs must be at least 1".to_string());
    }
    let trials = raw.trials.unwrap_or(64);
    if trials == 0 {
        bad.push("trials must be at least 1".to_string());
    }
    if !bad.is_empty() {
        return Err(Error::Config(bad));
    }
    Ok(RunConfig {
        order: order?,
        params,
        grid,
        tol,
        max_iter,
        seed: raw.seed.unwrap_or(0),
        jobs,
        out: raw.out.clone(),
        cache_dir: raw.cache_dir.clone(),
        alphas,
        ps,
        trials,
    })
}

/// File (if any) overlaid by flags, then validated.
pub fn parse_config(file: Option<&Path>, flags: ConfigFile, need: Need) -> Result<RunConfig> {
    let base = match file {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    validate(&base.overlay(flags), need)
}
