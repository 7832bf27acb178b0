//! Resumable (α, p) sweeps with a content-addressed profile cache.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cylcore::{fmt_num, read_profile, write_atomic, write_profile, CylGrid, CylProfile};
use crate::error::{Error, Result};
use crate::solver::{default_grid, solve_ground_state, SolveOpts};
use crate::spectral::{channel_spectrum, classify, ChartRow, MARGIN};
use crate::specfun::{Order, Params};

/// Bumped whenever solver output can change; old cache entries stop matching.
pub const SOLVER_VERSION: &str = "fckn-solver-3";

pub const CHART_HEADER: &str = "alpha,p,quotient,nu1,p_minus_1,mu2,class";

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheEntry {
    pub key: String,
    pub version: String,
    pub params: Params,
    pub grid: CylGrid,
    pub seed: u64,
    /// File name of the profile CSV inside the cache directory.
    pub profile: String,
    /// SHA-256 of the profile CSV bytes.
    pub checksum: String,
    pub row: ChartRow,
}

#[derive(Debug)]
pub enum Lookup {
    Hit(CylProfile, CacheEntry),
    Miss,
    /// Entry existed but failed verification and was removed.
    Discarded(String),
}

#[derive(Debug, Clone)]
pub struct Cache {
    pub dir: PathBuf,
    pub version: String,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into(), version: SOLVER_VERSION.to_string() }
    }

    pub fn key(&self, params: &Params, grid: &CylGrid) -> String {
        let text = format!(
            "n={}|s={}|alpha={}|p={}|N={}|L={}|version={}",
            params.n,
            fmt_num(params.s),
            fmt_num(params.alpha),
            fmt_num(params.p),
            grid.n,
            fmt_num(grid.l),
            self.version
        );
        sha256_hex(text.as_bytes())
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.entry.json"))
    }

    fn profile_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.csv"))
    }

    /// Files `profile` under the grid that was requested for it; the solver
    /// may have widened the window since.
    pub fn store(&self, requested: &CylGrid, profile: &CylProfile, row: &ChartRow, seed: u64) -> Result<CacheEntry> {
        let params = profile.params.ok_or_else(|| Error::Cache("profile without parameters".into()))?;
        let key = self.key(&params, requested);
        let path = self.profile_path(&key);
        write_profile(&path, profile, "ground-state")?;
        let entry = CacheEntry {
            key: key.clone(),
            version: self.version.clone(),
            params,
            grid: *requested,
            seed,
            profile: format!("{key}.csv"),
            checksum: sha256_hex(&fs::read(&path)?),
            row: row.clone(),
        };
        write_atomic(&self.entry_path(&key), serde_json::to_string_pretty(&entry)?.as_bytes())?;
        Ok(entry)
    }

    fn verify(&self, key: &str) -> Result<(CylProfile, CacheEntry)> {
        let entry: CacheEntry = serde_json::from_str(&fs::read_to_string(self.entry_path(key))?)?;
        if entry.key != key || entry.version != self.version {
            return Err(Error::Cache(format!("entry {key} has version {}", entry.version)));
        }
        let path = self.dir.join(&entry.profile);
        let sum = sha256_hex(&fs::read(&path)?);
        if sum != entry.checksum {
            return Err(Error::Cache(format!("checksum mismatch for {}", path.display())));
        }
        let (profile, _) = read_profile(&path)?;
        Ok((profile, entry))
    }

    pub fn lookup(&self, params: &Params, grid: &CylGrid) -> Lookup {
        let key = self.key(params, grid);
        if !self.entry_path(&key).exists() {
            return Lookup::Miss;
        }
        match self.verify(&key) {
            Ok((p, e)) => Lookup::Hit(p, e),
            Err(e) => {
                eprintln!("warning: discarding cache entry {key}: {e}");
                for path in [self.entry_path(&key), self.profile_path(&key), self.profile_path(&key).with_extension("json")] {
                    let _ = fs::remove_file(path);
                }
                Lookup::Discarded(e.to_string())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub order: Order,
    pub alphas: Vec<f64>,
    pub ps: Vec<f64>,
    pub opts: SolveOpts,
    /// Fixed grid for every point; `None` uses the per-point default.
    pub grid: Option<CylGrid>,
    pub seed: u64,
    pub jobs: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SweepOutcome {
    /// In (alpha_index, p_index) order; `None` for points not reached.
    pub rows: Vec<Option<ChartRow>>,
    pub computed: usize,
    pub cached: usize,
    pub failures: usize,
    pub discarded: usize,
}

impl SweepOutcome {
    pub fn complete(&self) -> bool {
        self.rows.iter().all(Option::is_some)
    }

    pub fn finished_rows(&self) -> Vec<ChartRow> {
        self.rows.iter().flatten().cloned().collect()
    }
}

fn solve_point(params: &Params, grid: CylGrid, opts: &SolveOpts) -> Result<(CylProfile, ChartRow)> {
    let res = solve_ground_state(params, grid, opts)?;
    let nu1 = channel_spectrum(&res, 1, 1)?.eigenvalues[0];
    let radial = channel_spectrum(&res, 0, 4)?;
    let p = params.p;
    let mu2 = radial.eigenvalues.iter().copied().find(|m| *m > p - 1.0 + MARGIN);
    let row = ChartRow {
        alpha: params.alpha,
        p,
        quotient: Some(res.quotient),
        nu1: Some(nu1),
        mu2,
        class: classify(nu1, p).label().to_string(),
    };
    Ok((res.profile, row))
}

enum Task {
    Done(ChartRow),
    Compute(Params, CylGrid),
    Pending,
}

/// Runs the sweep, computing at most `budget` uncached points (all when
/// `None`); a later call with the same cache picks up the rest.
pub fn run_sweep(spec: &SweepSpec, cache: Option<&Cache>, budget: Option<usize>) -> Result<SweepOutcome> {
    let points: Vec<(f64, f64)> = spec.alphas.iter().flat_map(|&a| spec.ps.iter().map(move |&p| (a, p))).collect();
    let mut out = SweepOutcome::default();
    let mut left = budget.unwrap_or(usize::MAX);
    let mut tasks = Vec::with_capacity(points.len());
    for &(alpha, p) in &points {
        let params = match Params::new(spec.order.n, spec.order.s, p, alpha) {
            Ok(x) => x,
            Err(_) => {
                tasks.push(Task::Done(ChartRow::failed(alpha, p, "invalid-params")));
                continue;
            }
        };
        let grid = match spec.grid {
            Some(g) => g,
            None => default_grid(&params)?,
        };
        if let Some(c) = cache {
            match c.lookup(&params, &grid) {
                Lookup::Hit(_, e) => {
                    out.cached += 1;
                    tasks.push(Task::Done(e.row));
                    continue;
                }
                Lookup::Discarded(_) => out.discarded += 1,
                Lookup::Miss => {}
            }
        }
        if left == 0 {
            tasks.push(Task::Pending);
        } else {
            left -= 1;
            tasks.push(Task::Compute(params, grid));
        }
    }
    out.computed = tasks.iter().filter(|t| matches!(t, Task::Compute(..))).count();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    let results: Vec<Result<Option<ChartRow>>> = pool.install(|| {
        tasks
            .into_par_iter()
            .enumerate()
            .map(|(index, task)| match task {
                Task::Done(row) => Ok(Some(row)),
                Task::Pending => Ok(None),
                Task::Compute(params, grid) => {
                    let seed = spec.seed ^ index as u64;
                    let run = catch_unwind(AssertUnwindSafe(|| solve_point(&params, grid, &spec.opts)));
                    match run {
                        Ok(Ok((profile, row))) => {
                            if let Some(c) = cache {
                                c.store(&grid, &profile, &row, seed)?;
                            }
                            Ok(Some(row))
                        }
                        _ => Ok(Some(ChartRow::failed(params.alpha, params.p, "failed"))),
                    }
                }
            })
            .collect()
    });
    for r in results {
        out.rows.push(r?);
    }
    out.failures = out.rows.iter().flatten().filter(|r| r.class == "failed").count();
    Ok(out)
}

fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub fn chart_csv(rows: &[ChartRow]) -> String {
    let mut out = String::from(CHART_HEADER);
    out.push('\n');
    for r in rows {
        let line = [
            fmt_num(r.alpha),
            fmt_num(r.p),
            opt_num(r.quotient),
            opt_num(r.nu1),
            fmt_num(r.p - 1.0),
            opt_num(r.mu2),
            r.class.clone(),
        ]
        .join(",");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn write_chart(path: &Path, rows: &[ChartRow]) -> Result<()> {
    write_atomic(path, chart_csv(rows).as_bytes())
}
