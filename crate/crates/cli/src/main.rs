//! `fckn`: command-line driver for the numerical laboratory.
//!
//! Exit codes: 0 success, 1 computation failed, 2 bad configuration,
//! 3 a verification check failed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fckn::config::{parse_config, ConfigFile, Need, RunConfig};
use fckn::cylcore::{fmt_num, write_atomic, write_profile};
use fckn::ineqlab::{bubble_grid, bubble_profile, hardy_trials, rho_profile};
use fckn::solver::{default_grid, solve_ground_state, MinimizerResult};
use fckn::spectral::{channel_spectrum, verify_nondegeneracy};
use fckn::specfun::{channel_symbol, hardy_constant, riesz_constant};
use fckn::supersol::{certify, default_radii, CERT_NODES};
use fckn::sweep::{run_sweep, write_chart, Cache, SweepSpec};
use fckn::{coeffs, verify, Error};

#[derive(Parser)]
#[command(name = "fckn", version, about = "Fractional CKN inequality laboratory")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Default)]
struct OrderArgs {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    s: Option<f64>,
}

#[derive(Args, Default)]
struct PointArgs {
    #[command(flatten)]
    order: OrderArgs,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Default)]
struct SolverArgs {
    /// Grid nodes (power of two).
    #[arg(long = "N")]
    big_n: Option<usize>,
    /// Half-width of the window in τ = ln r.
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// C_{n,s}, the Hardy constant and a table of channel multipliers.
    Constants {
        #[command(flatten)]
        order: OrderArgs,
        #[arg(long)]
        ell: Option<u32>,
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Weight coefficient C(α) with both routes and dC/dα.
    Coeff {
        #[command(flatten)]
        order: OrderArgs,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        /// Tabulate K equispaced α inside the admissible window.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        #[arg(long)]
        csv: bool,
    },
    /// Ground state at one (n, s, α, p).
    Solve {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Linearized spectrum per channel and the non-degeneracy report.
    Spectrum {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value = "0,1,2,3", value_delimiter = ',')]
        channels: Vec<u32>,
        #[arg(long, default_value_t = 6)]
        k: usize,
    },
    /// Symmetry chart over an (α, p) grid, resumable through a cache.
    Sweep {
        #[command(flatten)]
        order: OrderArgs,
        /// `a0:a1:da` or a comma list.
        #[arg(long, allow_hyphen_values = true)]
        alpha_grid: Option<String>,
        #[arg(long)]
        p_grid: Option<String>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Compute at most this many uncached points, then stop.
        #[arg(long)]
        budget: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Randomized Hardy-type inequality trials on channels 1 and 2.
    Hardy {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long)]
        trials: Option<usize>,
        /// Use the Sobolev bubble as base instead of the ground state (α, p ignored).
        #[arg(long)]
        bubble: bool,
    },
    /// Smoothed fundamental solution Γ and its measure γ.
    Supersol {
        #[command(flatten)]
        order: OrderArgs,
        /// Certification nodes.
        #[arg(long, default_value_t = CERT_NODES)]
        grid: usize,
        /// Sample radii for γ.
        #[arg(long, default_value_t = 120)]
        radii: usize,
    },
    /// Acceptance checks: ids 1-13, `all`, `ibp`, `hessian` or `weaknorm`.
    Verify {
        checks: Vec<String>,
    },
}

enum Failure {
    Compute(Error),
    Config(Error),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e),
            other => Failure::Compute(other),
        }
    }
}

type Outcome = Result<(), Failure>;

struct Globals {
    config: Option<PathBuf>,
    jobs: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
}

impl Globals {
    fn flags(&self) -> ConfigFile {
        ConfigFile { jobs: self.jobs, seed: self.seed, out: self.out.clone(), ..ConfigFile::default() }
    }

    fn load(&self, flags: ConfigFile, need: Need) -> Result<RunConfig, Failure> {
        let cfg = parse_config(self.config.as_deref(), flags, need)?;
        // Fails only if a pool already exists, which is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global();
        Ok(cfg)
    }
}

fn with_order(mut f: ConfigFile, o: &OrderArgs) -> ConfigFile {
    f.n = o.n;
    f.s = o.s;
    f
}

fn with_solver(mut f: ConfigFile, a: &SolverArgs) -> ConfigFile {
    f.big_n = a.big_n;
    f.l = a.l;
    f.tol = a.tol;
    f.max_iter = a.max_iter;
    f
}

fn with_point(f: ConfigFile, a: &PointArgs) -> ConfigFile {
    let mut f = with_solver(with_order(f, &a.order), &a.solver);
    f.alpha = a.alpha;
    f.p = a.p;
    f
}

/// Stdout write that treats a closed pipe (`| head`) as success.
fn stdout(text: &str) -> Outcome {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::from(e).into()),
        _ => Ok(()),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Outcome {
    match out {
        Some(path) => Ok(write_atomic(path, text.as_bytes())?),
        None => stdout(text),
    }
}

fn print_json(v: &Value) -> Outcome {
    stdout(&format!("{}\n", serde_json::to_string_pretty(v).map_err(Error::from)?))
}

fn solve(cfg: &RunConfig) -> Result<MinimizerResult, Failure> {
    let params = cfg.params.expect("point config carries params");
    let grid = match cfg.grid {
        Some(g) => g,
        None => default_grid(&params)?,
    };
    Ok(solve_ground_state(&params, grid, &cfg.solve_opts())?)
}

fn constants(g: &Globals, o: &OrderArgs, ell: Option<u32>, xi: Option<f64>, json: bool) -> Outcome {
    let cfg = g.load(with_order(g.flags(), o), Need::Order)?;
    let order = cfg.order;
    let ells: Vec<u32> = match ell {
        Some(l) => vec![l],
        None => fckn::spectral::channels(&order, 3),
    };
    let xis: Vec<f64> = match xi {
        Some(x) => vec![x],
        None => (0..=20).map(|i| i as f64 * 0.5).collect(),
    };
    let c_ns = riesz_constant(order.n, order.s)?;
    let c_hardy = hardy_constant(&order);
    let mut rows = Vec::new();
    for &l in &ells {
        let sym = channel_symbol(&order, l).map_err(|e| Failure::Config(Error::Config(vec![e.to_string()])))?;
        for &x in &xis {
            rows.push((l, x, sym.eval(x)));
        }
    }
    if json || g.format == Some(Format::Json) {
        let table: Vec<Value> = rows.iter().map(|(l, x, v)| json!({"ell": l, "xi": x, "lambda": v})).collect();
        let v = json!({"n": order.n, "s": order.s, "c_ns": c_ns, "c_hardy": c_hardy, "table": table});
        return emit(&format!("{}\n", serde_json::to_string_pretty(&v).map_err(Error::from)?), cfg.out.as_deref());
    }
    let mut text = format!("# c_ns = {}\n# c_hardy = {}\nell,xi,lambda\n", fmt_num(c_ns), fmt_num(c_hardy));
    for (l, x, v) in rows {
        text.push_str(&format!("{l},{},{}\n", fmt_num(x), fmt_num(v)));
    }
    emit(&text, cfg.out.as_deref())
}

fn coeff(g: &Globals, o: &OrderArgs, alpha: Option<f64>, grid: Option<usize>, json: bool, csv: bool) -> Outcome {
    let cfg = g.load(with_order(g.flags(), o), Need::Order)?;
    let order = cfg.order;
    let (lo, hi) = (-2.0 * order.s, order.half_gap());
    let alphas: Vec<f64> = match (grid, alpha) {
        (Some(0), _) => return Err(Error::Config(vec!["grid must be at least 1".into()]).into()),
        (Some(k), _) => (1..=k).map(|i| lo + (hi - lo) * i as f64 / (k + 1) as f64).collect(),
        (None, Some(a)) => vec![a],
        (None, None) => return Err(Error::Config(vec!["coeff needs --alpha or --grid".into()]).into()),
    };
    let bad: Vec<String> = alphas
        .iter()
        .filter(|a| !(**a > lo && **a < hi))
        .map(|a| format!("alpha = {a} violates {lo} < alpha < n/2 - s = {hi}"))
        .collect();
    if !bad.is_empty() {
        return Err(Error::Config(bad).into());
    }
    let mut rows = Vec::new();
    for &a in &alphas {
        rows.push((a, coeffs::coeff(&order, a)?));
    }
    let as_json = json || (!csv && g.format == Some(Format::Json));
    if as_json {
        let v: Vec<Value> = rows
            .iter()
            .map(|(a, r)| json!({"alpha": a, "C": r.value, "dCdalpha": r.derivative,
                "route_a": r.route_a, "route_b": r.route_b, "route_gap": (r.route_a - r.route_b).abs()}))
            .collect();
        return emit(&format!("{}\n", serde_json::to_string_pretty(&v).map_err(Error::from)?), cfg.out.as_deref());
    }
    let mut text = String::from("alpha,C,dCdalpha,route_gap\n");
    for (a, r) in rows {
        text.push_str(&format!("{},{},{},{}\n", fmt_num(a), fmt_num(r.value), fmt_num(r.derivative), fmt_num((r.route_a - r.route_b).abs())));
    }
    emit(&text, cfg.out.as_deref())
}

fn solve_cmd(g: &Globals, point: &PointArgs) -> Outcome {
    let cfg = g.load(with_point(g.flags(), point), Need::Point)?;
    let res = solve(&cfg)?;
    if let Some(path) = &cfg.out {
        write_profile(path, &res.profile, "ground-state")?;
    }
    print_json(&json!({
        "params": res.params,
        "summary": res.summary(),
        "radial_constrained": res.radial_constrained,
        "slope_warning": res.slope_warning,
        "profile": cfg.out,
    }))
}

fn spectrum(g: &Globals, point: &PointArgs, chans: &[u32], k: usize) -> Outcome {
    let cfg = g.load(with_point(g.flags(), point), Need::Point)?;
    let res = solve(&cfg)?;
    let mut out = Vec::new();
    for &ell in chans {
        if cfg.order.n == 1 && ell > 1 {
            continue;
        }
        let rep = channel_spectrum(&res, ell, k)?;
        out.push(json!({
            "ell": ell,
            "eigenvalues": rep.eigenvalues,
            "residuals": rep.residuals,
            "rayleigh": rep.rayleigh,
            "ortho_defect": rep.ortho_defect,
            "retained_nodes": rep.retained_nodes,
        }));
    }
    let nondeg = verify_nondegeneracy(&res)?;
    let v = json!({"params": res.params, "p_minus_1": res.params.p - 1.0, "channels": out, "nondegeneracy": nondeg});
    match &cfg.out {
        Some(path) => emit(&format!("{}\n", serde_json::to_string_pretty(&v).map_err(Error::from)?), Some(path)),
        None => print_json(&v),
    }
}

fn sweep(g: &Globals, o: &OrderArgs, alpha_grid: &Option<String>, p_grid: &Option<String>, cache_dir: &Option<PathBuf>, budget: Option<usize>, solver: &SolverArgs) -> Outcome {
    let mut flags = with_solver(with_order(g.flags(), o), solver);
    flags.alpha_grid = alpha_grid.clone();
    flags.p_grid = p_grid.clone();
    flags.cache_dir = cache_dir.clone();
    let cfg = g.load(flags, Need::Sweep)?;
    let cache = match &cfg.cache_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(Error::from)?;
            Some(Cache::new(dir))
        }
        None => None,
    };
    let spec = SweepSpec {
        order: cfg.order,
        alphas: cfg.alphas.clone(),
        ps: cfg.ps.clone(),
        opts: cfg.solve_opts(),
        grid: cfg.grid,
        seed: cfg.seed,
        jobs: cfg.jobs,
    };
    let outcome = run_sweep(&spec, cache.as_ref(), budget)?;
    let rows = outcome.finished_rows();
    let summary = json!({
        "points": outcome.rows.len(),
        "complete": outcome.complete(),
        "computed": outcome.computed,
        "cached": outcome.cached,
        "failures": outcome.failures,
        "discarded": outcome.discarded,
        "chart": cfg.out,
    });
    match &cfg.out {
        Some(path) => {
            write_chart(path, &rows)?;
            print_json(&summary)
        }
        None => {
            stdout(&fckn::sweep::chart_csv(&rows))?;
            eprintln!("{summary}");
            Ok(())
        }
    }
}

fn hardy(g: &Globals, point: &PointArgs, trials: Option<usize>, bubble: bool) -> Outcome {
    let mut flags = with_point(g.flags(), point);
    flags.trials = trials;
    let cfg = g.load(flags, if bubble { Need::Order } else { Need::Point })?;
    let (base, profile) = if bubble {
        ("sobolev-bubble", bubble_profile(&cfg.order, bubble_grid(&cfg.order)?)?)
    } else {
        ("ckn-ground-state", solve(&cfg)?.profile)
    };
    let rho = rho_profile(&profile)?;
    let mut reports = Vec::new();
    let mut failures = 0;
    let mut min_deficit = f64::INFINITY;
    for ell in fckn::spectral::channels(&cfg.order, 2).into_iter().filter(|l| *l >= 1) {
        let rep = hardy_trials(&rho, ell, cfg.seed, cfg.trials)?;
        failures += rep.failures;
        min_deficit = min_deficit.min(rep.min_deficit);
        reports.push(json!({"ell": ell, "report": rep}));
    }
    let pass = failures == 0;
    print_json(&json!({"base": base, "seed": cfg.seed, "channels": reports, "min_deficit": min_deficit, "failures": failures, "pass": pass}))?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn supersol(g: &Globals, o: &OrderArgs, nodes: usize, radii: usize) -> Outcome {
    let cfg = g.load(with_order(g.flags(), o), Need::Order)?;
    if nodes < 100 || radii < 4 {
        return Err(Error::Config(vec![format!("need grid >= 100 and radii >= 4, got {nodes} and {radii}")]).into());
    }
    let rep = certify(&cfg.order, nodes, &default_radii(radii))?;
    if let Some(path) = &cfg.out {
        let mut text = String::from("r,psi,gamma\n");
        let f = &rep.field;
        for (r, gamma) in f.radii.iter().zip(&f.gamma_samples) {
            text.push_str(&format!("{},{},{}\n", fmt_num(*r), fmt_num(f.profile.psi(*r)), fmt_num(*gamma)));
        }
        write_atomic(path, text.as_bytes())?;
    }
    let mut v = serde_json::to_value(&rep).map_err(Error::from)?;
    if let Some(field) = v.get_mut("field").and_then(Value::as_object_mut) {
        field.remove("radii");
        field.remove("gamma_samples");
        field.remove("profile");
    }
    print_json(&v)?;
    if rep.pass {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn verify_cmd(g: &Globals, checks: &[String]) -> Outcome {
    let cfg = g.load(ConfigFile { n: Some(3), s: Some(0.5), ..g.flags() }, Need::Order)?;
    let mut ids = Vec::new();
    let mut weaknorm = false;
    let mut bad = Vec::new();
    let names: Vec<String> = if checks.is_empty() { vec!["all".into()] } else { checks.to_vec() };
    for c in &names {
        match c.as_str() {
            "all" => ids.extend(verify::CRITERIA.iter().map(|c| c.0)),
            "ibp" => ids.push(8),
            "hessian" => ids.push(9),
            "weaknorm" => weaknorm = true,
            other => match other.parse::<u32>() {
                Ok(id) if (1..=13).contains(&id) => ids.push(id),
                _ => bad.push(format!("unknown check '{other}'")),
            },
        }
    }
    if !bad.is_empty() {
        return Err(Error::Config(bad).into());
    }
    ids.dedup();
    let mut results = serde_json::Map::new();
    let mut pass = true;
    for id in ids {
        let c = verify::run(id, cfg.jobs);
        eprintln!("{} criterion {id} ({}) [{:.1}s]", if c.pass { "PASS" } else { "FAIL" }, c.name, c.seconds);
        pass &= c.pass;
        results.insert(id.to_string(), serde_json::to_value(&c).map_err(Error::from)?);
    }
    if weaknorm {
        let (ok, detail) = verify::weak_norm_checks().unwrap_or_else(|e| (false, json!({"error": e.to_string()})));
        eprintln!("{} weaknorm", if ok { "PASS" } else { "FAIL" });
        pass &= ok;
        results.insert("weaknorm".into(), json!({"pass": ok, "detail": detail}));
    }
    let v = json!({"pass": pass, "criteria": results});
    match &cfg.out {
        Some(path) => emit(&format!("{}\n", serde_json::to_string_pretty(&v).map_err(Error::from)?), Some(path))?,
        None => print_json(&v)?,
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = Globals { config: cli.config, jobs: cli.jobs, seed: cli.seed, out: cli.out, format: cli.format };
    let res = match &cli.cmd {
        Cmd::Constants { order, ell, xi, json } => constants(&g, order, *ell, *xi, *json),
        Cmd::Coeff { order, alpha, grid, json, csv } => coeff(&g, order, *alpha, *grid, *json, *csv),
        Cmd::Solve { point } => solve_cmd(&g, point),
        Cmd::Spectrum { point, channels, k } => spectrum(&g, point, channels, *k),
        Cmd::Sweep { order, alpha_grid, p_grid, cache_dir, budget, solver } => sweep(&g, order, alpha_grid, p_grid, cache_dir, *budget, solver),
        Cmd::Hardy { point, trials, bubble } => hardy(&g, point, *trials, *bubble),
        Cmd::Supersol { order, grid, radii } => supersol(&g, order, *grid, *radii),
        Cmd::Verify { checks } => verify_cmd(&g, checks),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Verification) => ExitCode::from(3),
    }
}
