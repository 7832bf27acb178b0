use std::fs;

use fckn::config::*;
use fckn::solver::{default_grid, solve_ground_state, SolveOpts};
use fckn::spectral::ChartRow;
use fckn::sweep::*;
use fckn::{Error, Order, Params};

fn cfg(text: &str, need: Need) -> fckn::Result<RunConfig> {
    validate(&ConfigFile::parse(text)?, need)
}

fn messages(e: Error) -> Vec<String> {
    match e {
        Error::Config(v) => v,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn valid_point_config() {
    let c = cfg(r#"{"n":3,"s":0.5,"alpha":0.0,"p":2.5}"#, Need::Point).unwrap();
    assert_eq!(c.params, Some(Params::new(3, 0.5, 2.5, 0.0).unwrap()));
    assert_eq!(c.seed, 0);
}

#[test]
fn alpha_above_window_is_rejected_with_bound() {
    let m = messages(cfg(r#"{"n":3,"s":0.5,"alpha":1.2,"p":2.5}"#, Need::Point).unwrap_err());
    assert_eq!(m.len(), 1);
    assert!(m[0].contains("alpha = 1.2") && m[0].contains("n/2 - s") && m[0].contains("< 1"), "{m:?}");
}

#[test]
fn critical_exponent_is_excluded() {
    let m = messages(cfg(r#"{"n":3,"s":0.5,"alpha":0.0,"p":6.0}"#, Need::Point).unwrap_err());
    assert!(m[0].contains("p = 6") && m[0].contains("2*_s") && m[0].contains("= 6"), "{m:?}");
}

#[test]
fn all_violations_reported_together() {
    let m = messages(cfg(r#"{"n":3,"s":0.5,"alpha":1.2,"p":6.0,"tol":-1,"L":10,"jobs":0}"#, Need::Point).unwrap_err());
    assert_eq!(m.len(), 5, "{m:?}");
}

#[test]
fn unknown_keys_and_bad_json_rejected() {
    let m = messages(ConfigFile::parse(r#"{"n":3,"s":0.5,"colour":1}"#).unwrap_err());
    assert!(m[0].contains("colour"), "{m:?}");
    assert!(ConfigFile::parse("{n:3}").is_err());
}

#[test]
fn flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    fs::write(&path, r#"{"n":3,"s":0.5,"alpha":0.0,"p":2.5,"seed":7}"#).unwrap();
    let flags = ConfigFile { p: Some(2.2), ..ConfigFile::default() };
    let c = parse_config(Some(&path), flags, Need::Point).unwrap();
    assert_eq!(c.params.unwrap().p, 2.2);
    assert_eq!(c.seed, 7);
}

#[test]
fn ranges_parse() {
    assert_eq!(parse_range("0:0.3:0.1").unwrap().len(), 4);
    assert_eq!(parse_range("-0.9,-0.8,0").unwrap(), vec![-0.9, -0.8, 0.0]);
    assert!(parse_range("1:0:0.1").is_err());
    assert!(parse_range("0:1").is_err());
    let c = cfg(r#"{"n":3,"s":0.5,"alpha_grid":"0:0.3:0.1","p_grid":"2.5,x"}"#, Need::Sweep);
    assert!(messages(c.unwrap_err())[0].starts_with("p_grid"));
}

fn solved(p: f64) -> (fckn::cylcore::CylGrid, fckn::solver::MinimizerResult) {
    let pr = Params::new(3, 0.5, p, 0.0).unwrap();
    let g = default_grid(&pr).unwrap();
    (g, solve_ground_state(&pr, g, &SolveOpts::default()).unwrap())
}

fn row(p: f64) -> ChartRow {
    ChartRow { alpha: 0.0, p, quotient: Some(1.0 / 3.0), nu1: Some(0.1 + 0.2), mu2: None, class: "radial-stable".into() }
}

#[test]
fn cache_roundtrip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::new(dir.path());
    let (g, res) = solved(2.5);
    let pr = res.params;
    cache.store(&g, &res.profile, &row(2.5), 3).unwrap();
    match cache.lookup(&pr, &g) {
        Lookup::Hit(p, e) => {
            let diff = p.values.iter().zip(&res.profile.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert_eq!(diff, 0.0);
            assert_eq!(p.grid, res.profile.grid);
            assert_eq!(e.row, row(2.5));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn version_bump_forces_recompute() {
    let dir = tempfile::tempdir().unwrap();
    let (g, res) = solved(2.5);
    Cache::new(dir.path()).store(&g, &res.profile, &row(2.5), 0).unwrap();
    let bumped = Cache { dir: dir.path().to_path_buf(), version: format!("{SOLVER_VERSION}+1") };
    assert!(matches!(bumped.lookup(&res.params, &g), Lookup::Miss));
}

#[test]
fn corrupted_entry_is_discarded() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::new(dir.path());
    let (g, res) = solved(2.5);
    let e = cache.store(&g, &res.profile, &row(2.5), 0).unwrap();
    let path = dir.path().join(&e.profile);
    let text = fs::read_to_string(&path).unwrap().replacen('1', "2", 1);
    fs::write(&path, text).unwrap();
    assert!(matches!(cache.lookup(&res.params, &g), Lookup::Discarded(_)));
    assert!(!path.exists());
    assert!(matches!(cache.lookup(&res.params, &g), Lookup::Miss));
}

fn spec(alphas: Vec<f64>, ps: Vec<f64>, jobs: usize) -> SweepSpec {
    SweepSpec { order: Order::new(3, 0.5).unwrap(), alphas, ps, opts: SolveOpts::default(), grid: None, seed: 11, jobs }
}

#[test]
fn sweep_reruns_are_byte_identical() {
    let s = spec(vec![0.0, 0.3], vec![2.3, 2.5], 2);
    let a = chart_csv(&run_sweep(&s, None, None).unwrap().finished_rows());
    let b = chart_csv(&run_sweep(&spec(vec![0.0, 0.3], vec![2.3, 2.5], 1), None, None).unwrap().finished_rows());
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 5);
    assert!(a.starts_with("alpha,p,quotient,nu1,p_minus_1,mu2,class\n"));
}

#[test]
fn interrupted_sweep_resumes_to_same_chart() {
    let s = spec(vec![0.0, 0.3], vec![2.3, 2.5], 1);
    let full = chart_csv(&run_sweep(&s, None, None).unwrap().finished_rows());
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::new(dir.path());
    let first = run_sweep(&s, Some(&cache), Some(3)).unwrap();
    assert!(!first.complete());
    assert_eq!(first.computed, 3);
    let second = run_sweep(&s, Some(&cache), None).unwrap();
    assert!(second.complete());
    assert_eq!((second.cached, second.computed), (3, 1));
    assert_eq!(chart_csv(&second.finished_rows()), full);
}

#[test]
fn invalid_point_is_marked_and_others_computed() {
    let out = run_sweep(&spec(vec![0.0, 1.5], vec![2.5], 1), None, None).unwrap();
    let rows = out.finished_rows();
    assert_eq!(rows[1].class, "invalid-params");
    assert!(rows[1].quotient.is_none());
    assert!(rows[0].quotient.is_some() && rows[0].class == "radial-stable");
    assert_eq!(out.failures, 0);
    let csv = chart_csv(&rows);
    assert_eq!(csv.lines().nth(2).unwrap(), "1.5,2.5,,,1.5,,invalid-params");
}
