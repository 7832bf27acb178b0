use std::process::Command;

fn fckn(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fckn")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn constants_table_is_csv() {
    let (code, out, _) = fckn(&["constants", "--n", "3", "--s", "0.5", "--ell", "0", "--xi", "0"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[2], "ell,xi,lambda");
    let lambda: f64 = lines[3].split(',').nth(2).unwrap().parse().unwrap();
    assert!((lambda - 2.0 / std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn out_of_window_parameters_exit_two_with_every_message() {
    let (code, _, err) = fckn(&["solve", "--n", "3", "--s", "0.5", "--alpha", "1.2", "--p", "6", "--tol", "-1"]);
    assert_eq!(code, 2);
    assert!(err.contains("alpha = 1.2") && err.contains("p = 6") && err.contains("tol = -1"), "{err}");
}

#[test]
fn unknown_config_key_exits_two() {
    let path = std::env::temp_dir().join(format!("fckn-bad-{}.json", std::process::id()));
    std::fs::write(&path, r#"{"n":3,"s":0.5,"alpha":0,"p":2.5,"colour":"red"}"#).unwrap();
    let (code, _, err) = fckn(&["--config", path.to_str().unwrap(), "solve"]);
    std::fs::remove_file(&path).unwrap();
    assert_eq!(code, 2);
    assert!(err.contains("colour"), "{err}");
}

#[test]
fn verify_reports_json_keyed_by_check() {
    let (code, out, _) = fckn(&["verify", "ibp"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["criteria"]["8"]["pass"], true);
}

#[test]
fn unknown_check_is_a_config_error() {
    assert_eq!(fckn(&["verify", "99"]).0, 2);
}
