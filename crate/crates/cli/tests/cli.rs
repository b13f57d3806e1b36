use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_farey-thermo"))
        .args(args)
        .env_remove("FAREY_THERMO_PRECISION_BITS")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn midpoint(json: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    v["midpoint"].as_f64().unwrap()
}

#[test]
fn farey_listing() {
    assert_eq!(stdout(&["farey", "--n", "2"]).trim(), "1/0, 2/1, 1/1, 1/2, 0/1");
    assert_eq!(stdout(&["farey", "--n", "0"]).trim(), "1/0, 0/1");
    let csv = stdout(&["farey", "--n", "3", "--format", "csv"]);
    assert_eq!(csv.lines().count(), 1 + 9);
    assert_eq!(code(&["farey", "--n", "31"]), 3);
}

#[test]
fn cf_expansions() {
    let s = stdout(&["cf", "--surd", "0,1,2", "--depth", "6"]);
    assert_eq!(s.lines().next().unwrap(), "[1;2,2,2,2,2] (period: 2)");
    let e = stdout(&["cf", "--named", "e_minus_1", "--depth", "9"]);
    assert_eq!(e.lines().next().unwrap(), "[1;1,2,1,1,4,1,1,6]");
    let r = stdout(&["cf", "--rational", "7/3"]);
    assert_eq!(r.lines().next().unwrap(), "[2;3]");
    let csv = stdout(&["cf", "--named", "golden", "--depth", "5", "--format", "csv"]);
    assert_eq!(csv.lines().last().unwrap(), "4,1,8,5,5");
}

#[test]
fn cf_stops_at_digit_cap() {
    let s = stdout(&["cf", "--construct", "thm43", "--depth", "10"]);
    assert!(s.starts_with("[1;2,8,34271896307633]"));
    assert!(s.contains("# stopped after 4 quotients"));
}

#[test]
fn partition_values() {
    let d = stdout(&["partition", "--kind", "dioph", "--surd", "0,1,2", "--N", "1", "--beta", "2", "--format", "json"]);
    assert!((midpoint(&d) - (3.5 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
    let k = stdout(&["partition", "--kind", "knauf", "--N", "1", "--beta", "3", "--format", "json"]);
    assert!((midpoint(&k) - 1.125).abs() < 1e-14);
    let f = stdout(&["partition", "--kind", "fk", "--x", "1", "--N", "2", "--beta", "2", "--format", "json"]);
    assert!((midpoint(&f) - 0.205).abs() < 1e-14);
}

#[test]
fn fk_at_zero_is_knauf() {
    for n in ["3", "6"] {
        let k = stdout(&["partition", "--kind", "knauf", "--N", n, "--beta", "2.5", "--format", "json"]);
        let f = stdout(&["partition", "--kind", "fk", "--x", "0", "--N", n, "--beta", "2.5", "--format", "json"]);
        let s = stdout(&["partition", "--kind", "knauf", "--form", "set", "--N", n, "--beta", "2.5", "--format", "json"]);
        assert!((midpoint(&k) - midpoint(&f)).abs() < 1e-12 * midpoint(&k));
        assert!(midpoint(&s) < midpoint(&k));
    }
}

#[test]
fn term_listing() {
    let csv = stdout(&["partition", "--kind", "dioph", "--surd", "0,1,2", "--N", "3", "--beta", "2", "--terms"]);
    assert!(csv.starts_with("word,p,q,"));
    assert_eq!(csv.lines().count(), 1 + 8);
}

#[test]
fn free_energy_series_csv() {
    let csv = stdout(&["free-energy", "--named", "golden", "--beta", "2", "--n-range", "1..4"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "N_or_m,lower,upper,midpoint,scale_tag");
    assert_eq!(lines.count(), 4);
    let est = stdout(&["free-energy", "--named", "golden", "--depth", "30", "--estimator", "increment"]);
    let last: Vec<&str> = est.lines().last().unwrap().split(',').collect();
    let mid: f64 = last[3].parse().unwrap();
    assert!((mid - 0.5f64.mul_add(5f64.sqrt(), 0.5).ln()).abs() < 1e-10);
}

#[test]
fn diagnostic_needs_a_construction() {
    assert_eq!(code(&["free-energy", "--named", "golden", "--beta", "3", "--estimator", "diagnostic"]), 2);
    let csv = stdout(&["free-energy", "--construct", "thm43", "--beta", "3", "--estimator", "diagnostic", "--depth", "6"]);
    assert!(csv.lines().nth(1).unwrap().ends_with("ln:diagnostic_thm43"));
}

#[test]
fn classify_verdicts() {
    let g: serde_json::Value = serde_json::from_str(&stdout(&["classify", "--named", "golden", "--beta", "3"])).unwrap();
    assert_eq!(g["one_free_energy"]["verdict"], "supported");
    let t: serde_json::Value = serde_json::from_str(&stdout(&["classify", "--construct", "thm43", "--beta", "3"])).unwrap();
    assert_eq!(t["one_free_energy"]["verdict"], "refuted");
    let e: serde_json::Value = serde_json::from_str(&stdout(&["classify", "--named", "e_minus_1", "--beta", "3"])).unwrap();
    assert_eq!(e["fitted_scale"], "sqrtN_logN");
    let text = stdout(&["classify", "--named", "golden", "--beta", "3", "--format", "text"]);
    assert!(text.contains("one_free_energy: supported"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["partition", "--kind", "knauf", "--N", "3"]), 2);
    assert_eq!(code(&["partition", "--kind", "fk", "--N", "3", "--beta", "2"]), 2);
    assert_eq!(code(&["partition", "--kind", "dioph", "--N", "3", "--beta", "2"]), 2);
    assert_eq!(code(&["partition", "--kind", "knauf", "--N", "40", "--beta", "2"]), 3);
    assert_eq!(code(&["classify", "--named", "golden", "--beta", "1"]), 2);
    assert_eq!(code(&["cf", "--rational", "1/0"]), 2);
    assert_eq!(code(&["farey", "--n", "2", "--config", "/nonexistent/farey.conf"]), 8);
    // clap's own usage errors
    assert_eq!(code(&["cf", "--rational", "1/2", "--golden"]), 2);
}

#[test]
fn config_file_and_precedence() {
    let dir = std::env::temp_dir().join(format!("farey-thermo-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.conf");
    std::fs::write(&cfg, "# test\nbeta = 3\nformat = json\n").unwrap();
    let c = cfg.to_str().unwrap();
    let v = stdout(&["partition", "--kind", "knauf", "--N", "1", "--config", c]);
    assert!((midpoint(&v) - 1.125).abs() < 1e-14);
    let v = stdout(&["partition", "--kind", "knauf", "--N", "1", "--beta", "2", "--config", c]);
    assert!((midpoint(&v) - 1.25).abs() < 1e-14);
    std::fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(code(&["farey", "--n", "1", "--config", c]), 2);
    let out = dir.join("farey.txt");
    stdout(&["farey", "--n", "1", "--output", out.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(&out).unwrap().trim(), "1/0, 1/1, 0/1");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn precision_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_farey-thermo"))
        .args(["partition", "--kind", "knauf", "--N", "2", "--beta", "2", "--format", "json"])
        .env("FAREY_THERMO_PRECISION_BITS", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_farey-thermo"))
        .args(["partition", "--kind", "knauf", "--N", "2", "--beta", "2", "--format", "json"])
        .env("FAREY_THERMO_PRECISION_BITS", "256")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn threads_do_not_change_output() {
    let args = ["partition", "--kind", "dioph", "--named", "golden", "--N", "14", "--beta", "2.5", "--format", "json"];
    let one = stdout(&[&args[..], &["--threads", "1"]].concat());
    let many = stdout(&[&args[..], &["--threads", "8"]].concat());
    assert_eq!(one, many);
}
