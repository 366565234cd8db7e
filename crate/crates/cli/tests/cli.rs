use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn betacap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betacap"))
        .args(args)
        .env("BETACAP_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_dirs(base: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(base)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

#[test]
fn weights_csv() {
    let o = betacap(&["weights", "alpha(0)", "3", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,w_n"));
    for (n, line) in lines.enumerate() {
        let (idx, w) = line.split_once(',').unwrap();
        assert_eq!(idx, n.to_string());
        let want = if n == 0 { 1.0 } else { n as f64 };
        assert!((w.parse::<f64>().unwrap() - want).abs() < 1e-12, "{line}");
    }
}

#[test]
fn beta_json() {
    let o = betacap(&["beta", "dil(0.5)", "--N", "64", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["estimate"]["beta"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(v["N"], 64);
}

#[test]
fn capacity_closed_form_text() {
    let o = betacap(&["capacity", "phdisk(0.2,0.5)"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("M(cap) 0.5000000000"), "{}", stdout(&o));
}

#[test]
fn bad_inputs_exit_2() {
    assert_eq!(
        betacap(&["beta", "dil(0.5)", "--weights", "nope"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        betacap(&["capacity", "disk(0.9,0.5)"]).status.code(),
        Some(2)
    );
    assert_eq!(
        betacap(&["weights", "hardy", "3", "--format", "xml"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn numerical_failure_exit_1() {
    // a segment off every diameter has no closed form
    let o = betacap(&["capacity", "segment(0.1+0.1i,0.3+0.1i)"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn grid_dump() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("u.csv");
    let o = betacap(&[
        "capacity",
        "disk(0,0.5)",
        "--method",
        "grid",
        "--h",
        "1/128",
        "--grid-csv",
        file.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = fs::read_to_string(file).unwrap();
    assert!(csv.starts_with("x,y,u\n"));
    assert!(csv.lines().count() > 1000);
}

#[test]
fn verify_dilation_suite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.cfg");
    fs::write(
        &cfg,
        "# exact dilation law\n[r03]\nsymbol = dil(0.3)\n[r05]\nsymbol = dil(0.5)\n[r07]\nsymbol = dil(0.7)\nweights = hardy, alpha(1)\n",
    )
    .unwrap();
    let out = dir.path().join("reports");
    let o = betacap(&[
        "verify",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let runs = run_dirs(&out);
    assert_eq!(runs.len(), 1);
    let summary = fs::read_to_string(runs[0].join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("name,symbol,weight,beta,cap_method,cap,m_value,discrepancy,pass")
    );
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let r: f64 = cols[1]
            .trim_matches('"')
            .trim_start_matches("dil(")
            .trim_end_matches(")\"")
            .trim_end_matches(')')
            .parse()
            .unwrap();
        let beta: f64 = cols[3].parse().unwrap();
        assert!((beta - r).abs() < 1e-9, "{line}");
        assert_eq!(cols[8], "true");
    }
    assert!(runs[0].join("001-r03.json").exists());

    // a second run never overwrites the first
    let o = betacap(&[
        "verify",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(run_dirs(&out).len(), 2);
}

#[test]
fn verify_empty_suite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.cfg");
    fs::write(&cfg, "# nothing here\n").unwrap();
    let out = dir.path().join("r");
    let o = betacap(&[
        "verify",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let summary = fs::read_to_string(run_dirs(&out)[0].join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
}

#[test]
fn verify_unknown_key_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "symbol = dil(0.5)\nwieghts = hardy\n").unwrap();
    let o = betacap(&[
        "verify",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wieghts"));
}

#[test]
fn verify_failure_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fail.cfg");
    // capacity of a non-univalent image is refused, so the pairing fails
    fs::write(&cfg, "symbol = poly(0,0.3,0.2)\n").unwrap();
    let out = dir.path().join("r");
    let o = betacap(&[
        "verify",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let report = fs::read_to_string(run_dirs(&out)[0].join("001-experiment.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["pass"], false);
    assert!(v["capacities"][0]["error"].is_string());
}
