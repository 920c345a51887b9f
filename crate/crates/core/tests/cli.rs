use std::process::{Command, Output};

fn dualrdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualrdm")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn meta(text: &str, key: &str) -> Option<String> {
    let prefix = format!("# {key}=");
    text.lines().find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn solve_dimer_is_tight() {
    let out = dualrdm(&["solve", "--toy", "hubbard-dimer", "--U", "4", "--fci", "--e-ref-hf", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("# generated_unix="));
    let e: f64 = meta(&text, "energy").unwrap().parse().unwrap();
    let fci: f64 = meta(&text, "e_ref_fci").unwrap().parse().unwrap();
    assert!(e <= fci + 1e-6 && fci - e < 1e-5, "{e} vs {fci}");
    let pct: f64 = meta(&text, "correlation_percent").unwrap().parse().unwrap();
    assert!((pct - 100.0).abs() < 1e-3);
    assert!(text.contains("step,kind,mu,delta,derivative,slope,inner_iterations"));
}

#[test]
fn solve_json_has_envelope() {
    let out = dualrdm(&["solve", "--toy", "hubbard-dimer", "--format", "json", "--no-confirm"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["data"]["status"], "converged");
    assert!(v["data"]["energy"].as_f64().unwrap() < 0.0);
    assert!(v["generated"]["unix"].is_u64());
}

#[test]
fn input_errors_exit_2() {
    let missing = dualrdm(&["solve", "--fcidump", "/no/such/file.dump"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/file.dump"));
    assert_eq!(dualrdm(&["solve"]).status.code(), Some(2));
    assert_eq!(dualrdm(&["solve", "--toy", "hubbard-dimer", "--bogus"]).status.code(), Some(2));
    assert_eq!(dualrdm(&["solve", "--toy", "hubbard-dimer", "--conditions", "Q,G"]).status.code(), Some(2));
    let cap = dualrdm(&["fci", "--toy", "random", "--norb", "20", "--nelec", "10", "--cap", "10"]);
    assert_eq!(cap.status.code(), Some(2));
}

#[test]
fn starting_below_optimum_exits_2() {
    let out = dualrdm(&["solve", "--toy", "hubbard-dimer", "--mu0", "-50", "--no-confirm"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inner_cap_reports_non_convergence() {
    let out = dualrdm(&["solve", "--toy", "hubbard-dimer", "--max-inner", "2", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(meta(&stdout(&out), "status").as_deref(), Some("failed"));
    assert!(meta(&stdout(&out), "error").is_some());
}

#[test]
fn curve_is_monotone_and_convex() {
    let out = dualrdm(&[
        "curve",
        "--toy",
        "hubbard-dimer",
        "--mu-min",
        "-1",
        "--mu-max",
        "2",
        "--points",
        "13",
        "--no-timestamp",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("mu,delta,derivative,error\n"));
    let pts: Vec<(f64, f64)> = rows(&text).iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    assert_eq!(pts.len(), 13);
    for w in pts.windows(2) {
        assert!(w[1].1 >= w[0].1 - 1e-7);
    }
    for w in pts.windows(3) {
        assert!(w[0].1 + w[2].1 - 2.0 * w[1].1 >= -1e-6);
    }
}

#[test]
fn dissociation_stays_below_fci() {
    let mut args = vec!["dissociate", "--fci", "--no-confirm", "--no-timestamp"];
    let items = [
        "u0=hubbard-dimer:t=1,U=0",
        "u2=hubbard-dimer:t=1,U=2",
        "u4=hubbard-dimer:t=1,U=4",
        "u8=hubbard-dimer:t=1,U=8",
    ];
    for it in &items {
        args.extend(["--item", it]);
    }
    let out = dualrdm(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("label,e_app,e_fci,gap,error\n"));
    let table = rows(&text);
    assert_eq!(table.len(), 4);
    for (row, label) in table.iter().zip(["u0", "u2", "u4", "u8"]) {
        assert_eq!(row[0], label);
        let (e, fci): (f64, f64) = (row[1].parse().unwrap(), row[2].parse().unwrap());
        assert!(e <= fci + 1e-6, "{label}: {e} > {fci}");
        assert!(row[4].is_empty());
    }
}

#[test]
fn dissociation_keeps_failed_rows() {
    let out = dualrdm(&[
        "dissociate",
        "--no-confirm",
        "--no-timestamp",
        "--item",
        "ok=hubbard-dimer:U=1",
        "--item",
        "bad=/missing.dump",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let table = rows(&stdout(&out));
    assert!(table[0][4].is_empty());
    assert!(!table[1][4].is_empty());
}

#[test]
fn fci_reports_dimer_energy_and_rdm() {
    let dir = tempfile::tempdir().unwrap();
    let rdm = dir.path().join("rdm.csv");
    let out = dualrdm(&["fci", "--toy", "hubbard-dimer", "--no-timestamp", "--rdm-out", rdm.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let energy: f64 = text.lines().find_map(|l| l.strip_prefix("energy,")).unwrap().parse().unwrap();
    assert!((energy - (2.0 - 8f64.sqrt())).abs() < 1e-10);
    let rdm = std::fs::read_to_string(rdm).unwrap();
    assert!(rdm.starts_with("p,q,r,s,value\n"));
    // Tr Γ = N(N-1)/2 over p<q.
    let trace: f64 =
        rows(&rdm).iter().filter(|r| r[0] == r[2] && r[1] == r[3]).map(|r| r[4].parse::<f64>().unwrap()).sum();
    assert!((trace - 1.0).abs() < 1e-10);
}

#[test]
fn check_passes_and_detects_corruption() {
    let out = dualrdm(&["check", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("suite,passed,cases,worst,tolerance\n"));
    assert_eq!(rows(&text).len(), 6);

    let bad = dualrdm(&["check", "--suite", "adjoint", "--corrupt-adjoint"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn check_seed_is_reproducible() {
    let a = dualrdm(&["check", "--seed", "12345", "--no-timestamp"]);
    let b = dualrdm(&["check", "--seed", "12345", "--no-timestamp"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn no_timestamp_is_byte_identical() {
    let args =
        ["solve", "--toy", "random", "--seed", "3", "--norb", "6", "--nelec", "2", "--no-timestamp", "--no-confirm"];
    let a = dualrdm(&args);
    let b = dualrdm(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# dimer\ntoy = hubbard-dimer\nU = 8\nno-timestamp = true\nno-confirm = true\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let from_file = stdout(&dualrdm(&["solve", "--config", cfg]));
    assert_eq!(meta(&from_file, "source").as_deref(), Some("hubbard-dimer:t=1,U=8"));
    assert!(!from_file.contains("generated_unix"));

    let overridden = stdout(&dualrdm(&["solve", "--config", cfg, "--U", "2"]));
    assert_eq!(meta(&overridden, "source").as_deref(), Some("hubbard-dimer:t=1,U=2"));

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "nonsense-key = 1\n").unwrap();
    assert_eq!(dualrdm(&["solve", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}
