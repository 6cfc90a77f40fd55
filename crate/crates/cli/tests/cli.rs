//! End-to-end binary tests: flag validation, exit codes, file outputs, and
//! reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_treegibbs"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_dir_sorted(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn sample_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = run(&[
            "sample",
            "--beta",
            "1.0",
            "--depth",
            "5",
            "--boundary",
            "plus",
            "--seed",
            "7",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read_dir_sorted(&a), vec!["image_0000.csv", "spin_0000.csv"]);
    for name in read_dir_sorted(&a) {
        let x = std::fs::read(a.join(&name)).unwrap();
        let y = std::fs::read(b.join(&name)).unwrap();
        assert_eq!(x, y, "{name} differs between reruns");
    }
}

#[test]
fn sample_reruns_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        let out = bin()
            .env("TREEGIBBS_THREADS", threads)
            .args([
                "sample", "--beta", "0.6", "--depth", "4", "--seed", "11", "--replicas", "3",
                "--out", dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    for name in read_dir_sorted(&a) {
        assert_eq!(
            std::fs::read(a.join(&name)).unwrap(),
            std::fs::read(b.join(&name)).unwrap()
        );
    }
}

#[test]
fn sample_negative_beta_exits_2_naming_the_flag() {
    let out = run(&["sample", "--beta", "-1", "--depth", "4"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--beta"), "stderr was: {err}");
}

#[test]
fn sample_replicas_emit_indexed_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "sample",
        "--beta",
        "0.5",
        "--depth",
        "3",
        "--replicas",
        "3",
        "--seed",
        "1",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        read_dir_sorted(tmp.path()),
        vec![
            "image_0000.csv",
            "image_0001.csv",
            "image_0002.csv",
            "spin_0000.csv",
            "spin_0001.csv",
            "spin_0002.csv"
        ]
    );
    // replicas must actually differ
    let s0 = std::fs::read(tmp.path().join("spin_0000.csv")).unwrap();
    let s1 = std::fs::read(tmp.path().join("spin_0001.csv")).unwrap();
    assert_ne!(s0, s1);
}

#[test]
fn percolation_csv_header_is_exact() {
    let out = run(&[
        "percolation",
        "--beta",
        "0.5",
        "--depth",
        "4",
        "--replicas",
        "50",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "beta,R,p_zero,survival_freq,mean_NR,model_mean"
    );
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn percolation_grid_and_theta_columns() {
    let out = run(&[
        "percolation",
        "--beta-grid",
        "0:0.4:0.2",
        "--depth",
        "4",
        "--replicas",
        "50",
        "--seed",
        "3",
        "--theta",
        "0.5",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "beta,R,p_zero,survival_freq,mean_NR,model_mean,mgf_emp_0.5,mgf_model_0.5"
    );
    assert_eq!(text.lines().count(), 4); // header + betas 0, 0.2, 0.4
}

#[test]
fn chain_csv_shape() {
    let out = run(&["chain", "--env", "++-+", "--beta", "0.8", "--R", "30"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,x_n,y_n,abs_diff_n,bound_n");
    assert_eq!(lines.len(), 31);
    // gaps must eventually shrink below the printed bound
    let last: Vec<&str> = lines[30].split(',').collect();
    let gap: f64 = last[3].parse().unwrap();
    let bound: f64 = last[4].parse().unwrap();
    assert!(gap <= bound && gap < 1e-6, "gap {gap}, bound {bound}");
}

#[test]
fn chain_rejects_alternating_environment() {
    let out = run(&["chain", "--env", "++-", "--beta", "0.8", "--R", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn magnetization_table_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let eta = tmp.path().join("eta.csv");
    std::fs::write(&eta, "address,value\nr,?\n0,0\n1,0\n00,0\n01,0\n10,0\n11,0\n").unwrap();
    let out = run(&["magnetization", "--eta", eta.to_str().unwrap(), "--beta", "1.0"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "R,D,m_plus,m_minus,gap");
    assert_eq!(text.lines().count(), 3); // R = 1, 2

    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "not,a\nvalid,image\n").unwrap();
    let out = run(&["magnetization", "--eta", bad.to_str().unwrap(), "--beta", "1.0"]);
    assert_eq!(out.status.code(), Some(2));

    // +1 at "1" with -1 at its child "10" contradicts the overlapping cells
    let infeasible = tmp.path().join("infeasible.csv");
    std::fs::write(
        &infeasible,
        "address,value\nr,?\n0,0\n1,1\n00,0\n01,0\n10,-1\n11,0\n",
    )
    .unwrap();
    let out = run(&[
        "magnetization",
        "--eta",
        infeasible.to_str().unwrap(),
        "--beta",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn config_file_supplies_defaults_but_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"beta": 0.5, "depth": 4, "replicas": 50, "seed": 3}"#).unwrap();
    let from_cfg = run(&["--config", cfg.to_str().unwrap(), "percolation"]);
    assert!(from_cfg.status.success(), "{}", String::from_utf8_lossy(&from_cfg.stderr));
    let explicit = run(&[
        "percolation", "--beta", "0.5", "--depth", "4", "--replicas", "50", "--seed", "3",
    ]);
    assert_eq!(from_cfg.stdout, explicit.stdout);

    // flag overrides the config value
    let overridden = bin()
        .args(["--config", cfg.to_str().unwrap(), "percolation", "--beta", "0.9"])
        .output()
        .unwrap();
    let text = String::from_utf8(overridden.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("0.9,"));
}

#[test]
fn json_output_mirrors_field_names() {
    let out = run(&[
        "percolation",
        "--beta",
        "0.5",
        "--depth",
        "4",
        "--replicas",
        "50",
        "--seed",
        "3",
        "--output",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = &v.as_array().unwrap()[0];
    for key in ["beta", "R", "p_zero", "survival_freq", "mean_NR", "model_mean"] {
        assert!(row.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn verify_quick_passes() {
    let out = run(&["verify", "--quick"]);
    assert!(
        out.status.success(),
        "verify --quick failed:\n{}",
        String::from_utf8_lossy(&out.stdout)
    );
}
