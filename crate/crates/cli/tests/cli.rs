use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aroc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aroc"))
        .args(args)
        .current_dir(dir)
        .env_remove("AROC_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn generate(dir: &Path) {
    ok(&aroc(
        &[
            "generate",
            "--scenario",
            "I",
            "--sizes",
            "80",
            "80",
            "--seed",
            "7",
            "-o",
            "data.csv",
        ],
        dir,
    ));
}

const FIT: &[&str] = &[
    "fit-bnp",
    "-i",
    "data.csv",
    "-f",
    "y ~ s(x1, K=2)",
    "--nsim",
    "400",
    "--nburn",
    "100",
    "--t0",
    "0.1,0.3",
];

#[test]
fn fit_output_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let mut a = FIT.to_vec();
    a.extend(["-o", "a.json", "--curve-csv", "a.csv", "--threads", "1"]);
    ok(&aroc(&a, dir.path()));
    let mut b = FIT.to_vec();
    b.extend(["-o", "a2.json", "--curve-csv", "a2.csv", "--threads", "3"]);
    ok(&aroc(&b, dir.path()));
    let ja = fs::read_to_string(dir.path().join("a.json")).unwrap();
    let jb = fs::read_to_string(dir.path().join("a2.json")).unwrap();
    // only the echoed output paths differ
    let strip = |text: &str| {
        let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
        v["config"]["output"] = serde_json::Value::Null;
        serde_json::to_string_pretty(&v).unwrap()
    };
    assert_eq!(strip(&ja), strip(&jb));
    assert_eq!(ja.lines().count(), jb.lines().count());
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("a2.csv")).unwrap()
    );

    let v: serde_json::Value = serde_json::from_str(&ja).unwrap();
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["command"], "fit-bnp");
    assert!(v.get("runtime_seconds").is_none());
    assert_eq!(v["aroc"]["paauc"].as_array().unwrap().len(), 2);
    let aauc = v["aroc"]["aauc"]["mean"].as_f64().unwrap();
    assert!(aauc > 0.4 && aauc < 0.9, "{aauc}");
    let csv = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert!(csv.starts_with("t,mean,lower,upper\n"));
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["generate", "--scenario", "VI", "--sizes", "30", "40", "--seed", "11"];
    let a = aroc(&args, dir.path());
    let b = aroc(&args, dir.path());
    ok(&a);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("y,status,x1,x3\n"));
    assert_eq!(text.lines().count(), 71);
}

#[test]
fn replay_reproduces_saved_configuration() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let mut a = FIT.to_vec();
    a.extend(["-o", "run.json"]);
    ok(&aroc(&a, dir.path()));
    let first = fs::read(dir.path().join("run.json")).unwrap();
    fs::copy(dir.path().join("run.json"), dir.path().join("saved.json")).unwrap();
    fs::remove_file(dir.path().join("run.json")).unwrap();
    ok(&aroc(&["replay", "saved.json"], dir.path()));
    assert_eq!(fs::read(dir.path().join("run.json")).unwrap(), first);

    // a bare config (the `config` object alone) replays too
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let mut cfg = v["config"].clone();
    cfg["output"]["output"] = serde_json::Value::Null;
    fs::write(dir.path().join("bare.json"), cfg.to_string()).unwrap();
    let out = aroc(&["replay", "bare.json"], dir.path());
    ok(&out);
    let replayed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(replayed["aroc"], v["aroc"]);
}

#[test]
fn malformed_csv_reports_line_and_exits_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "y,status,x1\n1.0,0,2\n2.0,1,oops\n").unwrap();
    let out = aroc(
        &[
            "fit-bnp", "-i", "bad.csv", "-f", "y ~ x1", "--nsim", "20", "--nburn", "5",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:3"), "{err}");
    assert!(err.contains("x1"), "{err}");

    fs::write(dir.path().join("nocol.csv"), "y,status\n1,0\n2,1\n").unwrap();
    let out = aroc(&["fit-bnp", "-i", "nocol.csv", "-f", "y ~ x1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing column `x1`"));

    fs::write(dir.path().join("onegroup.csv"), "y,status,x1\n1,0,2\n2,0,3\n").unwrap();
    let out = aroc(&["fit-bnp", "-i", "onegroup.csv", "-f", "y ~ x1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    for formula in ["y ~ s(x1", "y ~ t(x1)", "y x1"] {
        let out = aroc(&["fit-bnp", "-i", "data.csv", "-f", formula], dir.path());
        assert_eq!(out.status.code(), Some(1), "{formula}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("formula"));
    }
    let out = aroc(&["fit-bsp", "-i", "data.csv", "-f", "y ~ s(x1)"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = aroc(
        &[
            "fit-bnp", "-i", "data.csv", "-f", "y ~ x1", "--nsim", "10", "--nburn", "10",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let out = aroc(&["simulate", "--scenario", "VII"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = aroc(
        &[
            "simulate",
            "--scenario",
            "V",
            "--estimator",
            "kernel",
            "--replicates",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let out = aroc(&["no-such-command"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_writes_aggregate_and_replicate_rows() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--scenario",
        "I",
        "--sizes",
        "60",
        "60",
        "--estimator",
        "bsp",
        "--replicates",
        "3",
        "--nsim",
        "300",
        "--nburn",
        "100",
        "--csv",
        "reps.csv",
        "--truth-cache",
        "truth",
    ];
    let out = aroc(&args, dir.path());
    ok(&out);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["summary"]["completed"], 3);
    let t = v["summary"]["true_aauc"].as_f64().unwrap();
    assert!((t - 0.6726).abs() < 1e-3, "{t}");
    let csv = fs::read_to_string(dir.path().join("reps.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.path().join("truth/aroc_truth_v2_I_101.json").exists());

    // the cached truth is reused and the study is reproducible
    let again = aroc(&args, dir.path());
    ok(&again);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn runtime_is_reported_only_on_request() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let out = aroc(
        &["pooled", "-i", "data.csv", "--iterations", "50", "--report-runtime"],
        dir.path(),
    );
    ok(&out);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["runtime_seconds"].as_f64().unwrap() >= 0.0);
    let auc = v["empirical"]["auc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc));
}
