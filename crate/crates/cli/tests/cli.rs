use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_robust-xbar"));
    c.env_remove("SPC_FACTORS");
    c
}

fn piston_rings() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/piston_rings.csv")
}

fn run(c: &mut Command) -> Output {
    c.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn limits_csv_and_json() {
    let o = run(bin().args(["limits", "--nk", "5", "--format", "csv", "--data"]).arg(piston_rings()));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,pooling,n_k,g,mu_hat,sigma_hat,lcl,cl,ucl");
    assert_eq!(lines.len(), 4);
    let ucl: f64 = lines[1].split(',').nth(8).unwrap().parse().unwrap();
    assert!((ucl - 74.01457).abs() < 5e-5);

    let o = run(bin().args(["limits", "--nk", "5", "--method", "II", "--pooling", "D", "--data"]).arg(piston_rings()));
    // N = 113 is beyond the built-in table, so pooled-data MAD has no c5(N)
    assert_eq!(o.status.code(), Some(4));

    let o = run(bin().args(["limits", "--nk", "5", "--method", "I", "--pooling", "B", "--data"]).arg(piston_rings()));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["estimate"]["pooling"], "B");
    assert_eq!(v[0]["subgroup_means"].as_array().unwrap().len(), 25);
}

#[test]
fn limits_svg_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chart.svg");
    let o = run(bin()
        .args(["limits", "--nk", "5", "--method", "III", "--format", "svg", "--data"])
        .arg(piston_rings())
        .arg("--out")
        .arg(&out));
    assert!(o.status.success());
    let svg = std::fs::read_to_string(&out).unwrap();
    assert!(svg.starts_with("<svg") && svg.matches("<circle").count() == 25);

    let o = run(bin().args(["limits", "--nk", "5", "--format", "svg", "--data"]).arg(piston_rings()));
    assert_eq!(o.status.code(), Some(2), "svg with three methods is a usage error");
}

#[test]
fn exit_codes() {
    let o = run(bin().args(["limits", "--nk", "5", "--data", "/nonexistent.csv"]));
    assert_eq!(o.status.code(), Some(3));
    let o = run(bin().args(["limits", "--nk", "5", "--method", "IV", "--data"]).arg(piston_rings()));
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "sample_id,value\n1,1.0\n1,abc\n").unwrap();
    let o = run(bin().args(["limits", "--nk", "5", "--data"]).arg(&bad));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn factors_command_and_env_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("small.json");
    let o = run(bin()
        .args(["factors", "--estimators", "median,mad", "--n-min", "2", "--n-max", "4", "--reps", "10000", "--out"])
        .arg(&table));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let again = dir.path().join("again.json");
    run(bin()
        .args(["factors", "--estimators", "median,mad", "--n-min", "2", "--n-max", "4", "--reps", "10000", "--out"])
        .arg(&again));
    assert_eq!(std::fs::read(&table).unwrap(), std::fs::read(&again).unwrap());

    // the small table stops at n = 4
    let o = run(bin()
        .args(["limits", "--nk", "5", "--method", "II", "--data"])
        .arg(piston_rings())
        .env("SPC_FACTORS", &table));
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n = 5"));

    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&table).unwrap()).unwrap();
    doc["entries"][1]["gamma"] = serde_json::json!(0.5);
    std::fs::write(&table, doc.to_string()).unwrap();
    let o = run(bin()
        .args(["limits", "--nk", "5", "--method", "I", "--data"])
        .arg(piston_rings())
        .arg("--factors")
        .arg(&table));
    assert_eq!(o.status.code(), Some(4), "edited table fails its checksum");
}

#[test]
fn simulate_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("re.cfg");
    std::fs::write(
        &cfg,
        "scenario = d\nmu0 = 100\nsigma0 = 10\nreplications = 500\nseed = 3\ncontamination = 2:last:100\n",
    )
    .unwrap();
    for stem in ["a", "b"] {
        let o = run(bin().args(["simulate-re", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join(stem)));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for ext in ["a.json", "a.csv"] {
        let other = ext.replace('a', "b");
        assert_eq!(
            std::fs::read(dir.path().join(ext)).unwrap(),
            std::fs::read(dir.path().join(other)).unwrap()
        );
    }
    let csv = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert!(csv.starts_with("measure,pooling,mean,median"));

    let arl = dir.path().join("arl.json");
    std::fs::write(
        &arl,
        r#"{"plan": 5, "mu0": 100, "sigma0": 5, "replications": 300, "seed": 1, "methods": ["I", "III"], "nk": 10}"#,
    )
    .unwrap();
    let o = run(bin().args(["simulate-arl", "--config"]).arg(&arl).arg("--out").arg(dir.path().join("rl")));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rl = std::fs::read_to_string(dir.path().join("rl.csv")).unwrap();
    assert_eq!(rl.lines().count(), 1 + 2 * 3);

    std::fs::write(&cfg, "plan = 1\nnk = ten\n").unwrap();
    let o = run(bin().args(["simulate-arl", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("x")));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn sensitivity_sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("sweep.svg");
    let o = run(bin()
        .args(["sensitivity", "--start", "73", "--stop", "74", "--step", "0.1", "--sample", "1", "--nk", "5", "--data"])
        .arg(piston_rings())
        .arg("--svg")
        .arg(&svg));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 11 * 3);
    assert!(text.lines().nth(1).unwrap().starts_with("73,I,"));
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<polyline").count(), 9);

    let o = run(bin()
        .args(["sensitivity", "--start", "73", "--stop", "74", "--step", "0.5", "--sample", "2", "--replace", "9", "--nk", "5", "--data"])
        .arg(piston_rings()));
    assert_eq!(o.status.code(), Some(3), "sample 2 has three observations");
}
