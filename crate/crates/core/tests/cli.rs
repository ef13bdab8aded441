use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fair-coreset"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(path: &Path, body: &str) {
    fs::write(path, body).unwrap();
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cli(&[]).status.code(), Some(2));
    assert_eq!(cli(&["build", "--input", "x.csv"]).status.code(), Some(2));
    assert_eq!(cli(&["eval", "--z", "3"]).status.code(), Some(2));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}

#[test]
fn build_validate_eval() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let out = cli(&["synth", "--n", "300", "--profiles", "2", "--seed", "4", "--output", p(&data)]);
    assert!(out.status.success(), "{out:?}");

    let coreset = dir.path().join("coreset.csv");
    let common = ["--input", p(&data), "--features", "x0,x1", "--groups", "group"];
    let mut args = vec!["build"];
    args.extend(common);
    args.extend(["--k", "3", "--z", "2", "--epsilon", "0.3", "--seed", "1", "--output", p(&coreset)]);
    let out = cli(&args);
    assert!(out.status.success(), "{out:?}");
    assert!(coreset.with_extension("csv.json").exists());

    let mut args = vec!["validate"];
    args.extend(common);
    args.extend(["--coreset", p(&coreset)]);
    let out = cli(&args);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).starts_with("ok"));

    // A dataset the coreset was not built from fails validation.
    let other = dir.path().join("other.csv");
    cli(&["synth", "--n", "300", "--profiles", "2", "--seed", "5", "--output", p(&other)]);
    let out = cli(&["validate", "--input", p(&other), "--features", "x0,x1", "--groups", "group", "--coreset", p(&coreset)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("checksum"));

    let f = dir.path().join("f.csv");
    let c = dir.path().join("c.csv");
    let sizes: Vec<usize> = {
        let text = fs::read_to_string(&data).unwrap();
        let g0 = text.lines().skip(1).filter(|l| l.ends_with(",g0")).count();
        vec![g0, 300 - g0]
    };
    write(
        &f,
        &format!("cluster,profile,mass\n0,0,{}\n1,0,{}\n1,1,{}\n", sizes[0] / 2, sizes[0] - sizes[0] / 2, sizes[1]),
    );
    write(&c, "x0,x1\n0,0\n5,5\n");
    let mut args = vec!["eval"];
    args.extend(common);
    args.extend(["--constraint", p(&f), "--centers", p(&c), "--z", "2"]);
    let full = cli(&args);
    assert!(full.status.success(), "{full:?}");
    args.extend(["--coreset", p(&coreset)]);
    let small = cli(&args);
    assert!(small.status.success(), "{small:?}");
    let value = |o: &Output| -> f64 { stdout(o).trim().strip_prefix("objective ").unwrap().parse().unwrap() };
    let (kx, ks) = (value(&full), value(&small));
    assert!((ks / kx - 1.0).abs() <= 0.3, "{kx} vs {ks}");
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write(&data, "a,b\n1,2\n3,4\n");
    let out = cli(&[
        "build", "--input", p(&data), "--features", "a,c", "--k", "2", "--z", "1", "--epsilon", "0.2", "--output",
        p(&dir.path().join("o.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("column not found: c"));
}

#[test]
fn bench_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    cli(&["synth", "--n", "200", "--seed", "2", "--output", p(&data)]);
    let base = dir.path().join("report");
    let out = cli(&[
        "bench", "--input", p(&data), "--features", "x0,x1", "--groups", "group", "--k", "2", "--z", "1", "--epsilons",
        "0.2,0.4", "--trials", "3", "--normalize", "--seed", "1", "--output", p(&base),
    ]);
    assert!(out.status.success(), "{out:?}");
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
    assert_eq!(json["header"]["normalized"], true);

    // The same run from a JSON config.
    let cfg = dir.path().join("cfg.json");
    let base2 = dir.path().join("report2");
    write(
        &cfg,
        &serde_json::json!({
            "input": data, "features": ["x0", "x1"], "groups": ["group"], "k": 2, "z": 1,
            "epsilons": [0.2, 0.4], "trials": 3, "normalize": true, "seed": 1, "output": base2
        })
        .to_string(),
    );
    let out = cli(&["bench", "--config", p(&cfg)]);
    assert!(out.status.success(), "{out:?}");
    let a: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report2.json")).unwrap()).unwrap();
    assert_eq!(a["rows"][0]["size"], json["rows"][0]["size"]);
    assert_eq!(a["rows"][1]["err_ours"], json["rows"][1]["err_ours"]);
}
