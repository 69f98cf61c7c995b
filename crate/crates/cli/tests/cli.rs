use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn armpipe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_armpipe"))
        .args(args)
        .output()
        .unwrap()
}

fn wine() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/wine.csv")
        .display()
        .to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: [&str; 8] = [
    "--outer-np",
    "6",
    "--outer-fes",
    "12",
    "--maxfes-min",
    "100",
    "--maxfes-max",
    "200",
];

#[test]
fn validate_reports_ragged_rows() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = write(dir.path(), "ragged.csv", "a,b\n1,2\n3\n");
    let out = armpipe(&["validate", "--dataset", ragged.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn validate_prints_schema() {
    let out = armpipe(&["validate", "--dataset", &wine(), "--drop", "Class"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.starts_with("178 transactions, 13 attributes"),
        "{text}"
    );
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(armpipe(&["experiment"]).status.code(), Some(2));
    assert_eq!(
        armpipe(&["experiment", "--dataset", "x", "--outer", "sgd"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(armpipe(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn help_lists_defaults() {
    let out = armpipe(&["experiment", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in [
        "--outer <OUTER>",
        "[default: de]",
        "[default: 30]",
        "[default: 1000]",
        "--weight-adaptation",
        "--max-preprocess",
        "[default: MM,ZS,DS,RHC,DK]",
        "--jobs",
        "--config",
    ] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
}

#[test]
fn search_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = wine();
    let mut outputs = Vec::new();
    for name in ["a.json", "b.json"] {
        let path = dir.path().join(name);
        let mut args = vec![
            "search",
            "--dataset",
            &data,
            "--weight-adaptation",
            "false",
            "--seed",
            "9",
        ];
        args.extend(SMALL);
        let p = path.display().to_string();
        args.extend(["--out", &p]);
        let out = Command::new(env!("CARGO_BIN_EXE_armpipe"))
            .args(&args)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push(std::fs::read(path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let run: serde_json::Value = serde_json::from_slice(&outputs[0]).unwrap();
    assert!(run["best_fitness"].as_f64().unwrap() > 0.0);
    assert!(run.get("wall_time").is_none());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "exp.cfg",
        &format!(
            "# small experiment\ndataset = {}\nruns = 4\nouter_np = 6\nouter-fes = 12\nmaxfes-min = 100\nmaxfes-max = 200\nseed = 5\nformat = csv\ntiming = false\n",
            wine()
        ),
    );
    let out_path = dir.path().join("r.csv");
    let out = armpipe(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--runs",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&out_path).unwrap();
    // header plus one row per run; --runs on the command line wins
    assert_eq!(csv.lines().count(), 3, "{csv}");
    assert!(csv.starts_with("run,seed,best_fitness,"));
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("runs: 2"), "{summary}");
}

#[test]
fn config_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "runs = 3\noutre-np = 5\n");
    let out = armpipe(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--dataset",
        &wine(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("outre-np"), "{err}");
}

#[test]
fn compare_two_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for (name, outer) in [("de.json", "de"), ("pso.csv", "pso")] {
        let p = dir.path().join(name).display().to_string();
        let format = if name.ends_with("csv") { "csv" } else { "json" };
        let data = wine();
        let mut args = vec![
            "experiment",
            "--dataset",
            &data,
            "--runs",
            "6",
            "--outer",
            outer,
            "--format",
            format,
        ];
        args.extend(SMALL);
        args.extend(["--out", &p]);
        let out = Command::new(env!("CARGO_BIN_EXE_armpipe"))
            .args(&args)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        paths.push(p);
    }
    let out = armpipe(&["compare", &paths[0], &paths[1], "--json"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = r["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert!(r["n_effective"].as_u64().unwrap() <= 6);

    let out = armpipe(&["compare", &paths[0], &paths[0]]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mine_fixed_pipeline() {
    let out = armpipe(&[
        "mine",
        "--dataset",
        &wine(),
        "--algorithm",
        "jDE",
        "--np",
        "10",
        "--maxfes",
        "500",
        "--preprocess",
        "MM,RHC",
        "--metrics",
        "Supp,Conf,Amp",
        "--weights",
        "1,0.5,0.25",
        "--seed",
        "3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["spec"]["algorithm"], "jDE");
    assert_eq!(r["spec"]["preprocessing"], serde_json::json!(["MM", "RHC"]));
    assert_eq!(r["spec"]["weights"]["Amp"], 0.25);
    assert_eq!(
        r["rules"].as_array().unwrap().len() as u64,
        r["rule_count"].as_u64().unwrap()
    );

    let out = armpipe(&[
        "mine",
        "--dataset",
        &wine(),
        "--algorithm",
        "DE",
        "--metrics",
        "Supp",
        "--weights",
        "1,2",
    ]);
    assert_eq!(out.status.code(), Some(1));
}
