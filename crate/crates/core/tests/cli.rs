use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn qgc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgc")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn cluster_report_fields() {
    let iris = data("iris.csv");
    let r = json(&qgc(&["cluster", "--dataset", &iris, "--k", "10", "--max-iters", "20"]));
    assert_eq!(r["algorithm"], "QGC1PDL1");
    assert_eq!(r["n"], 150);
    assert_eq!(r["cluster_count"], 3);
    assert_eq!(r["labels"].as_array().unwrap().len(), 150);
    assert_eq!(r["total_payoff_history"].as_array().unwrap().len(), r["iterations"].as_u64().unwrap() as usize);
    assert!(r["accuracy"].as_f64().unwrap() > 0.5);
    assert!(r.get("wall_time_ms").is_none());
}

#[test]
fn timing_is_opt_in() {
    let iris = data("iris.csv");
    let r = json(&qgc(&["cluster", "--dataset", &iris, "--k", "5", "--max-iters", "3", "--timing"]));
    assert!(r["wall_time_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn zero_iterations_report() {
    let iris = data("iris.csv");
    let r = json(&qgc(&["cluster", "--dataset", &iris, "--k", "6", "--max-iters", "0"]));
    assert_eq!(r["iterations"], 0);
    assert_eq!(r["converged"], false);
    assert!(r["raw_accuracy"].as_f64().is_some());
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let iris = data("iris.csv");
    let out = qgc(&["cluster", "--dataset", &iris, "--k", "6", "--max-iters", "2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(r["config"]["k"], 6);
}

#[test]
fn trace_emits_one_line_per_step() {
    let wine = data("wine.csv");
    let out = qgc(&["trace", "--dataset", &wine, "--k", "7", "--standardize", "--max-iters", "12"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!lines.is_empty() && lines.len() <= 12);
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["t"], i + 1);
        assert!(l["total_payoff"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn sweep_rows_follow_grid_order() {
    let iris = data("iris.csv");
    let out = qgc(&[
        "sweep", "--dataset", &iris, "--k", "5,7", "--case", "1", "--payoff", "pd,sd", "--beta", "0.2,0.4", "--lrr", "l2",
        "--max-iters", "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "algorithm,k,case,payoff,beta,lrr,accuracy,iterations,converged,raw_clusters");
    let keys: Vec<(String, String, String)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string(), f[4].to_string())
        })
        .collect();
    let want = [
        ("QGC1PDL2", "5", "0.2"),
        ("QGC1PDL2", "7", "0.2"),
        ("QGC1SDL2", "5", "0.2"),
        ("QGC1SDL2", "7", "0.2"),
        ("QGC1SDL2", "5", "0.4"),
        ("QGC1SDL2", "7", "0.4"),
    ];
    let want: Vec<(String, String, String)> =
        want.iter().map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string())).collect();
    assert_eq!(keys, want);
}

#[test]
fn breast_missing_values_are_imputed() {
    let breast = data("breast.csv");
    let r = json(&qgc(&["cluster", "--dataset", &breast, "--k", "8", "--max-iters", "3", "--seed", "4"]));
    assert_eq!(r["n"], 699);
    assert_eq!(r["cluster_count"], 2);
}

#[test]
fn unlabelled_input_has_no_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("points.csv");
    let rows: String = (0..20).map(|i| format!("{},{}\n", i % 5, (i * 7) % 11)).collect();
    std::fs::write(&path, format!("x,y\n{rows}")).unwrap();
    let r = json(&qgc(&[
        "cluster", "--dataset", path.to_str().unwrap(), "--label-column", "none", "--clusters", "3", "--k", "4",
        "--max-iters", "2",
    ]));
    assert!(r["accuracy"].is_null());
    // merging never splits, so an underfull partition stays as is
    assert!(r["cluster_count"].as_u64().unwrap() <= 3);
}

#[test]
fn exit_codes() {
    let iris = data("iris.csv");
    // usage errors
    assert_eq!(qgc(&["cluster", "--dataset", &iris, "--case", "3"]).status.code(), Some(2));
    assert_eq!(qgc(&["cluster"]).status.code(), Some(2));
    assert_eq!(qgc(&["sweep", "--dataset", &iris, "--k", "9..4"]).status.code(), Some(2));
    assert_eq!(qgc(&["cluster", "--dataset", &iris, "--label-column", "x"]).status.code(), Some(2));
    // domain errors
    assert_eq!(qgc(&["cluster", "--dataset", &iris, "--k", "150"]).status.code(), Some(1));
    assert_eq!(qgc(&["cluster", "--dataset", &iris, "--payoff", "sd", "--beta", "0.7"]).status.code(), Some(1));
    assert_eq!(qgc(&["cluster", "--dataset", &iris, "--sigma=-1"]).status.code(), Some(1));
    assert_eq!(qgc(&["cluster", "--dataset", "/nonexistent.csv"]).status.code(), Some(1));
}
