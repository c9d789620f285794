use std::path::Path;
use std::process::{Command, Output};

fn trl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trl")).args(args).output().expect("spawn trl")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_box_writes_graph_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.txt");
    let o = trl(&["build", "box", "--dim", "2", "--m", "4", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let printed: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(printed["counts"]["a0"], 361);
    assert_eq!(printed["graph"]["verified"], true);

    let on_disk = std::fs::read_to_string(dir.path().join("g.txt.report.json")).unwrap();
    assert_eq!(on_disk, stdout(&o));
    let v = trl(&["verify", path_str(&out)]);
    assert_eq!(v.status.code(), Some(0), "{}", stderr(&v));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&v)).unwrap();
    assert_eq!(summary["triangles"], printed["graph"]["triangles"]);
}

#[test]
fn build_formats() {
    let o = trl(&["build", "abstract", "--n", "10", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("kind,D,n,M,seed,A0,classes,A,edges"));
    assert!(lines.next().unwrap().starts_with("abstract,1,10,9,"));

    let o = trl(&["build", "box", "--dim", "1", "--m", "2", "--format", "edgelist"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("rs-graph 3 3 2 9 12 4\n"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["build", "box", "--dim", "1", "--m", "3"][..],
        &["build", "ball", "--n", "100"],
        &["build", "nonsense", "--n", "100"],
        &["prob"],
        &["curves"],
        &["sweep", "--kind", "box", "--dims", "1"],
        &["--threads", "0", "curves", "--n", "100"],
    ] {
        let o = trl(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
    let o = trl(&["build", "box", "--dim", "1", "--m", "3"]);
    assert!(stderr(&o).contains("M must be even"));
}

#[test]
fn budget_exits_three() {
    let o = trl(&["build", "box", "--dim", "3", "--m", "4", "--budget-pairs", "1000"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = trl(&["build", "ball", "--dim", "2", "--n", "500", "--budget-points", "10", "--samples", "1000"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn verify_detects_a_diamond() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("diamond.txt");
    // edge 0-1 lies in two triangles
    std::fs::write(&path, "rs-graph 1 1 2 4 5 2\ne 0 1\ne 0 2\ne 0 3\ne 1 2\ne 1 3\nt 0 1 2\nt 0 1 3\n").unwrap();
    let o = trl(&["verify", path_str(&path)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["verified"], false);
    assert_eq!(v["witness"]["kind"], "diamond");
    assert_eq!(v["witness"]["edge"], serde_json::json!([0, 1]));
    assert_eq!(v["witness"]["triangles"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_detects_wrong_triples() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    let o = trl(&["build", "box", "--dim", "1", "--m", "2", "--out", path_str(&path)]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap().replace("t 0 4 6", "t 0 3 6");
    std::fs::write(&path, text).unwrap();
    let o = trl(&["verify", path_str(&path)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn verify_rejects_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    let o = trl(&["build", "box", "--dim", "1", "--m", "2", "--out", path_str(&path)]);
    assert_eq!(o.status.code(), Some(0));
    let full = std::fs::read_to_string(&path).unwrap();

    let truncated: String = full.lines().take(6).map(|l| format!("{l}\n")).collect();
    std::fs::write(&path, truncated).unwrap();
    let o = trl(&["verify", path_str(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 6"), "{}", stderr(&o));

    std::fs::write(&path, full.replace("e 1 5", "e 1 two")).unwrap();
    let o = trl(&["verify", path_str(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));

    let o = trl(&["verify", path_str(&dir.path().join("missing.txt"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn curves_report_the_optimum() {
    let o = trl(&["curves", "--n", "1000000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row = text.lines().find(|l| l.ends_with(",new")).unwrap();
    assert!(row.starts_with("14,"), "{row}");

    let o = trl(&["curves", "--n", "1e6", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let new = v["optima"].as_array().unwrap().iter().find(|x| x["curve"] == "new").unwrap();
    assert_eq!(new["d_best"], 14);
    assert!(v["delta"].as_array().unwrap().len() >= 3);
}

#[test]
fn prob_box_is_exact() {
    let o = trl(&["prob", "--box", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((v["num"].as_u64(), v["den"].as_u64()), (Some(19), Some(25)));
}

#[test]
fn prob_ball_matches_one_dimensional_value() {
    let o = trl(&["prob", "--ball", "--dim", "1", "--samples", "200000", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let p = v["estimate"]["value"].as_f64().unwrap();
    let se = v["estimate"]["stderr"].as_f64().unwrap();
    assert!((p - 0.75).abs() <= 4.0 * se, "{p} +- {se}");
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let o = trl(&["sweep", "--kind", "box", "--dims", "1,2", "--ms", "2,4", "--out", path_str(&path)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 5);
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",true,"), "{line}");
    }
}

#[test]
fn sweep_records_cell_failures() {
    let o = trl(&["sweep", "--kind", "box", "--dims", "1", "--ms", "2,3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(rows[0]["error"].is_null());
    assert!(rows[1]["error"].as_str().unwrap().contains("even"));
}
