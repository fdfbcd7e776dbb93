use std::path::Path;
use std::process::{Command, Output};

fn svyalign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svyalign"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn synth(dir: &Path) -> String {
    let pop = dir.join("pop.csv");
    let out = svyalign(&["synth", "--households", "200", "--seed", "5", "--out", pop.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    pop.to_str().unwrap().to_string()
}

#[test]
fn synth_then_truth_reads_back_the_population() {
    let dir = tempfile::tempdir().unwrap();
    let pop = synth(dir.path());
    let out = svyalign(&["truth", "--population", &pop]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["households"], 200);
    let ind = doc["indicators"].as_object().unwrap();
    assert_eq!(ind.len(), 7);
    let arpt = ind["arpt"].as_f64().unwrap();
    let median = ind["median"].as_f64().unwrap();
    assert!((arpt - 0.6 * median).abs() < 1e-9 * median);
}

#[test]
fn pool_writes_all_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let pop = synth(dir.path());
    let out_dir = dir.path().join("report");
    let out = svyalign(&[
        "pool", "--population", &pop, "--n1", "30", "--n2", "40", "--replications", "6",
        "--weights", "sampling,alignment", "--align-on", "median", "--combine", "optimal",
        "--indicators", "median,gini", "--serial", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["replications.csv", "summary.csv", "summary.json", "boxplot_data.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let reps = std::fs::read_to_string(out_dir.join("replications.csv")).unwrap();
    // 6 replications x 2 indicators x 2 weight modes x 1 combine mode
    assert_eq!(reps.lines().count(), 1 + 24);
    assert!(reps.contains("median-alignment"));
    assert!(!reps.contains("own-alignment"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let pop = synth(dir.path());
    let out_dir = dir.path().join("est");
    let cfg = dir.path().join("cfg.json");
    let text = serde_json::json!({
        "population": pop, "households": 20, "replications": 50,
        "indicators": ["median"], "out": out_dir,
    });
    std::fs::write(&cfg, text.to_string()).unwrap();
    let out = svyalign(&["estimate", "--config", cfg.to_str().unwrap(), "--replications", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let reps = std::fs::read_to_string(out_dir.join("replications.csv")).unwrap();
    assert_eq!(reps.lines().count(), 1 + 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // usage error
    assert_eq!(svyalign(&["pool", "--n1"]).status.code(), Some(2));
    // missing required setting
    assert_eq!(svyalign(&["estimate", "--out", "x"]).status.code(), Some(2));
    // unknown config key
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"households": 3, "bogus": 1}"#).unwrap();
    assert_eq!(svyalign(&["estimate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    // unreadable population
    let missing = dir.path().join("none.csv");
    let out = svyalign(&["truth", "--population", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    // a misnamed column is a configuration error
    let pop = dir.path().join("cols.csv");
    std::fs::write(&pop, "a,b\n1,2\n").unwrap();
    let out = svyalign(&["truth", "--population", pop.to_str().unwrap(), "--income-column", "inc"]);
    assert_eq!(out.status.code(), Some(2));
    // malformed values are data errors
    std::fs::write(&pop, "person_id,household_id,eq_income,aux\n1,1,abc,2\n").unwrap();
    let out = svyalign(&["truth", "--population", pop.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}
