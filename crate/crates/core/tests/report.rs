use std::path::PathBuf;

use svyalign::harness::report::{write_boxplot, write_replications, write_summary, summary_json};
use svyalign::harness::{emit_report, run_pooling_scenario_on, run_single_sample_on, PopulationSource, ScenarioConfig};
use svyalign::{IndicatorKind, PersonRecord, PopulationFrame, SyntheticParams};

fn small_frame() -> PopulationFrame {
    let mut records = Vec::new();
    for h in 0..24 {
        for m in 0..(1 + h % 3) {
            let y = 8_000.0 + 1_250.0 * ((h * 7 + m * 3) % 19) as f64;
            records.push(PersonRecord {
                person_id: format!("{h}.{m}"),
                household_id: format!("h{h}"),
                eq_income: y,
                aux: 0.4 * y + 300.0 * (h % 5) as f64,
            });
        }
    }
    PopulationFrame::from_records(records).unwrap()
}

/// Indicators that stay defined on samples of a handful of households (the
/// poverty gap needs someone below the threshold).
const SMALL_SAMPLE_SAFE: [IndicatorKind; 3] = [IndicatorKind::Median, IndicatorKind::Qsr, IndicatorKind::Gini];

fn source() -> PopulationSource {
    PopulationSource::Synthetic(SyntheticParams::default())
}

fn render(write: impl Fn(&mut Vec<u8>)) -> String {
    let mut buf = Vec::new();
    write(&mut buf);
    String::from_utf8(buf).unwrap()
}

/// Compares against a checked-in file; `UPDATE_GOLDEN=1` rewrites it.
fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} drifted from its golden copy");
}

#[test]
fn single_sample_summary_is_stable() {
    let frame = small_frame();
    let mut cfg = ScenarioConfig::single(source(), 8, 3, 17);
    cfg.parallel = false;
    let report = run_single_sample_on(&cfg, &frame).unwrap();
    golden("single_summary.csv", &render(|b| write_summary(&report, b).unwrap()));
    golden("single_replications.csv", &render(|b| write_replications(&report, b).unwrap()));
}

#[test]
fn pooling_summary_is_stable() {
    let frame = small_frame();
    let mut cfg = ScenarioConfig::pooling(source(), 8, 10, 3, 5);
    cfg.indicators = SMALL_SAMPLE_SAFE.to_vec();
    cfg.parallel = false;
    let report = run_pooling_scenario_on(&cfg, &frame).unwrap();
    golden("pooling_summary.csv", &render(|b| write_summary(&report, b).unwrap()));
    golden("pooling_boxplot.csv", &render(|b| write_boxplot(&report, b).unwrap()));
}

#[test]
fn reports_shape() {
    let frame = small_frame();
    let mut cfg = ScenarioConfig::pooling(source(), 6, 6, 4, 2);
    cfg.indicators = SMALL_SAMPLE_SAFE.to_vec();
    cfg.parallel = false;
    let report = run_pooling_scenario_on(&cfg, &frame).unwrap();
    let cells = cfg.indicators.len() * cfg.weight_modes.len() * cfg.combine_modes.len();
    assert_eq!(report.rows.len(), 4 * cells);
    assert_eq!(report.summary.len(), cells);

    let summary = render(|b| write_summary(&report, b).unwrap());
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 1 + 1 + cfg.indicators.len() + cells);
    assert!(lines[1].starts_with("population,population,population,"));
    assert!(lines.iter().all(|l| l.split(',').count() == 17));

    let json = summary_json(&report);
    assert_eq!(json["population_size"], frame.len());
    assert_eq!(json["cells"].as_array().unwrap().len(), cells);

    let dir = tempfile::tempdir().unwrap();
    let paths = emit_report(&report, dir.path()).unwrap();
    assert_eq!(paths.len(), 4);
    let back: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(back["kind"], json["kind"]);
    assert_eq!(back["cells"].as_array().unwrap().len(), cells);
    assert_eq!(back["truth"].as_array().unwrap().len(), cfg.indicators.len());
}

#[test]
fn empty_indicator_list_gives_header_only_reports() {
    let frame = small_frame();
    for mut cfg in [ScenarioConfig::single(source(), 5, 3, 1), ScenarioConfig::pooling(source(), 5, 5, 3, 1)] {
        cfg.indicators.clear();
        let report = if cfg.n_h2.is_some() {
            run_pooling_scenario_on(&cfg, &frame)
        } else {
            run_single_sample_on(&cfg, &frame)
        }
        .unwrap();
        assert!(report.rows.is_empty() && report.summary.is_empty() && report.truth.is_empty());
        assert_eq!(render(|b| write_replications(&report, b).unwrap()).lines().count(), 1);
        assert_eq!(render(|b| write_boxplot(&report, b).unwrap()).lines().count(), 1);
        // header plus the population-size row
        assert_eq!(render(|b| write_summary(&report, b).unwrap()).lines().count(), 2);
    }
}
