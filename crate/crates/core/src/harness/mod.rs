//! Monte Carlo driver: scenario configuration, replicated estimation and
//! pooling runs, and report files.

pub mod config;
pub mod report;
pub mod simulate;

pub use config::{calibration_spec, CalibrationConfig, PopulationSource, PopulationTotals, ScenarioConfig};
pub use report::emit_report;
pub use simulate::{
    run, run_pooling_scenario, run_pooling_scenario_on, run_single_sample, run_single_sample_on, ReplicationRow,
    SimulationReport, SummaryRow, TruthRow,
};
