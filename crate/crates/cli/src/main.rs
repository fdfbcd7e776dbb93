//! `svyalign` command-line driver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! error.

mod settings;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use settings::{FileConfig, Settings};
use svyalign::data::{generate_synthetic_population, population_truth};
use svyalign::harness::{emit_report, run_pooling_scenario_on, run_single_sample_on, SimulationReport};
use svyalign::indicators::IndicatorKind;
use svyalign::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "svyalign", version, about = "Survey indicator estimation and alignment-based pooling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single-sample Monte Carlo study of the indicators and their linearization SEs.
    Estimate(EstimateArgs),
    /// Two-sample pooling study over weight and combination modes.
    Pool(PoolArgs),
    /// Population values of every indicator.
    Truth(TruthArgs),
    /// Write a synthetic household population to CSV.
    Synth(SynthArgs),
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Population CSV (one row per person).
    #[arg(long)]
    pub population: Option<PathBuf>,
    /// Household id column of the population file.
    #[arg(long)]
    pub household_column: Option<String>,
    /// Equivalized income column of the population file.
    #[arg(long)]
    pub income_column: Option<String>,
    /// Auxiliary (calibration) column of the population file.
    #[arg(long)]
    pub aux_column: Option<String>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Households per sample.
    #[arg(long)]
    pub households: Option<usize>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Indicators to estimate (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub indicators: Option<Vec<String>>,
    /// Report directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run replications on one thread.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Args, Debug)]
pub struct PoolArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Households in the first sample.
    #[arg(long)]
    pub n1: Option<usize>,
    /// Households in the second sample.
    #[arg(long)]
    pub n2: Option<usize>,
    /// Variable the `alignment` weight mode aligns on: `indicator` (the
    /// target's own linearized variable) or `median`.
    #[arg(long)]
    pub align_on: Option<String>,
    /// Weight modes: sampling, alignment, own-alignment, median-alignment.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<String>>,
    /// Combination rules: simple, optimal.
    #[arg(long, value_delimiter = ',')]
    pub combine: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub indicators: Option<Vec<String>>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub serial: bool,
}

#[derive(Args, Debug)]
pub struct TruthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// JSON file with synthetic population parameters (under `synthetic`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub households: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn print_summary(report: &SimulationReport) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "population: {} persons, {} households",
        report.population_size, report.households
    );
    for t in &report.truth {
        let _ = writeln!(out, "truth {:<12} {:.6}", t.indicator.name(), t.value);
    }
    let _ = writeln!(
        out,
        "{:<12} {:<17} {:<8} {:>14} {:>12} {:>12} {:>8}",
        "indicator", "weights", "combine", "mean", "mc_sd", "mean_se", "delta"
    );
    for s in &report.summary {
        let _ = writeln!(
            out,
            "{:<12} {:<17} {:<8} {:>14.4} {:>12.4} {:>12.4} {:>8}",
            s.indicator.name(),
            s.weight_mode.name(),
            s.combine_mode.map(|c| c.name()).unwrap_or("-"),
            s.mean,
            s.mc_sd,
            s.mean_lin_se,
            s.mean_delta.map(|d| format!("{d:.4}")).unwrap_or_default()
        );
    }
}

fn finish(report: &SimulationReport, out: &std::path::Path) -> Result<()> {
    let paths = emit_report(report, out)?;
    print_summary(report);
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let settings = Settings::for_estimate(&args, file)?;
    let frame = settings.load_population()?;
    let report = run_single_sample_on(&settings.scenario, &frame)?;
    finish(&report, &settings.out_dir()?)
}

fn pool(args: PoolArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let settings = Settings::for_pool(&args, file)?;
    let frame = settings.load_population()?;
    let report = run_pooling_scenario_on(&settings.scenario, &frame)?;
    finish(&report, &settings.out_dir()?)
}

fn truth(args: TruthArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let settings = Settings::for_truth(&args, file)?;
    let frame = settings.load_population()?;
    let mut values = serde_json::Map::new();
    let kinds = [
        IndicatorKind::Median,
        IndicatorKind::Qsr,
        IndicatorKind::Gini,
        IndicatorKind::Rmpg,
        IndicatorKind::Arpt,
        IndicatorKind::Arpr,
        IndicatorKind::PoorMedian,
    ];
    for kind in kinds {
        let r = population_truth(&frame, kind)?;
        values.insert(kind.name().into(), serde_json::json!(r.value));
    }
    let doc = serde_json::json!({
        "population_size": frame.len(),
        "households": frame.household_count(),
        "indicators": values,
    });
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let mut params = file.synthetic.unwrap_or_default();
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    if let Some(h) = args.households {
        params.households = h;
    }
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| Error::Config("synth needs --out <csv>".into()))?;
    let frame = generate_synthetic_population(&params)?;
    frame.save_csv(&out)?;
    eprintln!(
        "wrote {} persons in {} households to {}",
        frame.len(),
        frame.household_count(),
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Pool(a) => pool(a),
        Command::Truth(a) => truth(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
