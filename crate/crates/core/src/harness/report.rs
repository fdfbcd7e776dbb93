use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use super::simulate::{SimulationReport, SummaryRow};
use crate::pooling::CombineMode;
use crate::Result;

pub const REPLICATIONS_FILE: &str = "replications.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_JSON_FILE: &str = "summary.json";
pub const BOXPLOT_FILE: &str = "boxplot_data.csv";

/// Label used in the weight/combine columns of population rows.
const POPULATION: &str = "population";

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn combine_label(m: Option<CombineMode>) -> &'static str {
    m.map(CombineMode::name).unwrap_or("none")
}

pub fn write_replications<W: Write>(report: &SimulationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "replicate",
        "indicator",
        "weight_mode",
        "combine_mode",
        "theta1",
        "theta2",
        "delta",
        "combined",
        "var1",
        "var2",
        "combined_var",
        "negative_weights",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.replicate.to_string(),
            r.indicator.name().to_string(),
            r.weight_mode.name().to_string(),
            combine_label(r.combine_mode).to_string(),
            num(r.theta1),
            opt(r.theta2),
            opt(r.delta),
            num(r.combined),
            num(r.var1),
            opt(r.var2),
            num(r.combined_var),
            r.negative_weights.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const SUMMARY_HEADER: [&str; 17] = [
    "indicator",
    "weight_mode",
    "combine_mode",
    "replications",
    "mean",
    "mc_sd",
    "mc_se",
    "mean_lin_se",
    "mean_delta",
    "mean_negative_weights",
    "truth",
    "bias",
    "min",
    "q1",
    "median",
    "q3",
    "max",
];

fn summary_record(s: &SummaryRow) -> Vec<String> {
    vec![
        s.indicator.name().to_string(),
        s.weight_mode.name().to_string(),
        combine_label(s.combine_mode).to_string(),
        s.replications.to_string(),
        num(s.mean),
        num(s.mc_sd),
        num(s.mc_se),
        num(s.mean_lin_se),
        opt(s.mean_delta),
        num(s.mean_negative_weights),
        opt(s.truth),
        opt(s.truth.map(|t| s.mean - t)),
        num(s.five.min),
        num(s.five.q1),
        num(s.five.median),
        num(s.five.q3),
        num(s.five.max),
    ]
}

/// Summary table. Population rows come first: one with the population size
/// (indicator `population`) followed by the true value of each indicator.
pub fn write_summary<W: Write>(report: &SimulationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    let mut size_row = vec![String::new(); SUMMARY_HEADER.len()];
    size_row[0] = POPULATION.into();
    size_row[1] = POPULATION.into();
    size_row[2] = POPULATION.into();
    size_row[4] = report.population_size.to_string();
    size_row[10] = report.population_size.to_string();
    w.write_record(&size_row)?;
    for t in &report.truth {
        let mut row = vec![String::new(); SUMMARY_HEADER.len()];
        row[0] = t.indicator.name().into();
        row[1] = POPULATION.into();
        row[2] = POPULATION.into();
        row[4] = num(t.value);
        row[10] = num(t.value);
        w.write_record(&row)?;
    }
    for s in &report.summary {
        w.write_record(summary_record(s))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_boxplot<W: Write>(report: &SimulationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "indicator",
        "weight_mode",
        "combine_mode",
        "min",
        "q1",
        "median",
        "q3",
        "max",
        "lower_fence",
        "upper_fence",
        "whisker_low",
        "whisker_high",
        "outliers",
    ])?;
    for s in &report.summary {
        let f = &s.five;
        w.write_record([
            s.indicator.name().to_string(),
            s.weight_mode.name().to_string(),
            combine_label(s.combine_mode).to_string(),
            num(f.min),
            num(f.q1),
            num(f.median),
            num(f.q3),
            num(f.max),
            num(f.lower_fence),
            num(f.upper_fence),
            num(f.whisker_low),
            num(f.whisker_high),
            f.outliers.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn summary_json(report: &SimulationReport) -> serde_json::Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "kind": report.kind,
        "population_size": report.population_size,
        "households": report.households,
        "config": report.config,
        "truth": report.truth,
        "cells": report.summary,
    })
}

/// Writes the four report files into `dir`, creating it if needed, and
/// returns their paths.
pub fn emit_report(report: &SimulationReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let open = |name: &str| -> Result<(PathBuf, BufWriter<File>)> {
        let path = dir.join(name);
        Ok((path.clone(), BufWriter::new(File::create(path)?)))
    };
    let mut paths = Vec::new();

    let (p, f) = open(REPLICATIONS_FILE)?;
    write_replications(report, f)?;
    paths.push(p);

    let (p, f) = open(SUMMARY_FILE)?;
    write_summary(report, f)?;
    paths.push(p);

    let (p, mut f) = open(SUMMARY_JSON_FILE)?;
    serde_json::to_writer_pretty(&mut f, &summary_json(report))?;
    f.write_all(b"\n")?;
    f.flush()?;
    paths.push(p);

    let (p, f) = open(BOXPLOT_FILE)?;
    write_boxplot(report, f)?;
    paths.push(p);

    Ok(paths)
}
