//! Report documents and their JSON/CSV rendering. Field order is fixed by
//! the struct declarations and all collections iterate deterministically,
//! so identical inputs (and seeds) produce byte-identical reports apart
//! from the timing field.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use qhv_core::report::Check;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckDoc {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
}

impl From<&Check> for CheckDoc {
    fn from(c: &Check) -> Self {
        Self {
            name: c.name.clone(),
            passed: c.passed,
            measured: c.measured,
            bound: c.bound,
            tolerance: c.tolerance,
        }
    }
}

pub fn check_docs(checks: &[Check]) -> Vec<CheckDoc> {
    checks.iter().map(CheckDoc::from).collect()
}

pub trait Report: Serialize {
    fn passed(&self) -> bool;
    fn csv(&self) -> String;
}

/// Writes the report and returns its overall verdict.
pub fn emit(report: &impl Report, format: Format, out: Option<&Path>) -> Result<bool, CliError> {
    let text = match format {
        Format::Json => {
            let mut t = serde_json::to_string_pretty(report)
                .map_err(|e| CliError::Run(format!("serialization failed: {e}")))?;
            t.push('\n');
            t
        }
        Format::Csv => report.csv(),
    };
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(report.passed())
}

/// CSV rows of a row-major table: one outcome label column per axis, then
/// the cell value.
fn table_csv(axes: &[Vec<f64>], values: &[f64]) -> String {
    let mut text = String::new();
    for k in 0..axes.len() {
        let _ = write!(text, "outcome_{k},");
    }
    text.push_str("value\n");
    let mut idx = vec![0usize; axes.len()];
    for v in values {
        for (i, labels) in idx.iter().zip(axes) {
            let _ = write!(text, "{},", labels[*i]);
        }
        let _ = writeln!(text, "{v}");
        for k in (0..axes.len()).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    text
}

fn pairs_csv(pairs: &[(&str, f64)]) -> String {
    let mut text = String::from("key,value\n");
    for (k, v) in pairs {
        let _ = writeln!(text, "{k},{v}");
    }
    text
}

#[derive(Serialize)]
pub struct MeasureReport {
    pub command: &'static str,
    pub dim: usize,
    pub n_observables: usize,
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub sum: f64,
    pub total_variation: f64,
    pub min_value: f64,
    pub event_value: Option<f64>,
    pub checks: Vec<CheckDoc>,
    pub passed: bool,
    pub timing_ms: u128,
}

impl Report for MeasureReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn csv(&self) -> String {
        table_csv(&self.axes, &self.values)
    }
}

#[derive(Serialize)]
pub struct TupleDeviation {
    pub settings: Vec<u8>,
    pub max_deviation: f64,
}

#[derive(Serialize)]
pub struct PivotSummary {
    pub pivot: usize,
    pub total_variation: f64,
    pub marginal_max_deviation: f64,
}

#[derive(Serialize)]
pub struct ScenarioReport {
    pub command: &'static str,
    pub n_sites: usize,
    pub local_dim: usize,
    pub pivot: usize,
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub sum: f64,
    pub total_variation: f64,
    pub marginal_max_deviation: f64,
    pub marginals: Vec<TupleDeviation>,
    pub per_site_factors: Vec<f64>,
    pub closed_form_agreement: Option<f64>,
    pub product_bound: f64,
    pub dimensional_bound: f64,
    pub pivot_sweep: Option<Vec<PivotSummary>>,
    pub checks: Vec<CheckDoc>,
    pub passed: bool,
    pub timing_ms: u128,
}

impl Report for ScenarioReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn csv(&self) -> String {
        table_csv(&self.axes, &self.values)
    }
}

#[derive(Serialize)]
pub struct TermDoc {
    pub settings: Vec<u8>,
    pub coefficient: f64,
}

#[derive(Serialize)]
pub struct SeesawDoc {
    pub best_value: f64,
    pub sweeps: usize,
    pub restarts: usize,
}

#[derive(Serialize)]
pub struct BellReport {
    pub command: &'static str,
    pub functional: String,
    pub n_sites: usize,
    pub local_dim: usize,
    pub terms: Vec<TermDoc>,
    pub classical_bound: f64,
    pub quantum_value: f64,
    pub ratio: f64,
    pub upper_bound: f64,
    pub total_variation: f64,
    pub dimensional_bound: f64,
    pub optimized: bool,
    pub seesaw: Option<SeesawDoc>,
    pub checks: Vec<CheckDoc>,
    pub passed: bool,
    pub timing_ms: u128,
}

impl Report for BellReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn csv(&self) -> String {
        pairs_csv(&[
            ("quantum_value", self.quantum_value),
            ("classical_bound", self.classical_bound),
            ("ratio", self.ratio),
            ("upper_bound", self.upper_bound),
            ("total_variation", self.total_variation),
            ("dimensional_bound", self.dimensional_bound),
        ])
    }
}

#[derive(Serialize)]
pub struct BoundReport {
    pub command: &'static str,
    pub local_dim: usize,
    pub n_sites: usize,
    pub dimensional_bound: f64,
    pub setting_bound: f64,
    pub upper_bound: f64,
    pub passed: bool,
    pub timing_ms: u128,
}

impl Report for BoundReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn csv(&self) -> String {
        pairs_csv(&[
            ("dimensional_bound", self.dimensional_bound),
            ("setting_bound", self.setting_bound),
            ("upper_bound", self.upper_bound),
        ])
    }
}

#[derive(Serialize)]
pub struct TomogramReport {
    pub command: &'static str,
    pub dim: usize,
    pub probabilities: Vec<f64>,
    pub sum: f64,
    pub min_probability: f64,
    pub checks: Vec<CheckDoc>,
    pub passed: bool,
    pub timing_ms: u128,
}

impl Report for TomogramReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn csv(&self) -> String {
        let mut text = String::from("index,probability\n");
        for (i, p) in self.probabilities.iter().enumerate() {
            let _ = writeln!(text, "{i},{p}");
        }
        text
    }
}
