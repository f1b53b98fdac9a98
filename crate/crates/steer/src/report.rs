//! Run reports (JSON) and grid signals (CSV).

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use steer_core::certify::{Certificate, CertificateKind};
use steer_core::gramian::GramianSet;
use steer_core::synthesis::{Method, SynthesisReport};
use steer_core::{ControlSignal, DMatrix, DVector, TimeGrid};

use crate::config::RunConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `None` for non-finite values so every number in the JSON is finite.
fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramianReport {
    /// Row-major.
    pub m: Vec<Vec<f64>>,
    pub n: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub lambda_min_n: f64,
    pub lambda_min_m: f64,
    pub cond_g: Option<f64>,
}

impl From<&GramianSet> for GramianReport {
    fn from(gs: &GramianSet) -> Self {
        Self {
            m: rows(&gs.m),
            n: rows(&gs.n),
            g: rows(&gs.g),
            lambda_min_n: gs.lambda_min_n,
            lambda_min_m: gs.lambda_min_m,
            cond_g: finite(gs.cond_g),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub kind: String,
    pub value: f64,
    pub arg_min_t: f64,
    pub arg_min_x: Vec<f64>,
    pub threshold: f64,
    pub margin: f64,
    pub sampled_lipschitz: f64,
    pub passed: bool,
}

impl From<&Certificate> for CertificateReport {
    fn from(c: &Certificate) -> Self {
        Self {
            kind: match c.kind {
                CertificateKind::Bracket => "bracket",
                CertificateKind::FullyActuated => "fully_actuated",
                CertificateKind::StmBound => "stm_bound",
            }
            .into(),
            value: c.value,
            arg_min_t: c.arg_min_t,
            arg_min_x: c.arg_min_x.iter().copied().collect(),
            threshold: c.threshold,
            margin: c.margin,
            sampled_lipschitz: c.sampled_lipschitz,
            passed: c.passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSummary {
    pub method: String,
    pub converged: bool,
    pub iterations: usize,
    pub energy: f64,
    pub sup_norm: f64,
    pub terminal_error: f64,
    pub certificate: Option<f64>,
    pub multiplier: Option<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub feasibility_history: Vec<f64>,
    pub coercivity_dip: bool,
    pub notes: Vec<String>,
    pub gramians: Option<GramianReport>,
}

pub fn method_label(m: Method) -> &'static str {
    match m {
        Method::MinEnergy => "min_energy",
        Method::GramianLike => "gramian_like",
        Method::BaselineFl => "baseline_fl",
    }
}

impl From<&SynthesisReport> for SynthesisSummary {
    fn from(r: &SynthesisReport) -> Self {
        Self {
            method: method_label(r.method).into(),
            converged: r.converged,
            iterations: r.iterations,
            energy: r.energy,
            sup_norm: r.sup_norm,
            terminal_error: r.terminal_error,
            certificate: r.certificate,
            multiplier: r.multiplier.as_ref().map(|z| z.iter().copied().collect()),
            residuals: r.residuals.clone(),
            feasibility_history: r.feasibility_history.clone(),
            coercivity_dip: r.coercivity_dip,
            notes: r.notes.clone(),
            gramians: r.gramians.as_ref().map(GramianReport::from),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub synthesis_s: f64,
    pub certify_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: RunConfig,
    /// "converged", "not_converged" or "failed".
    pub status: String,
    pub error: Option<String>,
    pub exit_code: i32,
    pub result: Option<SynthesisSummary>,
    pub certificates: Vec<CertificateReport>,
    pub timings: Timings,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_report(path: &Path) -> Result<RunReport, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// One row per grid node: `t,<prefix>1,...,<prefix>k`. Values use the
/// shortest decimal that round-trips.
pub fn write_signal(path: &Path, prefix: char, grid: &TimeGrid, values: &[DVector<f64>]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let k = values.first().map_or(0, |v| v.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=k).map(|i| format!("{prefix}{i}")));
    w.write_record(&header)?;
    for (j, v) in values.iter().enumerate() {
        let mut row = vec![grid.node(j).to_string()];
        row.extend(v.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    let mut file = w.into_inner().map_err(|e| CliError::io(path, e.into_error()))?;
    file.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a signal written by [`write_signal`] back onto its grid.
pub fn read_signal(path: &Path) -> Result<(TimeGrid, Vec<DVector<f64>>), CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in r.records() {
        let record = record?;
        let nums = record
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::schema(path.display().to_string(), e.to_string()))?;
        times.push(nums[0]);
        values.push(DVector::from_vec(nums[1..].to_vec()));
    }
    if times.len() < 3 {
        return Err(CliError::schema(path.display().to_string(), "needs at least three rows"));
    }
    let grid = TimeGrid::new(times[0], times[times.len() - 1], times.len())?;
    Ok((grid, values))
}

pub fn read_control(path: &Path) -> Result<ControlSignal, CliError> {
    let (grid, values) = read_signal(path)?;
    Ok(ControlSignal::new(grid, values)?)
}
