//! Single transfers and standalone certification.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use steer_core::certify::{bracket_infimum, fully_actuated_floor, stm_bound_audit, Certificate};
use steer_core::flow::controlled_stm;
use steer_core::synthesis::{picard_solve, SynthesisReport};
use steer_core::{ControlSignal, DVector, SteerError};

use crate::config::{BoxConfig, MethodName, RunConfig};
use crate::error::CliError;
use crate::models::Model;
use crate::report::{write_json, write_signal, CertificateReport, RunReport, SynthesisSummary, Timings, VERSION};

pub const REPORT_FILE: &str = "report.json";
pub const CONTROL_FILE: &str = "control.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const CERTIFICATE_FILE: &str = "certificate.json";

/// Runs the configured method. Non-convergence comes back as
/// `SteerError::NonConvergence` carrying the partial report.
pub fn synthesize(model: &Model, config: &RunConfig) -> Result<SynthesisReport, CliError> {
    let problem = config.problem()?;
    let report = match config.method {
        MethodName::Fl => model.baseline(&problem)?,
        method => {
            let u0 = match &config.init {
                Some(v) => ControlSignal::constant(problem.grid, &DVector::from_vec(v.clone())),
                None => ControlSignal::zeros(problem.grid, model.input_dim()),
            };
            picard_solve(method.method(), model.system(), &problem, &u0, &config.options())?
        }
    };
    Ok(report)
}

/// Certificates that apply to `model`: the STM audit along the synthesized
/// control when the model ships rate bounds, and the lattice certificates
/// when a sample box is configured.
pub fn certificates(model: &Model, config: &RunConfig, report: Option<&SynthesisReport>) -> Result<Vec<Certificate>, SteerError> {
    let system = model.system();
    let mut out = Vec::new();
    if let Some(sample) = config.sample_box() {
        let (d, k) = (system.state_dim(), system.input_dim());
        if d == 2 && k == 1 && system.input_is_state_independent() && system.input_time_derivative(config.t0).is_some() {
            out.push(bracket_infimum(system, &sample)?);
        }
        if d == k {
            if let Some(bounds) = system.rate_bounds() {
                out.push(fully_actuated_floor(system, &sample, bounds.lambda1)?);
            }
        }
    }
    if let (Some(r), Some(_)) = (report, system.rate_bounds()) {
        let stm = controlled_stm(system, &r.control, &r.trajectory)?;
        out.push(stm_bound_audit(system, &r.control, &r.trajectory, &stm, None)?);
    }
    Ok(out)
}

#[derive(Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub synthesis: SynthesisReport,
}

impl RunOutput {
    pub fn converged(&self) -> bool {
        self.synthesis.converged
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Runs one transfer and writes `report.json`, `control.csv` and
/// `trajectory.csv` into `out_dir`.
///
/// A run that does not converge still writes all three files and returns
/// `Ok` with `report.status == "not_converged"` and exit code 3. Other
/// failures write a `report.json` carrying the error and return `Err`.
pub fn run_transfer(config: &RunConfig, out_dir: &Path) -> Result<RunOutput, CliError> {
    let start = Instant::now();
    config.validate()?;
    let model = Model::build(&config.model, &config.params)?;
    create_dir(out_dir)?;

    let mut report = RunReport {
        version: VERSION.into(),
        config: config.clone(),
        status: "failed".into(),
        error: None,
        exit_code: 0,
        result: None,
        certificates: Vec::new(),
        timings: Timings::default(),
    };
    let synthesis = match synthesize(&model, config) {
        Ok(r) => r,
        Err(CliError::Steer(SteerError::NonConvergence { report: partial })) => {
            report.error = Some(SteerError::NonConvergence { report: partial.clone() }.to_string());
            report.exit_code = 3;
            *partial
        }
        Err(e) => {
            report.error = Some(e.to_string());
            report.exit_code = e.exit_code();
            report.timings.total_s = start.elapsed().as_secs_f64();
            write_json(&out_dir.join(REPORT_FILE), &report)?;
            return Err(e);
        }
    };
    report.timings.synthesis_s = start.elapsed().as_secs_f64();
    report.status = if synthesis.converged { "converged" } else { "not_converged" }.into();
    report.result = Some(SynthesisSummary::from(&synthesis));

    if config.certify {
        let t = Instant::now();
        match certificates(&model, config, Some(&synthesis)) {
            Ok(certs) => report.certificates = certs.iter().map(CertificateReport::from).collect(),
            Err(e) => {
                let msg = format!("certification failed: {e}");
                report.error = Some(match report.error.take() {
                    Some(prev) => format!("{prev}; {msg}"),
                    None => msg,
                });
            }
        }
        report.timings.certify_s = t.elapsed().as_secs_f64();
    }

    let grid = *synthesis.control.grid();
    write_signal(&out_dir.join(CONTROL_FILE), 'u', &grid, synthesis.control.values())?;
    write_signal(&out_dir.join(TRAJECTORY_FILE), 'x', &grid, synthesis.trajectory.states())?;
    report.timings.total_s = start.elapsed().as_secs_f64();
    write_json(&out_dir.join(REPORT_FILE), &report)?;
    Ok(RunOutput { report, synthesis })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub version: String,
    pub model: String,
    pub time_range: [f64; 2],
    #[serde(rename = "box")]
    pub sample_box: Option<BoxConfig>,
    /// Why the STM audit is missing, if it is.
    pub synthesis_error: Option<String>,
    pub certificates: Vec<CertificateReport>,
}

/// Certificates only: runs the configured synthesis for the STM audit and
/// writes `certificate.json`.
pub fn certify_transfer(config: &RunConfig, out_dir: &Path) -> Result<CertificateFile, CliError> {
    config.validate()?;
    let model = Model::build(&config.model, &config.params)?;
    create_dir(out_dir)?;
    let (synthesis, synthesis_error) = match synthesize(&model, config) {
        Ok(r) => (Some(r), None),
        Err(CliError::Steer(SteerError::NonConvergence { report })) => (Some(*report), Some("synthesis did not converge".into())),
        Err(e) => (None, Some(e.to_string())),
    };
    let certs = certificates(&model, config, synthesis.as_ref())?;
    let file = CertificateFile {
        version: VERSION.into(),
        model: config.model.clone(),
        time_range: [config.t0, config.t_end],
        sample_box: config.sample_box.clone(),
        synthesis_error,
        certificates: certs.iter().map(CertificateReport::from).collect(),
    };
    write_json(&out_dir.join(CERTIFICATE_FILE), &file)?;
    Ok(file)
}

/// Exit status for a completed run.
pub fn run_exit_code(output: &RunOutput) -> i32 {
    output.report.exit_code
}
