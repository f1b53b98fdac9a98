use alloc::boxed::Box;
use alloc::string::String;

use crate::synthesis::SynthesisReport;

pub type Result<T, E = SteerError> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum SteerError {
    #[error("invalid time grid: {0}")]
    InvalidGrid(&'static str),

    #[error("composite Simpson needs an odd number of samples (>= 3), got {0}")]
    GridShape(usize),

    #[error("signals live on different time grids")]
    GridMismatch,

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("integration diverged at node {node} (t = {time})")]
    Divergence { node: usize, time: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("pendulum length ratio l1/l0 = {ratio} must be below 1, otherwise 1 + eps*phi(t) vanishes")]
    SingularLength { ratio: f64 },

    #[error("coercivity violated: lambda_min(N) = {lambda_min:e} (floor {floor:e})")]
    CoercivityViolation { lambda_min: f64, floor: f64 },

    #[error("optimal Gramian is numerically singular (condition number {cond:e})")]
    SingularGramian { cond: f64 },

    #[error("Picard iteration did not converge within {} sweeps (last residual {:e})",
        .report.residuals.len(), .report.residuals.last().copied().unwrap_or(f64::NAN))]
    NonConvergence { report: Box<SynthesisReport> },

    #[error("input matrix is singular at t = {time} (sigma_min = {sigma_min:e})")]
    SingularInput { time: f64, sigma_min: f64 },

    #[error("flat output degenerates at t = {time} (path speed {speed:e})")]
    FlatnessSingularity { time: f64, speed: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(&'static str),

    #[error("reports were computed for different transfer problems")]
    ProblemMismatch,
}
