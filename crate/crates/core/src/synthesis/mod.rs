//! Synthesis maps `S` and `Z`, their Picard iteration, and the
//! feedback-linearization baselines.

mod baseline;

pub use baseline::{
    baseline_fl_full, baseline_fl_pendulum, baseline_fl_unicycle, DoubleIntegratorSteer, FlatOutputPath, FLAT_OUTPUT_MIN_SPEED,
};

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{Result, SteerError};
use crate::flow::{adjoint_rows, controlled_stm, flow_jacobian_field, target_offset, AdjointRows};
use crate::gramian::{assemble_gramians, GramianSet};
use crate::linalg::{condition_number, solve_refined};
use crate::signal::{ControlSignal, Trajectory};
use crate::system::{check_len, simulate, SystemModel, TransferProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Fixed point of the Lagrange multiplier map `Z`.
    MinEnergy,
    /// Fixed point of the Gramian-like map `S`.
    GramianLike,
    /// Feedback-linearization baseline.
    BaselineFl,
}

/// What to do when `lambda_min(N)` drops below the coercivity floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoercivityPolicy {
    /// Record the dip in the report and keep iterating.
    #[default]
    Warn,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    /// Stop once `|u^(m+1) - u^(m)|_inf < tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Floor `C^{-1}` for `lambda_min(N)`.
    pub coercivity_floor: f64,
    pub policy: CoercivityPolicy,
    /// Gramians with a larger 2-norm condition number count as singular.
    pub cond_limit: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 50, coercivity_floor: 1e-6, policy: CoercivityPolicy::Warn, cond_limit: 1e12 }
    }
}

/// One evaluation of a synthesis map at `u`.
#[derive(Debug, Clone)]
pub struct MapEvaluation {
    /// `S(u)` or `Z(u)`.
    pub image: ControlSignal,
    /// `N^{-1} y` for `S`, `G^{-1} y` for `Z`.
    pub multiplier: DVector<f64>,
    pub gramians: GramianSet,
    /// Trajectory of the argument `u`.
    pub trajectory: Trajectory,
    pub below_floor: bool,
}

fn evaluate_map<S: SystemModel + ?Sized>(
    method: Method,
    system: &S,
    problem: &TransferProblem,
    y: &DVector<f64>,
    u: &ControlSignal,
    opts: &SynthesisOptions,
) -> Result<MapEvaluation> {
    if *u.grid() != problem.grid {
        return Err(SteerError::GridMismatch);
    }
    let trajectory = simulate(system, u, &problem.x0)?;
    let dphi = flow_jacobian_field(system, &trajectory, problem.anchor)?;
    let stm = controlled_stm(system, u, &trajectory)?;
    let rows = adjoint_rows(system, &trajectory, &stm, &dphi)?;
    let gramians = assemble_gramians(&rows)?;

    let lambda = gramians.lambda_min_n;
    let below_floor = !(lambda >= opts.coercivity_floor);
    let n_singular = !(lambda > 0.0) || condition_number(&gramians.n) > opts.cond_limit;
    if n_singular || (below_floor && opts.policy == CoercivityPolicy::Abort) {
        return Err(SteerError::CoercivityViolation { lambda_min: lambda, floor: opts.coercivity_floor });
    }

    let AdjointRows { l_rows, df_rows, .. } = rows;
    let (matrix, row_set) = match method {
        Method::GramianLike => (&gramians.n, l_rows),
        Method::MinEnergy => {
            if !(gramians.cond_g <= opts.cond_limit) {
                return Err(SteerError::SingularGramian { cond: gramians.cond_g });
            }
            (&gramians.g, df_rows)
        }
        Method::BaselineFl => return Err(SteerError::NotApplicable("baselines are not fixed-point maps")),
    };
    let multiplier = solve_refined(matrix, y).ok_or(SteerError::SingularGramian { cond: condition_number(matrix) })?;
    let image = ControlSignal::new(problem.grid, row_set.iter().map(|row| row * &multiplier).collect())?;
    Ok(MapEvaluation { image, multiplier, gramians, trajectory, below_floor })
}

/// `S(u) = L_u^* N(u)^{-1} y`.
pub fn evaluate_s<S: SystemModel + ?Sized>(
    system: &S,
    problem: &TransferProblem,
    u: &ControlSignal,
    opts: &SynthesisOptions,
) -> Result<MapEvaluation> {
    let y = target_offset(system, problem)?;
    evaluate_map(Method::GramianLike, system, problem, &y, u, opts)
}

/// `Z(u) = DF(u)^* G(u)^{-1} y`.
pub fn evaluate_z<S: SystemModel + ?Sized>(
    system: &S,
    problem: &TransferProblem,
    u: &ControlSignal,
    opts: &SynthesisOptions,
) -> Result<MapEvaluation> {
    let y = target_offset(system, problem)?;
    evaluate_map(Method::MinEnergy, system, problem, &y, u, opts)
}

/// Outcome of a synthesis run.
#[derive(Debug, Clone)]
pub struct SynthesisReport {
    pub method: Method,
    pub problem: TransferProblem,
    pub control: ControlSignal,
    /// Trajectory of `control`.
    pub trajectory: Trajectory,
    /// `|x_u(T) - x1|`
    pub terminal_error: f64,
    /// `0.5 |u|_{L^2}^2`
    pub energy: f64,
    pub sup_norm: f64,
    /// `z^T M z` for `Z` (energy identity), `z^T N z` for `S`.
    pub certificate: Option<f64>,
    pub multiplier: Option<DVector<f64>>,
    /// Picard updates before the confirming sweep (at least one).
    pub iterations: usize,
    /// `|u^(m+1) - u^(m)|_inf` per sweep.
    pub residuals: Vec<f64>,
    /// `lambda_min(N(u^(m)))` per sweep.
    pub feasibility_history: Vec<f64>,
    /// Largest `|u^(m)|_inf` seen over the iterates.
    pub running_sup: Vec<f64>,
    pub coercivity_dip: bool,
    pub converged: bool,
    /// Gramians of the last sweep.
    pub gramians: Option<GramianSet>,
    pub notes: Vec<String>,
}

impl SynthesisReport {
    /// `rho_{m+1} / rho_m` for consecutive nonzero residuals.
    pub fn residual_ratios(&self) -> Vec<f64> {
        self.residuals.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect()
    }
}

pub(crate) fn finish_report<S: SystemModel + ?Sized>(
    system: &S,
    method: Method,
    problem: &TransferProblem,
    control: ControlSignal,
    trajectory: Option<Trajectory>,
) -> Result<SynthesisReport> {
    let trajectory = match trajectory {
        Some(t) => t,
        None => simulate(system, &control, &problem.x0)?,
    };
    Ok(SynthesisReport {
        method,
        problem: problem.clone(),
        terminal_error: (trajectory.endpoint() - &problem.x1).norm(),
        energy: control.energy(),
        sup_norm: control.sup_norm(),
        control,
        trajectory,
        certificate: None,
        multiplier: None,
        iterations: 0,
        residuals: Vec::new(),
        feasibility_history: Vec::new(),
        running_sup: Vec::new(),
        coercivity_dip: false,
        converged: true,
        gramians: None,
        notes: Vec::new(),
    })
}

/// Picard iteration `u^(m+1) = map(u^(m))` for `S` or `Z`.
///
/// Stops once the sup-norm update drops below `opts.tol`; the returned
/// control is the last image. A run that exhausts `max_iter` fails with
/// [`SteerError::NonConvergence`] carrying the partial report.
pub fn picard_solve<S: SystemModel + ?Sized>(
    method: Method,
    system: &S,
    problem: &TransferProblem,
    u0: &ControlSignal,
    opts: &SynthesisOptions,
) -> Result<SynthesisReport> {
    if method == Method::BaselineFl {
        return Err(SteerError::NotApplicable("picard_solve needs the S or Z map"));
    }
    problem.check_dims(system)?;
    check_len("initial control", system.input_dim(), u0.dim())?;
    if *u0.grid() != problem.grid {
        return Err(SteerError::GridMismatch);
    }
    let y = target_offset(system, problem)?;

    let mut u = u0.clone();
    let mut residuals = Vec::new();
    let mut feasibility_history = Vec::new();
    let mut running_sup = Vec::new();
    let mut peak = u.sup_norm();
    let mut dip = false;
    let mut converged = false;
    let mut last: Option<MapEvaluation> = None;

    for _ in 0..opts.max_iter.max(1) {
        let eval = evaluate_map(method, system, problem, &y, &u, opts)?;
        feasibility_history.push(eval.gramians.lambda_min_n);
        dip |= eval.below_floor;
        let rho = eval.image.sup_distance(&u)?;
        residuals.push(rho);
        u = eval.image.clone();
        peak = peak.max(u.sup_norm());
        running_sup.push(peak);
        last = Some(eval);
        if rho < opts.tol {
            converged = true;
            break;
        }
    }

    let eval = last.expect("at least one sweep");
    let mut report = finish_report(system, method, problem, u, None)?;
    let quadratic = match method {
        Method::MinEnergy => &eval.gramians.m,
        _ => &eval.gramians.n,
    };
    report.certificate = Some(eval.multiplier.dot(&(quadratic * &eval.multiplier)));
    report.multiplier = Some(eval.multiplier);
    report.gramians = Some(eval.gramians);
    report.iterations = residuals.len().saturating_sub(1).max(1);
    report.residuals = residuals;
    report.feasibility_history = feasibility_history;
    report.running_sup = running_sup;
    report.coercivity_dip = dip;
    report.converged = converged;
    if dip {
        report.notes.push(alloc::format!("lambda_min(N) fell below the coercivity floor {:e} during the iteration", opts.coercivity_floor));
    }
    if converged {
        Ok(report)
    } else {
        Err(SteerError::NonConvergence { report: Box::new(report) })
    }
}

/// `energy(S) - energy(Z)`; nonnegative up to discretization when the
/// `Z` report is the minimum-energy control.
pub fn energy_gap(report_z: &SynthesisReport, report_s: &SynthesisReport) -> Result<f64> {
    if report_z.problem != report_s.problem {
        return Err(SteerError::ProblemMismatch);
    }
    if !report_z.converged || !report_s.converged {
        return Err(SteerError::NotApplicable("energy gap needs two converged reports"));
    }
    Ok(report_s.energy - report_z.energy)
}
