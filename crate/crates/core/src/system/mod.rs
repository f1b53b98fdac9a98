//! Control-affine systems `x' = N_t(x) + B_t(x) u` and controlled simulation.

mod linear;
mod pendulum;
mod rnn;
mod unicycle;

pub use linear::LinearSystem;
pub use pendulum::{Pendulum, PendulumParams};
pub use rnn::RecurrentNetwork;
pub use unicycle::Unicycle;

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SteerError};
use crate::ode::{all_finite, integrate_ode, rk4_step, TimeGrid};
use crate::signal::{ControlSignal, Trajectory};

/// Growth constants of the drift and input matrix.
///
/// `lambda1` bounds `|D_x N_t(x)|` and `input_lipschitz` bounds
/// `|D_x B_t(x)|` (operator 2-norms) on the region of interest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub lambda1: f64,
    pub input_lipschitz: f64,
}

/// Data of a control-affine system.
///
/// Evaluators must be pure; the numerical routines call them from arbitrary
/// times inside the horizon, including RK4 stage times.
pub trait SystemModel {
    /// State dimension `d`.
    fn state_dim(&self) -> usize;

    /// Input dimension `k <= d`.
    fn input_dim(&self) -> usize;

    /// Drift `N_t(x)`.
    fn drift(&self, t: f64, x: &DVector<f64>) -> DVector<f64>;

    /// `D_x N_t(x)`, a `d x d` matrix.
    fn drift_jacobian(&self, t: f64, x: &DVector<f64>) -> DMatrix<f64>;

    /// Input matrix `B_t(x)`, `d x k`.
    fn input_matrix(&self, t: f64, x: &DVector<f64>) -> DMatrix<f64>;

    /// Slice `j` is the `d x d` Jacobian of the `j`-th column of `B_t(x)`.
    fn input_jacobian(&self, t: f64, x: &DVector<f64>) -> Vec<DMatrix<f64>>;

    /// `dB_t/dt` for state-independent input matrices.
    fn input_time_derivative(&self, _t: f64) -> Option<DMatrix<f64>> {
        None
    }

    fn input_is_state_independent(&self) -> bool {
        false
    }

    fn rate_bounds(&self) -> Option<RateBounds> {
        None
    }

    /// Full right-hand side `N_t(x) + B_t(x) u`.
    fn vector_field(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        self.drift(t, x) + self.input_matrix(t, x) * u
    }

    /// `A_u(t) = D_x N_t(x) + sum_j u_j D_x B^{(j)}_t(x)`.
    fn controlled_jacobian(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        let mut a = self.drift_jacobian(t, x);
        for (slice, &uj) in self.input_jacobian(t, x).iter().zip(u.iter()) {
            if uj != 0.0 {
                a += slice * uj;
            }
        }
        a
    }
}

/// Which flow time the feasible map is conjugated to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Anchor {
    /// `tau = t0`
    Initial,
    /// `tau = T`
    #[default]
    Terminal,
}

/// Steer `x0` at `t0` to `x1` at `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferProblem {
    pub x0: DVector<f64>,
    pub x1: DVector<f64>,
    pub grid: TimeGrid,
    pub anchor: Anchor,
}

impl TransferProblem {
    pub fn new(x0: DVector<f64>, x1: DVector<f64>, grid: TimeGrid, anchor: Anchor) -> Self {
        Self { x0, x1, grid, anchor }
    }

    pub fn anchor_time(&self) -> f64 {
        match self.anchor {
            Anchor::Initial => self.grid.t0(),
            Anchor::Terminal => self.grid.t_end(),
        }
    }

    pub fn check_dims<S: SystemModel + ?Sized>(&self, system: &S) -> Result<()> {
        check_len("initial state", system.state_dim(), self.x0.len())?;
        check_len("target state", system.state_dim(), self.x1.len())
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(SteerError::DimensionMismatch { what, expected, found })
    }
}

/// Solves the controlled system for `u` from `x0`; the last state is the
/// endpoint map `E(u)`.
pub fn simulate<S: SystemModel + ?Sized>(system: &S, u: &ControlSignal, x0: &DVector<f64>) -> Result<Trajectory> {
    check_len("initial state", system.state_dim(), x0.len())?;
    check_len("control", system.input_dim(), u.dim())?;
    let sol = integrate_ode(|t, x| system.vector_field(t, x, &u.at(t)), u.grid(), x0)?;
    Trajectory::new(*u.grid(), sol.into_values())
}

/// Closed-loop simulation with a feedback law evaluated at every RK4 stage.
///
/// Returns the trajectory and the law sampled at the grid nodes along it.
pub fn simulate_closed_loop<S, F>(system: &S, grid: &TimeGrid, x0: &DVector<f64>, mut law: F) -> Result<(Trajectory, ControlSignal)>
where
    S: SystemModel + ?Sized,
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    check_len("initial state", system.state_dim(), x0.len())?;
    let mut failure = None;
    let mut rhs = |t: f64, x: &DVector<f64>| match law(t, x) {
        Ok(u) => system.vector_field(t, x, &u),
        Err(e) => {
            failure.get_or_insert(e);
            DVector::from_element(x.len(), f64::NAN)
        }
    };
    let h = grid.step();
    let mut states = Vec::with_capacity(grid.len());
    states.push(x0.clone());
    for j in 1..grid.len() {
        let next = rk4_step(&mut rhs, grid.node(j - 1), h, &states[j - 1]);
        if !all_finite(&next) {
            return Err(failure.unwrap_or(SteerError::Divergence { node: j, time: grid.node(j) }));
        }
        states.push(next);
    }
    let controls = states.iter().enumerate().map(|(j, x)| law(grid.node(j), x)).collect::<Result<Vec<_>>>()?;
    check_len("control", system.input_dim(), controls[0].len())?;
    Ok((Trajectory::new(*grid, states)?, ControlSignal::new(*grid, controls)?))
}
