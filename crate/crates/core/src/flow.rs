//! Drift flows, flow Jacobians, the controlled state-transition matrix and
//! the adjoint rows of `L_{u,tau}` and `DF_tau(u)`.
//!
//! With `tau = T` the representation `x_u(T) = Phi_{t0,T}(x0) + L_u u` holds,
//! so the feasible map is the endpoint defect `F_T(u) = x_u(T) - x1`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SteerError};
use crate::ode::{integrate_span, rk4_step, simpson, TimeGrid};
use crate::signal::{ControlSignal, Trajectory};
use crate::system::{Anchor, SystemModel, TransferProblem};

fn pack(x: &DVector<f64>, y: &DMatrix<f64>) -> DVector<f64> {
    let d = x.len();
    let mut z = DVector::zeros(d + d * d);
    z.rows_mut(0, d).copy_from(x);
    z.rows_mut(d, d * d).copy_from_slice(y.as_slice());
    z
}

fn unpack(z: &DVector<f64>, d: usize) -> (DVector<f64>, DMatrix<f64>) {
    (z.rows(0, d).into_owned(), DMatrix::from_column_slice(d, d, &z.as_slice()[d..]))
}

/// `Phi_{s,t}(x)`: drift-only flow from time `s` to time `t` in `steps` RK4
/// steps. `t < s` integrates backward.
pub fn flow_map<S: SystemModel + ?Sized>(system: &S, s: f64, t: f64, x: &DVector<f64>, steps: usize) -> Result<DVector<f64>> {
    integrate_span(|r, y| system.drift(r, y), s, t, x, steps)
}

/// `Phi_{s,t}(x)` together with `D Phi_{s,t}(x)` from the variational equation
/// `Y' = D_x N_r(Phi_{s,r}(x)) Y`, `Y(s) = Id`.
pub fn flow_with_jacobian<S: SystemModel + ?Sized>(
    system: &S,
    s: f64,
    t: f64,
    x: &DVector<f64>,
    steps: usize,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let d = system.state_dim();
    let z0 = pack(x, &DMatrix::identity(d, d));
    let z = integrate_span(
        |r, z| {
            let (x, y) = unpack(z, d);
            pack(&system.drift(r, &x), &(system.drift_jacobian(r, &x) * y))
        },
        s,
        t,
        &z0,
        steps,
    )?;
    Ok(unpack(&z, d))
}

pub fn flow_jacobian<S: SystemModel + ?Sized>(system: &S, s: f64, t: f64, x: &DVector<f64>, steps: usize) -> Result<DMatrix<f64>> {
    Ok(flow_with_jacobian(system, s, t, x, steps)?.1)
}

/// `R_u(T, t_j)` for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct StmField {
    pub grid: TimeGrid,
    pub matrices: Vec<DMatrix<f64>>,
}

/// `D Phi_{t_j, tau}(x_u(t_j))` for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowJacobianField {
    pub grid: TimeGrid,
    pub anchor: Anchor,
    pub matrices: Vec<DMatrix<f64>>,
}

/// Per-node `k x d` adjoint rows.
///
/// `l_rows[j] = B^T D Phi_{t_j,tau}^T` and
/// `df_rows[j] = B^T (D Phi_{T,tau}(x_u(T)) R_u(T,t_j))^T`, so that
/// `[L^* z](t_j) = l_rows[j] z` and `[DF^* z](t_j) = df_rows[j] z`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointRows {
    pub grid: TimeGrid,
    pub l_rows: Vec<DMatrix<f64>>,
    pub df_rows: Vec<DMatrix<f64>>,
}

/// Cubic Hermite interpolation of a trajectory between nodes, using the
/// controlled vector field for the nodal slopes.
struct StateInterpolant<'a> {
    grid: TimeGrid,
    states: &'a [DVector<f64>],
    slopes: Vec<DVector<f64>>,
}

impl<'a> StateInterpolant<'a> {
    fn new<S: SystemModel + ?Sized>(system: &S, u: &ControlSignal, traj: &'a Trajectory) -> Self {
        let grid = *traj.grid();
        let slopes = traj.states().iter().enumerate().map(|(j, x)| system.vector_field(grid.node(j), x, u.value(j))).collect();
        Self { grid, states: traj.states(), slopes }
    }

    fn at(&self, t: f64) -> DVector<f64> {
        let n = self.grid.len();
        let h = self.grid.step();
        let s = ((t - self.grid.t0()) / h).clamp(0.0, (n - 1) as f64);
        let j = (s as usize).min(n - 2);
        let r = s - j as f64;
        if r == 0.0 {
            return self.states[j].clone();
        }
        let r2 = r * r;
        let r3 = r2 * r;
        let h00 = 2.0 * r3 - 3.0 * r2 + 1.0;
        let h10 = r3 - 2.0 * r2 + r;
        let h01 = -2.0 * r3 + 3.0 * r2;
        let h11 = r3 - r2;
        let mut x = &self.states[j] * h00;
        x.axpy(h10 * h, &self.slopes[j], 1.0);
        x.axpy(h01, &self.states[j + 1], 1.0);
        x.axpy(h11 * h, &self.slopes[j + 1], 1.0);
        x
    }
}

fn same_grid(a: &TimeGrid, b: &TimeGrid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(SteerError::GridMismatch)
    }
}

/// `R_u(T, t_j)` by one backward sweep of `d/dt R(T,t) = -R(T,t) A_u(t)`
/// from `R(T,T) = Id`.
pub fn controlled_stm<S: SystemModel + ?Sized>(system: &S, u: &ControlSignal, traj: &Trajectory) -> Result<StmField> {
    same_grid(u.grid(), traj.grid())?;
    let grid = *traj.grid();
    let d = system.state_dim();
    let interp = StateInterpolant::new(system, u, traj);
    let mut rhs = |t: f64, r: &DVector<f64>| {
        let a = system.controlled_jacobian(t, &interp.at(t), &u.at(t));
        let rm = DMatrix::from_column_slice(d, d, r.as_slice());
        let dr = -(rm * a);
        DVector::from_column_slice(dr.as_slice())
    };
    let n = grid.len();
    let h = grid.step();
    let mut matrices = alloc::vec![DMatrix::zeros(d, d); n];
    matrices[n - 1] = DMatrix::identity(d, d);
    let mut r = DVector::from_column_slice(matrices[n - 1].as_slice());
    for j in (0..n - 1).rev() {
        r = rk4_step(&mut rhs, grid.node(j + 1), -h, &r);
        if !r.iter().all(|v| v.is_finite()) {
            return Err(SteerError::Divergence { node: j, time: grid.node(j) });
        }
        matrices[j] = DMatrix::from_column_slice(d, d, r.as_slice());
    }
    Ok(StmField { grid, matrices })
}

fn anchor_index(grid: &TimeGrid, anchor: Anchor) -> usize {
    match anchor {
        Anchor::Initial => 0,
        Anchor::Terminal => grid.len() - 1,
    }
}

/// `D Phi_{t_j, tau}(x_u(t_j))` by an independent drift-only variational solve
/// from every node to the anchor.
pub fn flow_jacobian_field<S: SystemModel + ?Sized>(system: &S, traj: &Trajectory, anchor: Anchor) -> Result<FlowJacobianField> {
    let grid = *traj.grid();
    let target = anchor_index(&grid, anchor);
    let tau = grid.node(target);
    let matrices = traj
        .states()
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let steps = target.abs_diff(j);
            flow_with_jacobian(system, grid.node(j), tau, x, steps)
                .map(|(_, y)| y)
                .map_err(|_| SteerError::Divergence { node: j, time: grid.node(j) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowJacobianField { grid, anchor, matrices })
}

/// Adjoint rows of `L_{u,tau}` and `DF_tau(u)` at every node.
pub fn adjoint_rows<S: SystemModel + ?Sized>(
    system: &S,
    traj: &Trajectory,
    stm: &StmField,
    dphi: &FlowJacobianField,
) -> Result<AdjointRows> {
    let grid = *traj.grid();
    same_grid(&grid, &stm.grid)?;
    same_grid(&grid, &dphi.grid)?;
    // D Phi_{T,tau}(x_u(T)) is the last entry of the field.
    let terminal = &dphi.matrices[grid.len() - 1];
    let mut l_rows = Vec::with_capacity(grid.len());
    let mut df_rows = Vec::with_capacity(grid.len());
    for (j, x) in traj.states().iter().enumerate() {
        let bt = system.input_matrix(grid.node(j), x).transpose();
        l_rows.push(&bt * dphi.matrices[j].transpose());
        df_rows.push(&bt * (terminal * &stm.matrices[j]).transpose());
    }
    if l_rows.iter().chain(&df_rows).any(|m| m.iter().any(|v| !v.is_finite())) {
        return Err(SteerError::NonFinite("adjoint rows"));
    }
    Ok(AdjointRows { grid, l_rows, df_rows })
}

/// `L_{u,tau} v = int D Phi_{t,tau}(x_u(t)) B_t(x_u(t)) v(t) dt`.
pub fn apply_l<S: SystemModel + ?Sized>(
    system: &S,
    traj: &Trajectory,
    dphi: &FlowJacobianField,
    v: &ControlSignal,
) -> Result<DVector<f64>> {
    let grid = *traj.grid();
    same_grid(&grid, v.grid())?;
    same_grid(&grid, &dphi.grid)?;
    let integrand: Vec<DVector<f64>> =
        traj.states().iter().enumerate().map(|(j, x)| &dphi.matrices[j] * (system.input_matrix(grid.node(j), x) * v.value(j))).collect();
    simpson(grid.step(), &integrand)
}

/// `y_tau = Phi_{T,tau}(x1) - Phi_{t0,tau}(x0)`.
pub fn target_offset<S: SystemModel + ?Sized>(system: &S, problem: &TransferProblem) -> Result<DVector<f64>> {
    problem.check_dims(system)?;
    let grid = &problem.grid;
    let steps = grid.len() - 1;
    match problem.anchor {
        Anchor::Terminal => Ok(&problem.x1 - flow_map(system, grid.t0(), grid.t_end(), &problem.x0, steps)?),
        Anchor::Initial => Ok(flow_map(system, grid.t_end(), grid.t0(), &problem.x1, steps)? - &problem.x0),
    }
}

/// `F_tau(u) = L_{u,tau} u - y_tau`.
pub fn feasibility_residual<S: SystemModel + ?Sized>(
    system: &S,
    u: &ControlSignal,
    traj: &Trajectory,
    dphi: &FlowJacobianField,
    problem: &TransferProblem,
) -> Result<DVector<f64>> {
    if dphi.anchor != problem.anchor {
        return Err(SteerError::NotApplicable("flow Jacobian field and problem use different anchors"));
    }
    Ok(apply_l(system, traj, dphi, u)? - target_offset(system, problem)?)
}
