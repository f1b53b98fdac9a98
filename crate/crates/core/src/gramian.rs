//! The three trajectory-dependent Gramians and their diagnostics.
//!
//! From adjoint rows (each `k x d`):
//!
//! ```text
//! M = int DF_row^T DF_row dt    empirical, symmetric PSD
//! N = int L_row^T  L_row  dt    almost-optimal, symmetric PSD
//! G = int L_row^T  DF_row dt    optimal, generally non-symmetric
//! ```

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SteerError};
use crate::flow::AdjointRows;
use crate::linalg::{condition_number, lambda_min};
use crate::ode::{integrate_ode, simpson};
use crate::signal::{ControlSignal, Trajectory};

/// Negative eigenvalues above this are roundoff, not indefiniteness.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GramianSet {
    pub m: DMatrix<f64>,
    pub n: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub lambda_min_n: f64,
    pub lambda_min_m: f64,
    pub cond_g: f64,
}

impl GramianSet {
    pub fn from_matrices(m: DMatrix<f64>, n: DMatrix<f64>, g: DMatrix<f64>) -> Self {
        let m = (&m + m.transpose()) * 0.5;
        let n = (&n + n.transpose()) * 0.5;
        Self { lambda_min_n: lambda_min(&n), lambda_min_m: lambda_min(&m), cond_g: condition_number(&g), m, n, g }
    }
}

pub fn assemble_gramians(rows: &AdjointRows) -> Result<GramianSet> {
    let h = rows.grid.step();
    let gather = |f: &dyn Fn(usize) -> DMatrix<f64>| -> Result<DMatrix<f64>> {
        let samples: Vec<DMatrix<f64>> = (0..rows.grid.len()).map(f).collect();
        simpson(h, &samples)
    };
    if rows.l_rows.iter().chain(&rows.df_rows).any(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(SteerError::NonFinite("adjoint rows"));
    }
    let m = gather(&|j| rows.df_rows[j].transpose() * &rows.df_rows[j])?;
    let n = gather(&|j| rows.l_rows[j].transpose() * &rows.l_rows[j])?;
    let g = gather(&|j| rows.l_rows[j].transpose() * &rows.df_rows[j])?;
    Ok(GramianSet::from_matrices(m, n, g))
}

/// Closed-form unicycle Gramians at the terminal anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct UnicycleGramians {
    /// `int g g^T` with `g = (cos theta, sin theta)`.
    pub g_omega: DMatrix<f64>,
    /// `int (p2(t) - p2(T), p1(T) - p1(t)) dt`
    pub delta_p: DVector<f64>,
    /// `(T - |int exp(2i int_0^t omega)|) / 2`
    pub lambda_min: f64,
    /// `N_T = [[G_omega, 0], [0, T]]`
    pub n: DMatrix<f64>,
    /// `G_T = [[G_omega, 0], [delta_p^T, T]]`
    pub g: DMatrix<f64>,
}

/// Unicycle Gramians from the turn rate and a matching trajectory.
///
/// `lambda_min` uses only `omega`: the phase `int_0^t omega` is integrated on
/// the grid and `|int exp(2i phase)|` is evaluated by Simpson.
pub fn unicycle_closed_form(omega: &ControlSignal, traj: &Trajectory) -> Result<UnicycleGramians> {
    let grid = *traj.grid();
    if *omega.grid() != grid {
        return Err(SteerError::GridMismatch);
    }
    if omega.dim() != 1 {
        return Err(SteerError::DimensionMismatch { what: "turn-rate signal", expected: 1, found: omega.dim() });
    }
    if traj.dim() != 3 {
        return Err(SteerError::DimensionMismatch { what: "unicycle state", expected: 3, found: traj.dim() });
    }
    let h = grid.step();
    let duration = grid.duration();

    let phase = integrate_ode(|t, _| omega.at(t), &grid, &DVector::zeros(1))?;
    let cos2: Vec<f64> = phase.values().iter().map(|p| libm::cos(2.0 * p[0])).collect();
    let sin2: Vec<f64> = phase.values().iter().map(|p| libm::sin(2.0 * p[0])).collect();
    let modulus = libm::hypot(simpson(h, &cos2)?, simpson(h, &sin2)?);
    let lambda = 0.5 * (duration - modulus);

    let heading_outer: Vec<DMatrix<f64>> = traj
        .states()
        .iter()
        .map(|x| {
            let (s, c) = libm::sincos(x[2]);
            DMatrix::from_row_slice(2, 2, &[c * c, c * s, c * s, s * s])
        })
        .collect();
    let g_omega = simpson(h, &heading_outer)?;
    let end = traj.endpoint();
    let offsets: Vec<DVector<f64>> = traj.states().iter().map(|x| DVector::from_column_slice(&[x[1] - end[1], end[0] - x[0]])).collect();
    let delta_p = simpson(h, &offsets)?;

    let mut n = DMatrix::zeros(3, 3);
    n.view_mut((0, 0), (2, 2)).copy_from(&g_omega);
    n[(2, 2)] = duration;
    let mut g = n.clone();
    g[(2, 0)] = delta_p[0];
    g[(2, 1)] = delta_p[1];
    Ok(UnicycleGramians { g_omega, delta_p, lambda_min: lambda, n, g })
}

/// Verdict against a coercivity floor `C^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityVerdict {
    pub feasible: bool,
    /// `lambda_min(N) - floor`
    pub margin: f64,
    pub lambda_min_n: f64,
    pub lambda_min_m: f64,
}

pub fn coercivity_check(gs: &GramianSet, floor: f64) -> CoercivityVerdict {
    let margin = gs.lambda_min_n - floor;
    CoercivityVerdict { feasible: margin >= 0.0, margin, lambda_min_n: gs.lambda_min_n, lambda_min_m: gs.lambda_min_m }
}

/// Eigenvalue margins of the two Loewner sandwiches
/// `alpha M <= N <= M / alpha` (terminal anchor) and
/// `gamma N_T <= N_t0 <= N_T / gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoewnerAudit {
    pub alpha: f64,
    /// `lambda_min(N - alpha M)`
    pub lower_margin: f64,
    /// `lambda_min(M / alpha - N)`
    pub upper_margin: f64,
    /// Largest `alpha` in `(0, 1]` for which both sides hold.
    pub sharpest_alpha: f64,
    pub gamma: f64,
    /// `lambda_min(N_t0 - gamma N_T)`
    pub anchor_lower_margin: f64,
    /// `lambda_min(N_T / gamma - N_t0)`
    pub anchor_upper_margin: f64,
}

impl LoewnerAudit {
    pub fn holds(&self) -> bool {
        self.lower_margin >= -PSD_TOLERANCE
            && self.upper_margin >= -PSD_TOLERANCE
            && self.anchor_lower_margin >= -PSD_TOLERANCE
            && self.anchor_upper_margin >= -PSD_TOLERANCE
    }
}

/// `gamma = exp(-2 Lambda1 (T - t0))`.
pub fn anchor_gamma(lambda1: f64, duration: f64) -> f64 {
    libm::exp(-2.0 * lambda1 * duration)
}

fn sandwich_margins(lower: &DMatrix<f64>, mid: &DMatrix<f64>, alpha: f64) -> (f64, f64) {
    (lambda_min(&(mid - lower * alpha)), lambda_min(&(lower / alpha - mid)))
}

/// Bisection for the largest `alpha` in `(0, 1]` with
/// `alpha lower <= mid <= lower / alpha`. Zero when no positive `alpha` works.
pub fn sharpest_alpha(lower: &DMatrix<f64>, mid: &DMatrix<f64>) -> f64 {
    let holds = |a: f64| {
        let (lo, hi) = sandwich_margins(lower, mid, a);
        let scale = PSD_TOLERANCE * (1.0 + mid.norm());
        lo >= -scale && hi >= -scale
    };
    if holds(1.0) {
        return 1.0;
    }
    let mut bad = 1.0;
    let mut good = 0.5;
    while !holds(good) {
        bad = good;
        good *= 0.5;
        if good < 1e-300 {
            return 0.0;
        }
    }
    for _ in 0..100 {
        let mid_a = 0.5 * (good + bad);
        if holds(mid_a) {
            good = mid_a;
        } else {
            bad = mid_a;
        }
        if bad - good <= 1e-14 * bad {
            break;
        }
    }
    good
}

pub fn loewner_audit(initial_anchor: &GramianSet, terminal_anchor: &GramianSet, alpha: f64, gamma: f64) -> Result<LoewnerAudit> {
    let d = terminal_anchor.n.nrows();
    if initial_anchor.n.nrows() != d || terminal_anchor.m.nrows() != d {
        return Err(SteerError::DimensionMismatch { what: "Gramian size", expected: d, found: initial_anchor.n.nrows() });
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(SteerError::InvalidParameter { name: "alpha", reason: alloc::format!("must lie in (0, 1], got {alpha}") });
    }
    let (lower_margin, upper_margin) = sandwich_margins(&terminal_anchor.m, &terminal_anchor.n, alpha);
    let (anchor_lower_margin, anchor_upper_margin) = sandwich_margins(&terminal_anchor.n, &initial_anchor.n, gamma);
    Ok(LoewnerAudit {
        alpha,
        lower_margin,
        upper_margin,
        sharpest_alpha: sharpest_alpha(&terminal_anchor.m, &terminal_anchor.n),
        gamma,
        anchor_lower_margin,
        anchor_upper_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::TimeGrid;
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn brute_force_double_loop_oracle() {
        let grid = TimeGrid::new(0.0, 2.0, 9).unwrap();
        let l_rows: Vec<_> = grid.nodes().map(|t| dmatrix![t, 1.0 - t, 0.5; libm::sin(t), 2.0, -t]).collect();
        let df_rows: Vec<_> = grid.nodes().map(|t| dmatrix![1.0, t * t, 0.0; t, -1.0, libm::cos(t)]).collect();
        let rows = AdjointRows { grid, l_rows: l_rows.clone(), df_rows: df_rows.clone() };
        let gs = assemble_gramians(&rows).unwrap();
        let h = grid.step();
        let w = |j: usize| {
            if j == 0 || j == 8 {
                h / 3.0
            } else if j % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            }
        };
        for a in 0..3 {
            for b in 0..3 {
                let (mut m, mut n, mut g) = (0.0, 0.0, 0.0);
                for j in 0..9 {
                    for r in 0..2 {
                        m += w(j) * df_rows[j][(r, a)] * df_rows[j][(r, b)];
                        n += w(j) * l_rows[j][(r, a)] * l_rows[j][(r, b)];
                        g += w(j) * l_rows[j][(r, a)] * df_rows[j][(r, b)];
                    }
                }
                assert_abs_diff_eq!(gs.m[(a, b)], m, epsilon = 1e-10);
                assert_abs_diff_eq!(gs.n[(a, b)], n, epsilon = 1e-10);
                assert_abs_diff_eq!(gs.g[(a, b)], g, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn non_finite_rows_rejected() {
        let grid = TimeGrid::new(0.0, 1.0, 3).unwrap();
        let rows = AdjointRows {
            grid,
            l_rows: alloc::vec![dmatrix![1.0], dmatrix![f64::NAN], dmatrix![1.0]],
            df_rows: alloc::vec![dmatrix![1.0]; 3],
        };
        assert!(assemble_gramians(&rows).is_err());
    }

    #[test]
    fn coercivity_verdicts() {
        let gs = GramianSet::from_matrices(DMatrix::identity(2, 2), dmatrix![1.0, 0.0; 0.0, 0.0], DMatrix::identity(2, 2));
        let v = coercivity_check(&gs, 1e-6);
        assert!(!v.feasible);
        assert!(v.margin < 0.0);
        let gs = GramianSet::from_matrices(DMatrix::identity(2, 2), DMatrix::identity(2, 2) * 0.5, DMatrix::identity(2, 2));
        assert!(coercivity_check(&gs, 1e-6).feasible);
    }

    #[test]
    fn sandwich_equality_case() {
        let m = dmatrix![2.0, 0.3; 0.3, 1.0];
        let gs = GramianSet::from_matrices(m.clone(), m.clone(), m);
        let audit = loewner_audit(&gs, &gs, 1.0, 1.0).unwrap();
        assert!(audit.holds());
        assert_eq!(audit.sharpest_alpha, 1.0);
    }

    #[test]
    fn sharpest_alpha_matches_generalized_eigenvalues() {
        // M = diag(1, 4), N = diag(2, 1): alpha* = min(1/2, 1/4, 1) over both sides.
        let m = dmatrix![1.0, 0.0; 0.0, 4.0];
        let n = dmatrix![2.0, 0.0; 0.0, 1.0];
        // alpha <= min eig(M^-1 N) = 1/4 and alpha <= 1/max eig(M^-1 N) = 1/2
        assert_abs_diff_eq!(sharpest_alpha(&m, &n), 0.25, epsilon = 1e-9);
        assert_eq!(sharpest_alpha(&dmatrix![1.0, 0.0; 0.0, 0.0], &DMatrix::identity(2, 2)), 0.0);
    }

    #[test]
    fn alpha_out_of_range() {
        let gs = GramianSet::from_matrices(DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::identity(2, 2));
        assert!(loewner_audit(&gs, &gs, 0.0, 1.0).is_err());
        let small = GramianSet::from_matrices(DMatrix::identity(1, 1), DMatrix::identity(1, 1), DMatrix::identity(1, 1));
        assert!(loewner_audit(&small, &gs, 0.5, 1.0).is_err());
    }

    #[test]
    fn unicycle_constant_turn_rate_half_period() {
        let grid = TimeGrid::new(0.0, core::f64::consts::PI, 401).unwrap();
        let omega = ControlSignal::constant(grid, &dvector![1.0]);
        let states = grid.nodes().map(|t| dvector![libm::sin(t), 1.0 - libm::cos(t), t]).collect();
        let traj = Trajectory::new(grid, states).unwrap();
        let cf = unicycle_closed_form(&omega, &traj).unwrap();
        assert_abs_diff_eq!(cf.lambda_min, core::f64::consts::FRAC_PI_2, epsilon = 1e-9);
        assert_abs_diff_eq!(lambda_min(&cf.g_omega), core::f64::consts::FRAC_PI_2, epsilon = 1e-9);
    }
}
