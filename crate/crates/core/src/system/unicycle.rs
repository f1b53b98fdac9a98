use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{dmatrix, DMatrix, DVector};

use super::{RateBounds, SystemModel};

/// Kinematic unicycle with state `(x1, x2, theta)` and input `(v, omega)`.
///
/// The heading is a real number; targets must give the lifted angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Unicycle;

impl SystemModel for Unicycle {
    fn state_dim(&self) -> usize {
        3
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn drift(&self, _t: f64, _x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(3)
    }

    fn drift_jacobian(&self, _t: f64, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(3, 3)
    }

    fn input_matrix(&self, _t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        let (s, c) = libm::sincos(x[2]);
        dmatrix![c, 0.0; s, 0.0; 0.0, 1.0]
    }

    fn input_jacobian(&self, _t: f64, x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let (s, c) = libm::sincos(x[2]);
        let mut dv = DMatrix::zeros(3, 3);
        dv[(0, 2)] = -s;
        dv[(1, 2)] = c;
        vec![dv, DMatrix::zeros(3, 3)]
    }

    /// Driftless, and the columns of `D_x B` have unit norm.
    fn rate_bounds(&self) -> Option<RateBounds> {
        Some(RateBounds { lambda1: 0.0, input_lipschitz: 1.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::testing::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};

    #[test]
    fn input_matrix_examples() {
        let b = Unicycle.input_matrix(0.0, &dvector![0.0, 0.0, 0.0]);
        assert_eq!(b, dmatrix![1.0, 0.0; 0.0, 0.0; 0.0, 1.0]);
        let b = Unicycle.input_matrix(0.0, &dvector![0.0, 0.0, core::f64::consts::FRAC_PI_2]);
        assert_abs_diff_eq!((b.column(0) - dvector![0.0, 1.0, 0.0]).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(Unicycle.drift(0.3, &dvector![1.0, 2.0, 3.0]), DVector::zeros(3));
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..100 {
            let x = DVector::from_fn(3, |_, _| rng.gen_range(-7.0..7.0));
            let fd = fd_input_jacobian(&Unicycle, 0.0, &x);
            for (a, b) in Unicycle.input_jacobian(0.0, &x).iter().zip(&fd) {
                assert!(rel_dev(a, b) < 1e-5);
            }
        }
    }
}
