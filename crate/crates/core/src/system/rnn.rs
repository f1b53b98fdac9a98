use alloc::vec::Vec;

use alloc::vec;

use nalgebra::{dmatrix, dvector, DMatrix, DVector};

use super::{RateBounds, SystemModel};
use crate::error::{Result, SteerError};

fn sigmoid(s: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-s))
}

fn sigmoid_slope(s: f64) -> f64 {
    let v = sigmoid(s);
    v * (1.0 - v)
}

/// Fully actuated recurrent network `x' = -D x + W sigma(x) + u`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentNetwork {
    decay: DVector<f64>,
    weights: DMatrix<f64>,
}

impl RecurrentNetwork {
    /// `decay` is the diagonal of `D`.
    pub fn new(decay: DVector<f64>, weights: DMatrix<f64>) -> Result<Self> {
        let n = decay.len();
        if n == 0 {
            return Err(SteerError::NotApplicable("network needs at least one unit"));
        }
        if weights.nrows() != n || weights.ncols() != n {
            return Err(SteerError::DimensionMismatch { what: "weight matrix", expected: n, found: weights.nrows().max(weights.ncols()) });
        }
        if decay.iter().chain(weights.iter()).any(|v| !v.is_finite()) {
            return Err(SteerError::NonFinite("network parameters"));
        }
        Ok(Self { decay, weights })
    }

    /// `D = diag(1.25, 1.5, 1)` and the 3x3 coupling used for the benchmarks.
    pub fn standard() -> Self {
        Self {
            decay: dvector![1.25, 1.5, 1.0],
            weights: dmatrix![
                3.0, 1.0, -0.5;
                2.0, 1.0, 0.5;
                0.0, -1.5, 1.25
            ],
        }
    }

    pub fn decay(&self) -> &DVector<f64> {
        &self.decay
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }
}

impl SystemModel for RecurrentNetwork {
    fn state_dim(&self) -> usize {
        self.decay.len()
    }

    fn input_dim(&self) -> usize {
        self.decay.len()
    }

    fn drift(&self, _t: f64, x: &DVector<f64>) -> DVector<f64> {
        &self.weights * x.map(sigmoid) - self.decay.component_mul(x)
    }

    fn drift_jacobian(&self, _t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        let slopes = x.map(sigmoid_slope);
        let mut j = self.weights.clone();
        for (mut col, s) in j.column_iter_mut().zip(slopes.iter()) {
            col *= *s;
        }
        for i in 0..self.decay.len() {
            j[(i, i)] -= self.decay[i];
        }
        j
    }

    fn input_matrix(&self, _t: f64, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.decay.len(), self.decay.len())
    }

    fn input_jacobian(&self, _t: f64, _x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let n = self.decay.len();
        alloc::vec![DMatrix::zeros(n, n); n]
    }

    fn input_time_derivative(&self, _t: f64) -> Option<DMatrix<f64>> {
        let n = self.decay.len();
        Some(DMatrix::zeros(n, n))
    }

    fn input_is_state_independent(&self) -> bool {
        true
    }

    /// `max|D_ii| + |W|_F / 4`, using `sigma' <= 1/4` and `|W|_2 <= |W|_F`.
    fn rate_bounds(&self) -> Option<RateBounds> {
        let d_norm = self.decay.amax();
        Some(RateBounds { lambda1: d_norm + 0.25 * self.weights.norm(), input_lipschitz: 0.0 })
    }
}
