use alloc::vec::Vec;

use alloc::vec;

use nalgebra::{dmatrix, DMatrix, DVector};

use super::{RateBounds, SystemModel};
use crate::error::{Result, SteerError};
use crate::linalg::spectral_norm;

/// Time-invariant linear system `x' = A x + B u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let d = a.nrows();
        if a.ncols() != d {
            return Err(SteerError::DimensionMismatch { what: "state matrix columns", expected: d, found: a.ncols() });
        }
        if b.nrows() != d {
            return Err(SteerError::DimensionMismatch { what: "input matrix rows", expected: d, found: b.nrows() });
        }
        if b.ncols() == 0 || b.ncols() > d {
            return Err(SteerError::DimensionMismatch { what: "input matrix columns", expected: d, found: b.ncols() });
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(SteerError::NonFinite("linear system matrices"));
        }
        Ok(Self { a, b })
    }

    /// `theta'' = u` as a first-order system.
    pub fn double_integrator() -> Self {
        Self { a: dmatrix![0.0, 1.0; 0.0, 0.0], b: dmatrix![0.0; 1.0] }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
}

impl SystemModel for LinearSystem {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn drift(&self, _t: f64, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x
    }

    fn drift_jacobian(&self, _t: f64, _x: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }

    fn input_matrix(&self, _t: f64, _x: &DVector<f64>) -> DMatrix<f64> {
        self.b.clone()
    }

    fn input_jacobian(&self, _t: f64, _x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let d = self.state_dim();
        alloc::vec![DMatrix::zeros(d, d); self.input_dim()]
    }

    fn input_time_derivative(&self, _t: f64) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(self.b.nrows(), self.b.ncols()))
    }

    fn input_is_state_independent(&self) -> bool {
        true
    }

    fn rate_bounds(&self) -> Option<RateBounds> {
        Some(RateBounds { lambda1: spectral_norm(&self.a), input_lipschitz: 0.0 })
    }
}
