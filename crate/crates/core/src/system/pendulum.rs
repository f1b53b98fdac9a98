use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{dmatrix, dvector, DMatrix, DVector};

use super::{RateBounds, SystemModel};
use crate::error::{Result, SteerError};
use crate::linalg::spectral_norm;

/// Parameters of the nondimensional torque-controlled pendulum with a
/// periodically varying length, `phi(t) = cos t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    pub g: f64,
    pub ell0: f64,
    pub ell1: f64,
    pub mass: f64,
    pub nu: f64,
    /// Forcing frequency of the length modulation.
    pub omega: f64,
    /// Damping coefficient in `gamma(t) = 2 eps b(t) phi'(t) + beta lambda`.
    pub beta: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        // beta is not given separately from nu; both default to 0.2.
        Self { g: 9.81, ell0: 4.0, ell1: 2.0, mass: 1.0, nu: 0.2, omega: 2.0, beta: 0.2 }
    }
}

/// `N_t(x) = (x2, -a(t) sin x1 - gamma(t) x2)`, `B_t = (0, b(t))^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pendulum {
    params: PendulumParams,
    eps: f64,
    lambda: f64,
    bounds: RateBounds,
}

impl Pendulum {
    pub fn new(params: PendulumParams) -> Result<Self> {
        if !(params.ell0 > 0.0) {
            return Err(SteerError::InvalidParameter { name: "ell0", reason: format!("must be positive, got {}", params.ell0) });
        }
        if params.omega == 0.0 || !params.omega.is_finite() {
            return Err(SteerError::InvalidParameter {
                name: "omega",
                reason: format!("must be finite and nonzero, got {}", params.omega),
            });
        }
        if !(params.g > 0.0) {
            return Err(SteerError::InvalidParameter { name: "g", reason: format!("must be positive, got {}", params.g) });
        }
        let eps = params.ell1 / params.ell0;
        if !(eps.abs() < 1.0) {
            return Err(SteerError::SingularLength { ratio: eps });
        }
        let lambda = libm::sqrt(params.g / params.ell0) / params.omega;
        let mut p = Self { params, eps, lambda, bounds: RateBounds { lambda1: 0.0, input_lipschitz: 0.0 } };
        p.bounds.lambda1 = p.jacobian_norm_bound();
        Ok(p)
    }

    pub fn params(&self) -> &PendulumParams {
        &self.params
    }

    /// `eps = l1 / l0`.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `lambda = omega0 / omega` with `omega0 = sqrt(g / l0)`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn b(&self, t: f64) -> f64 {
        let s = 1.0 + self.eps * libm::cos(t);
        1.0 / (s * s)
    }

    pub fn b_dot(&self, t: f64) -> f64 {
        let s = 1.0 + self.eps * libm::cos(t);
        2.0 * self.eps * libm::sin(t) / (s * s * s)
    }

    pub fn a(&self, t: f64) -> f64 {
        self.lambda * self.lambda * libm::sqrt(self.b(t))
    }

    pub fn gamma(&self, t: f64) -> f64 {
        -2.0 * self.eps * self.b(t) * libm::sin(t) + self.params.beta * self.lambda
    }

    // |D_x N_t(x)| is convex in cos(x1), so the sup over x sits at cos(x1) = +-1.
    // The coefficients are 2*pi periodic; a dense sample plus 0.1% margin.
    fn jacobian_norm_bound(&self) -> f64 {
        let samples = 20_000;
        let mut worst: f64 = 0.0;
        for i in 0..=samples {
            let t = 2.0 * core::f64::consts::PI * i as f64 / samples as f64;
            for c in [-1.0, 1.0] {
                let j = dmatrix![0.0, 1.0; -self.a(t) * c, -self.gamma(t)];
                worst = worst.max(spectral_norm(&j));
            }
        }
        worst * 1.001
    }
}

impl SystemModel for Pendulum {
    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn drift(&self, t: f64, x: &DVector<f64>) -> DVector<f64> {
        dvector![x[1], -self.a(t) * libm::sin(x[0]) - self.gamma(t) * x[1]]
    }

    fn drift_jacobian(&self, t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        dmatrix![0.0, 1.0; -self.a(t) * libm::cos(x[0]), -self.gamma(t)]
    }

    fn input_matrix(&self, t: f64, _x: &DVector<f64>) -> DMatrix<f64> {
        dmatrix![0.0; self.b(t)]
    }

    fn input_jacobian(&self, _t: f64, _x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(2, 2)]
    }

    fn input_time_derivative(&self, t: f64) -> Option<DMatrix<f64>> {
        Some(dmatrix![0.0; self.b_dot(t)])
    }

    fn input_is_state_independent(&self) -> bool {
        true
    }

    fn rate_bounds(&self) -> Option<RateBounds> {
        Some(self.bounds)
    }
}
