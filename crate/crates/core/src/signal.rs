//! Grid-sampled controls and state trajectories.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{Result, SteerError};
use crate::ode::{all_finite, simpson, TimeGrid};

/// A `k`-dimensional control sampled at the grid nodes.
///
/// Between nodes the signal is the local cubic through nodes `j-2..=j+1`
/// (clamped at the ends of the grid). The stencil looks back so that the
/// state at `t_{j+1}` only depends on samples up to `j+1` once `j >= 2`, and
/// it keeps the RK4 midpoint evaluations fourth-order accurate.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    grid: TimeGrid,
    values: Vec<DVector<f64>>,
}

impl ControlSignal {
    pub fn new(grid: TimeGrid, values: Vec<DVector<f64>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SteerError::DimensionMismatch { what: "control samples", expected: grid.len(), found: values.len() });
        }
        let k = values[0].len();
        if let Some(bad) = values.iter().find(|v| v.len() != k) {
            return Err(SteerError::DimensionMismatch { what: "control sample dimension", expected: k, found: bad.len() });
        }
        if !values.iter().all(all_finite) {
            return Err(SteerError::NonFinite("control samples"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid, k: usize) -> Self {
        Self { grid, values: alloc::vec![DVector::zeros(k); grid.len()] }
    }

    pub fn constant(grid: TimeGrid, value: &DVector<f64>) -> Self {
        Self { grid, values: alloc::vec![value.clone(); grid.len()] }
    }

    pub fn from_fn(grid: TimeGrid, f: impl FnMut(f64) -> DVector<f64>) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Input dimension `k`.
    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn value(&self, j: usize) -> &DVector<f64> {
        &self.values[j]
    }

    /// Interpolated value at time `t` (clamped to the grid).
    pub fn at(&self, t: f64) -> DVector<f64> {
        let n = self.grid.len();
        let h = self.grid.step();
        let s = ((t - self.grid.t0()) / h).clamp(0.0, (n - 1) as f64);
        let j = (s as usize).min(n - 2);
        if s == j as f64 {
            return self.values[j].clone();
        }
        let (start, len) = if n < 4 { (0, n) } else { (j.saturating_sub(2).min(n - 4), 4) };
        let local = s - start as f64;
        let mut out = DVector::zeros(self.dim());
        for a in 0..len {
            let mut w = 1.0;
            for b in 0..len {
                if a != b {
                    w *= (local - b as f64) / (a as f64 - b as f64);
                }
            }
            out.axpy(w, &self.values[start + a], 1.0);
        }
        out
    }

    /// `sup_t |u(t)|` over the nodes, Euclidean in the input space.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `||u||_{L^2}^2` by composite Simpson on `|u(t_j)|^2`.
    pub fn l2_norm_squared(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v.norm_squared()).collect();
        simpson(self.grid.step(), &sq).expect("grid node count is odd")
    }

    /// `0.5 ||u||_{L^2}^2`.
    pub fn energy(&self) -> f64 {
        0.5 * self.l2_norm_squared()
    }

    /// Node-wise sup distance to another signal on the same grid.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(SteerError::GridMismatch);
        }
        if self.dim() != other.dim() {
            return Err(SteerError::DimensionMismatch { what: "control dimension", expected: self.dim(), found: other.dim() });
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

/// State samples `x_u(t_j)` of a controlled solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, states: Vec<DVector<f64>>) -> Result<Self> {
        if states.len() != grid.len() {
            return Err(SteerError::DimensionMismatch { what: "trajectory samples", expected: grid.len(), found: states.len() });
        }
        if !states.iter().all(all_finite) {
            return Err(SteerError::NonFinite("trajectory samples"));
        }
        Ok(Self { grid, states })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn state(&self, j: usize) -> &DVector<f64> {
        &self.states[j]
    }

    pub fn initial(&self) -> &DVector<f64> {
        &self.states[0]
    }

    /// `x_u(T)`, the value of the endpoint map.
    pub fn endpoint(&self) -> &DVector<f64> {
        &self.states[self.states.len() - 1]
    }
}
