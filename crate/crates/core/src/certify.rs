//! Sampled controllability certificates.
//!
//! The conditions being checked are uniform infima over time and state. They
//! are approximated on a lattice, and each certificate carries the largest
//! finite-difference slope seen between lattice neighbours so that the gap
//! between samples can be judged.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{Result, SteerError};
use crate::flow::StmField;
use crate::linalg::{sigma_min, spectral_norm};
use crate::ode::simpson;
use crate::signal::{ControlSignal, Trajectory};
use crate::system::{check_len, SystemModel};

/// Tolerance above 1 accepted by the STM bound audit.
pub const STM_AUDIT_SLACK: f64 = 1e-6;

/// Sampling lattice over `[t0, T] x box`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox {
    t0: f64,
    t_end: f64,
    n_t: usize,
    lower: DVector<f64>,
    upper: DVector<f64>,
    n_x: usize,
}

impl SampleBox {
    pub const DEFAULT_TIME_SAMPLES: usize = 201;
    pub const DEFAULT_STATE_SAMPLES: usize = 21;

    pub fn new(t0: f64, t_end: f64, n_t: usize, lower: DVector<f64>, upper: DVector<f64>, n_x: usize) -> Result<Self> {
        if !(t0.is_finite() && t_end.is_finite() && t_end > t0) {
            return Err(SteerError::InvalidGrid("sample box needs a finite time range with T > t0"));
        }
        if n_t < 2 || n_x < 2 {
            return Err(SteerError::InvalidGrid("sample counts must be at least 2"));
        }
        check_len("sample box upper corner", lower.len(), upper.len())?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
            return Err(SteerError::InvalidGrid("sample box corners must be finite with lower <= upper"));
        }
        Ok(Self { t0, t_end, n_t, lower, upper, n_x })
    }

    /// Default sample counts.
    pub fn with_defaults(t0: f64, t_end: f64, lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        Self::new(t0, t_end, Self::DEFAULT_TIME_SAMPLES, lower, upper, Self::DEFAULT_STATE_SAMPLES)
    }

    pub fn time_range(&self) -> (f64, f64) {
        (self.t0, self.t_end)
    }

    pub fn time_samples(&self) -> usize {
        self.n_t
    }

    pub fn state_samples(&self) -> usize {
        self.n_x
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn time(&self, i: usize) -> f64 {
        if i + 1 == self.n_t {
            self.t_end
        } else {
            self.t0 + (self.t_end - self.t0) * i as f64 / (self.n_t - 1) as f64
        }
    }

    fn axis(&self, axis: usize, i: usize) -> f64 {
        let (l, u) = (self.lower[axis], self.upper[axis]);
        if i + 1 == self.n_x {
            u
        } else {
            l + (u - l) * i as f64 / (self.n_x - 1) as f64
        }
    }

    fn state_count(&self) -> usize {
        self.n_x.pow(self.dim() as u32)
    }

    /// State with mixed-radix lattice index `flat`.
    fn state(&self, mut flat: usize) -> DVector<f64> {
        DVector::from_fn(self.dim(), |axis, _| {
            let i = flat % self.n_x;
            flat /= self.n_x;
            self.axis(axis, i)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    Bracket,
    FullyActuated,
    StmBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub kind: CertificateKind,
    /// Infimum, floor, or worst bound ratio.
    pub value: f64,
    pub arg_min_t: f64,
    pub arg_min_x: DVector<f64>,
    pub threshold: f64,
    /// `value - threshold`
    pub margin: f64,
    pub sampled_lipschitz: f64,
    pub passed: bool,
}

/// Values on a `(time, state)` lattice stored time-major.
struct Lattice<'a> {
    sample: &'a SampleBox,
    states: usize,
    values: Vec<f64>,
}

impl Lattice<'_> {
    fn at(&self, it: usize, ix: usize) -> f64 {
        self.values[it * self.states + ix]
    }

    fn arg_min(&self) -> (usize, usize, f64) {
        let (mut best, mut value) = (0, f64::INFINITY);
        for (k, &v) in self.values.iter().enumerate() {
            if v < value {
                best = k;
                value = v;
            }
        }
        (best / self.states, best % self.states, value)
    }

    /// Largest `|f(p) - f(q)| / |p - q|` over lattice neighbours.
    fn lipschitz(&self) -> f64 {
        let s = self.sample;
        let dt = (s.t_end - s.t0) / (s.n_t - 1) as f64;
        let mut slope = 0.0f64;
        for it in 0..s.n_t {
            for ix in 0..self.states {
                let v = self.at(it, ix);
                if it + 1 < s.n_t {
                    slope = slope.max((self.at(it + 1, ix) - v).abs() / dt);
                }
                if self.states == 1 {
                    continue;
                }
                let mut stride = 1;
                let mut rest = ix;
                for axis in 0..s.dim() {
                    let i = rest % s.n_x;
                    rest /= s.n_x;
                    let dx = (s.upper[axis] - s.lower[axis]) / (s.n_x - 1) as f64;
                    if i + 1 < s.n_x && dx > 0.0 {
                        slope = slope.max((self.at(it, ix + stride) - v).abs() / dx);
                    }
                    stride *= s.n_x;
                }
            }
        }
        slope
    }
}

fn sample_lattice(
    sample: &SampleBox,
    state_independent: bool,
    mut f: impl FnMut(f64, &DVector<f64>) -> Result<f64>,
) -> Result<Lattice<'_>> {
    let states = if state_independent { 1 } else { sample.state_count() };
    let mut values = Vec::with_capacity(sample.n_t * states);
    let centre = (&sample.lower + &sample.upper) * 0.5;
    for it in 0..sample.n_t {
        let t = sample.time(it);
        for ix in 0..states {
            let x = if state_independent { centre.clone() } else { sample.state(ix) };
            let v = f(t, &x)?;
            if !v.is_finite() {
                return Err(SteerError::NonFinite("certificate sample"));
            }
            values.push(v);
        }
    }
    Ok(Lattice { sample, states, values })
}

fn lattice_state(lattice: &Lattice<'_>, ix: usize) -> DVector<f64> {
    if lattice.states == 1 {
        (&lattice.sample.lower + &lattice.sample.upper) * 0.5
    } else {
        lattice.sample.state(ix)
    }
}

/// `inf |det(B_t, D_x N_t(x) B_t - dB_t/dt)|` for planar single-input systems
/// with a state-independent input vector.
pub fn bracket_infimum<S: SystemModel + ?Sized>(system: &S, sample: &SampleBox) -> Result<Certificate> {
    if system.state_dim() != 2 || system.input_dim() != 1 {
        return Err(SteerError::NotApplicable("bracket certificate needs d = 2 and k = 1"));
    }
    if !system.input_is_state_independent() {
        return Err(SteerError::NotApplicable("bracket certificate needs a state-independent input vector"));
    }
    check_len("sample box dimension", 2, sample.dim())?;
    let lattice = sample_lattice(sample, false, |t, x| {
        let b = system.input_matrix(t, x);
        let b_dot = system.input_time_derivative(t).ok_or(SteerError::NotApplicable("bracket certificate needs dB/dt"))?;
        let w = system.drift_jacobian(t, x) * &b - b_dot;
        Ok((b[(0, 0)] * w[(1, 0)] - b[(1, 0)] * w[(0, 0)]).abs())
    })?;
    let (it, ix, value) = lattice.arg_min();
    Ok(Certificate {
        kind: CertificateKind::Bracket,
        value,
        arg_min_t: sample.time(it),
        arg_min_x: lattice_state(&lattice, ix),
        threshold: 0.0,
        margin: value,
        sampled_lipschitz: lattice.lipschitz(),
        passed: value > 0.0,
    })
}

/// Floor `exp(-2 lambda1 dt) |b|_1^2 / dt` with `b(t) = min_x sigma_min(B_t(x))`.
pub fn fully_actuated_floor<S: SystemModel + ?Sized>(system: &S, sample: &SampleBox, lambda1: f64) -> Result<Certificate> {
    if system.state_dim() != system.input_dim() {
        return Err(SteerError::NotApplicable("fully actuated floor needs k = d"));
    }
    check_len("sample box dimension", system.state_dim(), sample.dim())?;
    if !(lambda1 >= 0.0 && lambda1.is_finite()) {
        return Err(SteerError::InvalidParameter {
            name: "lambda1",
            reason: alloc::format!("must be finite and nonnegative, got {lambda1}"),
        });
    }
    let lattice = sample_lattice(sample, system.input_is_state_independent(), |t, x| Ok(sigma_min(&system.input_matrix(t, x))))?;
    let per_time: Vec<f64> =
        (0..sample.n_t).map(|it| (0..lattice.states).map(|ix| lattice.at(it, ix)).fold(f64::INFINITY, f64::min)).collect();
    let dt = sample.t_end - sample.t0;
    let h = dt / (sample.n_t - 1) as f64;
    let b_l1 = if sample.n_t % 2 == 1 {
        simpson(h, &per_time)?
    } else {
        h * (per_time.iter().sum::<f64>() - 0.5 * (per_time[0] + per_time[sample.n_t - 1]))
    };
    let value = libm::exp(-2.0 * lambda1 * dt) * b_l1 * b_l1 / dt;
    let (it, ix, _) = lattice.arg_min();
    Ok(Certificate {
        kind: CertificateKind::FullyActuated,
        value,
        arg_min_t: sample.time(it),
        arg_min_x: lattice_state(&lattice, ix),
        threshold: 0.0,
        margin: value,
        sampled_lipschitz: lattice.lipschitz(),
        passed: value > 0.0,
    })
}

/// Worst ratio `|R_u(T, t_j)| / exp(lambda_{1,B} (T - t_j))` with
/// `lambda_{1,B} = lambda1 + L_B |u|_inf`.
///
/// Passes when the ratio stays below `1 + STM_AUDIT_SLACK`. Bounds default to
/// the ones shipped by the model.
pub fn stm_bound_audit<S: SystemModel + ?Sized>(
    system: &S,
    u: &ControlSignal,
    traj: &Trajectory,
    stm: &StmField,
    bounds: Option<(f64, f64)>,
) -> Result<Certificate> {
    let (lambda1, input_lipschitz) = match bounds.or(system.rate_bounds().map(|b| (b.lambda1, b.input_lipschitz))) {
        Some(b) => b,
        None => return Err(SteerError::NotApplicable("STM audit needs rate bounds")),
    };
    if *u.grid() != stm.grid || *traj.grid() != stm.grid {
        return Err(SteerError::GridMismatch);
    }
    let rate = lambda1 + input_lipschitz * u.sup_norm();
    let t_end = stm.grid.t_end();
    let ratios: Vec<f64> =
        stm.matrices.iter().enumerate().map(|(j, r)| spectral_norm(r) * libm::exp(-rate * (t_end - stm.grid.node(j)))).collect();
    let (worst, value) = ratios.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
    let h = stm.grid.step();
    let slope = ratios.windows(2).map(|w| (w[1] - w[0]).abs() / h).fold(0.0, f64::max);
    let threshold = 1.0 + STM_AUDIT_SLACK;
    Ok(Certificate {
        kind: CertificateKind::StmBound,
        value,
        arg_min_t: stm.grid.node(worst),
        arg_min_x: traj.state(worst).clone(),
        threshold,
        margin: value - threshold,
        sampled_lipschitz: slope,
        passed: value <= threshold,
    })
}

/// Per-time-node minimum of `sigma_min(B_t(x))` over the box, i.e. the
/// sampled `b(t)` used by [`fully_actuated_floor`].
pub fn sampled_input_floor<S: SystemModel + ?Sized>(system: &S, sample: &SampleBox) -> Result<Vec<(f64, f64)>> {
    check_len("sample box dimension", system.state_dim(), sample.dim())?;
    let lattice = sample_lattice(sample, system.input_is_state_independent(), |t, x| Ok(sigma_min(&system.input_matrix(t, x))))?;
    Ok((0..sample.n_t)
        .map(|it| (sample.time(it), (0..lattice.states).map(|ix| lattice.at(it, ix)).fold(f64::INFINITY, f64::min)))
        .collect())
}
