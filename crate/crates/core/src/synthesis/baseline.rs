//! Feedback-linearization baselines.
//!
//! Each baseline cancels the nonlinearity with a state feedback and drives
//! the resulting linear chain with its own minimum-energy reference.

use alloc::vec;

use nalgebra::{dvector, DVector};

use super::{finish_report, Method, SynthesisReport};
use crate::error::{Result, SteerError};
use crate::linalg::{sigma_min, solve_refined};
use crate::system::{check_len, simulate_closed_loop, Pendulum, SystemModel, TransferProblem, Unicycle};

/// Input matrices with a smaller singular value are treated as singular.
const MIN_INPUT_SIGMA: f64 = 1e-8;

/// Flat-output paths slower than this cannot recover the heading.
pub const FLAT_OUTPUT_MIN_SPEED: f64 = 1e-6;

/// Speed floor for the endpoint tangents of the unicycle path.
const MIN_TANGENT_SPEED: f64 = 0.1;

/// `u = B^{-1}(v - N)` with `v = (x1 - x0)/T` plus a tracking term
/// toward the straight line. Needs `k = d` and `B` invertible along the run.
pub fn baseline_fl_full<S: SystemModel + ?Sized>(system: &S, problem: &TransferProblem) -> Result<SynthesisReport> {
    problem.check_dims(system)?;
    check_len("input dimension (full actuation)", system.state_dim(), system.input_dim())?;
    let grid = problem.grid;
    let (t0, len) = (grid.t0(), grid.duration());
    let velocity = (&problem.x1 - &problem.x0) / len;
    let gain = 1.0 / len;
    let law = |t: f64, x: &DVector<f64>| {
        let reference = &problem.x0 + &velocity * (t - t0);
        let b = system.input_matrix(t, x);
        let sigma = sigma_min(&b);
        if !(sigma > MIN_INPUT_SIGMA) {
            return Err(SteerError::SingularInput { time: t, sigma_min: sigma });
        }
        let v = &velocity + (reference - x) * gain - system.drift(t, x);
        solve_refined(&b, &v).ok_or(SteerError::SingularInput { time: t, sigma_min: sigma })
    };
    let (trajectory, control) = simulate_closed_loop(system, &grid, &problem.x0, law)?;
    finish_report(system, Method::BaselineFl, problem, control, Some(trajectory))
}

/// Minimum-energy control of `p'' = v` between two phase points:
/// `v(t) = alpha (T - t) + beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleIntegratorSteer {
    t_end: f64,
    alpha: f64,
    beta: f64,
}

impl DoubleIntegratorSteer {
    pub fn new(t0: f64, t_end: f64, from: [f64; 2], to: [f64; 2]) -> Result<Self> {
        let d = t_end - t0;
        if !(d > 0.0) {
            return Err(SteerError::InvalidGrid("horizon must be positive"));
        }
        let w = nalgebra::dmatrix![d * d * d / 3.0, d * d / 2.0; d * d / 2.0, d];
        let offset = dvector![to[0] - from[0] - d * from[1], to[1] - from[1]];
        let c = solve_refined(&w, &offset).ok_or(SteerError::InvalidGrid("horizon too short"))?;
        Ok(Self { t_end, alpha: c[0], beta: c[1] })
    }

    pub fn control(&self, t: f64) -> f64 {
        self.alpha * (self.t_end - t) + self.beta
    }
}

/// Pendulum baseline: `u = (v + a(t) sin x1 + gamma(t) x2) / b(t)` with `v`
/// the double-integrator reference.
pub fn baseline_fl_pendulum(system: &Pendulum, problem: &TransferProblem) -> Result<SynthesisReport> {
    problem.check_dims(system)?;
    let grid = problem.grid;
    let reference = DoubleIntegratorSteer::new(grid.t0(), grid.t_end(), [problem.x0[0], problem.x0[1]], [problem.x1[0], problem.x1[1]])?;
    let law = |t: f64, x: &DVector<f64>| {
        let b = system.b(t);
        if !(b.abs() > MIN_INPUT_SIGMA) {
            return Err(SteerError::SingularInput { time: t, sigma_min: b.abs() });
        }
        let v = reference.control(t);
        Ok(dvector![(v + system.a(t) * libm::sin(x[0]) + system.gamma(t) * x[1]) / b])
    };
    let (trajectory, control) = simulate_closed_loop(system, &grid, &problem.x0, law)?;
    finish_report(system, Method::BaselineFl, problem, control, Some(trajectory))
}

/// Cubic Hermite path of the unicycle position with endpoint tangents along
/// the initial and final headings.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatOutputPath {
    t0: f64,
    endpoint_speed: f64,
    duration: f64,
    p0: [f64; 2],
    p1: [f64; 2],
    m0: [f64; 2],
    m1: [f64; 2],
}

impl FlatOutputPath {
    pub fn new(problem: &TransferProblem) -> Result<Self> {
        problem.check_dims(&Unicycle)?;
        let (x0, x1) = (&problem.x0, &problem.x1);
        let duration = problem.grid.duration();
        let dist = libm::hypot(x1[0] - x0[0], x1[1] - x0[1]);
        if !(dist > 0.0) {
            return Err(SteerError::FlatnessSingularity { time: problem.grid.t0(), speed: 0.0 });
        }
        let speed = (dist / duration).max(MIN_TANGENT_SPEED);
        // Hermite tangents are taken with respect to normalized time.
        let scale = speed * duration;
        let path = Self {
            t0: problem.grid.t0(),
            endpoint_speed: speed,
            duration,
            p0: [x0[0], x0[1]],
            p1: [x1[0], x1[1]],
            m0: [scale * libm::cos(x0[2]), scale * libm::sin(x0[2])],
            m1: [scale * libm::cos(x1[2]), scale * libm::sin(x1[2])],
        };
        // The heading is undefined wherever the path stalls.
        let samples = 8 * problem.grid.len();
        for i in 0..=samples {
            let t = path.t0 + duration * i as f64 / samples as f64;
            let [vx, vy] = path.velocity(t);
            let speed = libm::hypot(vx, vy);
            if !(speed > FLAT_OUTPUT_MIN_SPEED) {
                return Err(SteerError::FlatnessSingularity { time: t, speed });
            }
        }
        Ok(path)
    }

    /// `|p'|` at both ends, `max(|p1 - p0| / T, 0.1)`.
    pub fn endpoint_speed(&self) -> f64 {
        self.endpoint_speed
    }

    fn combine(&self, w: [f64; 4]) -> [f64; 2] {
        let f = |i: usize| w[0] * self.p0[i] + w[1] * self.m0[i] + w[2] * self.p1[i] + w[3] * self.m1[i];
        [f(0), f(1)]
    }

    fn normalized(&self, t: f64) -> f64 {
        (t - self.t0) / self.duration
    }

    pub fn position(&self, t: f64) -> [f64; 2] {
        let s = self.normalized(t);
        let (s2, s3) = (s * s, s * s * s);
        self.combine([2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2])
    }

    pub fn velocity(&self, t: f64) -> [f64; 2] {
        let s = self.normalized(t);
        let s2 = s * s;
        let [x, y] = self.combine([6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s]);
        [x / self.duration, y / self.duration]
    }

    pub fn acceleration(&self, t: f64) -> [f64; 2] {
        let s = self.normalized(t);
        let [x, y] = self.combine([12.0 * s - 6.0, 6.0 * s - 4.0, -12.0 * s + 6.0, 6.0 * s - 2.0]);
        let d2 = self.duration * self.duration;
        [x / d2, y / d2]
    }

    /// `(v, omega) = (|p'|, (p' x p'') / |p'|^2)`.
    pub fn controls(&self, t: f64) -> Result<DVector<f64>> {
        let [vx, vy] = self.velocity(t);
        let [ax, ay] = self.acceleration(t);
        let speed_sq = vx * vx + vy * vy;
        let speed = libm::sqrt(speed_sq);
        if !(speed > FLAT_OUTPUT_MIN_SPEED) {
            return Err(SteerError::FlatnessSingularity { time: t, speed });
        }
        Ok(dvector![speed, (vx * ay - vy * ax) / speed_sq])
    }
}

/// Unicycle baseline: open-loop controls read off the flat-output path.
pub fn baseline_fl_unicycle(problem: &TransferProblem) -> Result<SynthesisReport> {
    let path = FlatOutputPath::new(problem)?;
    let (trajectory, control) = simulate_closed_loop(&Unicycle, &problem.grid, &problem.x0, |t, _| path.controls(t))?;
    let mut report = finish_report(&Unicycle, Method::BaselineFl, problem, control, Some(trajectory))?;
    report.notes.push(alloc::format!("flat-output endpoint speed {}", path.endpoint_speed()));
    Ok(report)
}
