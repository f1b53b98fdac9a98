//! Fixed-step RK4 and composite Simpson quadrature on a uniform grid.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SteerError};

/// Uniform grid `t_j = t0 + j (T - t0) / (n - 1)` with an odd node count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, n: usize) -> Result<Self> {
        if !t0.is_finite() || !t_end.is_finite() {
            return Err(SteerError::InvalidGrid("endpoints must be finite"));
        }
        if t_end <= t0 {
            return Err(SteerError::InvalidGrid("final time must exceed initial time"));
        }
        if n < 3 {
            return Err(SteerError::InvalidGrid("at least 3 nodes are required"));
        }
        if n % 2 == 0 {
            return Err(SteerError::InvalidGrid("node count must be odd"));
        }
        Ok(Self { t0, t_end, n })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t0
    }

    pub fn step(&self) -> f64 {
        self.duration() / (self.n - 1) as f64
    }

    /// Node `j`; the last node is `T` exactly.
    pub fn node(&self, j: usize) -> f64 {
        if j + 1 == self.n {
            self.t_end
        } else {
            self.t0 + j as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.node(j))
    }
}

/// One value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<V> {
    grid: TimeGrid,
    values: Vec<V>,
}

impl<V> GridFunction<V> {
    pub fn new(grid: TimeGrid, values: Vec<V>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SteerError::DimensionMismatch { what: "grid function samples", expected: grid.len(), found: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TimeGrid, f: impl FnMut(f64) -> V) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn into_values(self) -> Vec<V> {
        self.values
    }

    pub fn last(&self) -> &V {
        &self.values[self.values.len() - 1]
    }
}

/// Values that can be integrated by weighted summation.
pub trait Integrand: Clone {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, weight: f64, other: &Self);
}

impl Integrand for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }

    fn add_scaled(&mut self, weight: f64, other: &Self) {
        *self += weight * other;
    }
}

impl Integrand for DVector<f64> {
    fn zero_like(&self) -> Self {
        DVector::zeros(self.len())
    }

    fn add_scaled(&mut self, weight: f64, other: &Self) {
        self.axpy(weight, other, 1.0);
    }
}

impl Integrand for DMatrix<f64> {
    fn zero_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }

    fn add_scaled(&mut self, weight: f64, other: &Self) {
        self.zip_apply(other, |a, b| *a += weight * b);
    }
}

/// Composite Simpson rule with spacing `h`.
pub fn simpson<V: Integrand>(h: f64, values: &[V]) -> Result<V> {
    let n = values.len();
    if n < 3 || n % 2 == 0 {
        return Err(SteerError::GridShape(n));
    }
    let mut acc = values[0].zero_like();
    for (j, v) in values.iter().enumerate() {
        let w = if j == 0 || j == n - 1 {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc.add_scaled(w, v);
    }
    let mut out = acc.zero_like();
    out.add_scaled(h / 3.0, &acc);
    Ok(out)
}

/// Composite Simpson integral of grid samples over `[t0, T]`.
pub fn composite_quadrature<V: Integrand>(samples: &GridFunction<V>) -> Result<V> {
    simpson(samples.grid.step(), &samples.values)
}

pub(crate) fn all_finite(x: &DVector<f64>) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Classical RK4 step from `(t, x)` with step `h` (which may be negative).
pub fn rk4_step<F>(rhs: &mut F, t: f64, h: f64, x: &DVector<f64>) -> DVector<f64>
where
    F: FnMut(f64, &DVector<f64>) -> DVector<f64>,
{
    let half = 0.5 * h;
    let k1 = rhs(t, x);
    let k2 = rhs(t + half, &(x + &k1 * half));
    let k3 = rhs(t + half, &(x + &k2 * half));
    let k4 = rhs(t + h, &(x + &k3 * h));
    let mut next = x.clone();
    next.axpy(h / 6.0, &k1, 1.0);
    next.axpy(h / 3.0, &k2, 1.0);
    next.axpy(h / 3.0, &k3, 1.0);
    next.axpy(h / 6.0, &k4, 1.0);
    next
}

/// RK4 samples of `x' = rhs(t, x)` at every grid node.
pub fn integrate_ode<F>(mut rhs: F, grid: &TimeGrid, x0: &DVector<f64>) -> Result<GridFunction<DVector<f64>>>
where
    F: FnMut(f64, &DVector<f64>) -> DVector<f64>,
{
    if !all_finite(x0) {
        return Err(SteerError::Divergence { node: 0, time: grid.t0() });
    }
    let h = grid.step();
    let mut values = Vec::with_capacity(grid.len());
    values.push(x0.clone());
    for j in 1..grid.len() {
        let t = grid.node(j - 1);
        let next = rk4_step(&mut rhs, t, h, &values[j - 1]);
        if !all_finite(&next) {
            return Err(SteerError::Divergence { node: j, time: grid.node(j) });
        }
        values.push(next);
    }
    Ok(GridFunction { grid: *grid, values })
}

/// Integrates from `s` to `t` (either direction) in `steps` equal RK4 steps
/// and returns only the final state.
pub fn integrate_span<F>(mut rhs: F, s: f64, t: f64, x0: &DVector<f64>, steps: usize) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>) -> DVector<f64>,
{
    if !all_finite(x0) {
        return Err(SteerError::Divergence { node: 0, time: s });
    }
    if steps == 0 || s == t {
        return Ok(x0.clone());
    }
    let h = (t - s) / steps as f64;
    let mut x = x0.clone();
    for j in 0..steps {
        let tj = s + j as f64 * h;
        x = rk4_step(&mut rhs, tj, h, &x);
        if !all_finite(&x) {
            return Err(SteerError::Divergence { node: j + 1, time: tj + h });
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(TimeGrid::new(0.0, 1.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 5).is_err());
        let g = TimeGrid::new(0.0, 2.0, 5).unwrap();
        assert_eq!(g.step(), 0.5);
        assert_eq!(g.node(4), 2.0);
    }

    #[test]
    fn zero_field_is_constant() {
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let x0 = dvector![1.0, 2.0];
        let sol = integrate_ode(|_, x| DVector::zeros(x.len()), &grid, &x0).unwrap();
        assert!(sol.values().iter().all(|v| *v == x0));
    }

    #[test]
    fn exponential_growth() {
        let grid = TimeGrid::new(0.0, 1.0, 201).unwrap();
        let sol = integrate_ode(|_, x| x.clone(), &grid, &dvector![1.0]).unwrap();
        assert_abs_diff_eq!(sol.last()[0], core::f64::consts::E, epsilon = 1e-8);
    }

    #[test]
    fn nilpotent_linear_field_is_exact() {
        // e^A (0,1) = (1,1) for A = [[0,1],[0,0]]
        let grid = TimeGrid::new(0.0, 1.0, 5).unwrap();
        let sol = integrate_ode(|_, x| dvector![x[1], 0.0], &grid, &dvector![0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(sol.last()[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sol.last()[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn divergence_names_first_bad_node() {
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let err = integrate_ode(|t, x| if t >= 0.45 { dvector![f64::NAN] } else { x.clone() }, &grid, &dvector![1.0]).unwrap_err();
        match err {
            SteerError::Divergence { node, .. } => assert_eq!(node, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fourth_order_convergence_window() {
        // x' = cos(t) x, x(0) = 1 -> x(t) = exp(sin t)
        let exact = libm::exp(libm::sin(2.0));
        let err = |n| {
            let grid = TimeGrid::new(0.0, 2.0, n).unwrap();
            let sol = integrate_ode(|t, x| x * libm::cos(t), &grid, &dvector![1.0]).unwrap();
            (sol.last()[0] - exact).abs()
        };
        let ratio = err(41) / err(81);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn simpson_examples() {
        let grid = TimeGrid::new(0.0, 1.0, 101).unwrap();
        let zero = GridFunction::from_fn(grid, |_| 0.0);
        assert_eq!(composite_quadrature(&zero).unwrap(), 0.0);
        let lin = GridFunction::from_fn(grid, |t| t);
        assert_abs_diff_eq!(composite_quadrature(&lin).unwrap(), 0.5, epsilon = 1e-15);
        let cubic = GridFunction::from_fn(grid, |t| t * t * t - t);
        assert_abs_diff_eq!(composite_quadrature(&cubic).unwrap(), -0.25, epsilon = 1e-15);

        let grid = TimeGrid::new(0.0, core::f64::consts::PI, 201).unwrap();
        let s = GridFunction::from_fn(grid, libm::sin);
        assert_abs_diff_eq!(composite_quadrature(&s).unwrap(), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn simpson_rejects_even_sample_count() {
        assert!(matches!(simpson(0.1, &[1.0, 2.0, 3.0, 4.0]), Err(SteerError::GridShape(4))));
    }

    #[test]
    fn integrate_span_backward_inverts_forward() {
        let f = |t: f64, x: &DVector<f64>| dvector![x[1], -libm::sin(x[0]) + 0.1 * libm::cos(t)];
        let x0 = dvector![0.3, -0.2];
        let fwd = integrate_span(f, 0.0, 1.0, &x0, 200).unwrap();
        let back = integrate_span(f, 1.0, 0.0, &fwd, 200).unwrap();
        assert_abs_diff_eq!((back - x0).norm(), 0.0, epsilon = 1e-10);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn quadrature_is_linear(a in -5.0..5.0f64, b in -5.0..5.0f64,
                                    c in proptest::collection::vec(-3.0..3.0f64, 4)) {
                let grid = TimeGrid::new(-1.0, 2.0, 31).unwrap();
                let f = GridFunction::from_fn(grid, |t| libm::sin(c[0] * t) + c[1]);
                let g = GridFunction::from_fn(grid, |t| libm::exp(0.3 * c[2] * t) * c[3]);
                let combo = GridFunction::new(
                    grid,
                    f.values().iter().zip(g.values()).map(|(x, y)| a * x + b * y).collect(),
                ).unwrap();
                let lhs = composite_quadrature(&combo).unwrap();
                let rhs = a * composite_quadrature(&f).unwrap() + b * composite_quadrature(&g).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }
    }
}
