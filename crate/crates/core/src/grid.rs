//! Radial grids, sampled functions, finite differences and quadrature.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, NodeList, Result};
use crate::scalar::Real;

/// Smallest admissible node count.
pub const MIN_NODES: usize = 16;

const STENCIL: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Uniform,
    Geometric,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(Scheme::Uniform),
            "geometric" => Ok(Scheme::Geometric),
            other => Err(Error::InvalidDomain(format!(
                "unknown grid scheme '{other}' (expected uniform or geometric)"
            ))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Uniform => "uniform",
            Scheme::Geometric => "geometric",
        })
    }
}

/// Strictly increasing nodes on `[r_min, r_max]`, `r_min > 0`.
#[derive(Debug)]
pub struct RadialGrid<T> {
    nodes: Vec<T>,
    scheme: Scheme,
    weights: OnceLock<Vec<[T; STENCIL]>>,
}

/// Grids are shared between every function sampled on them.
pub type GridRef<T> = Arc<RadialGrid<T>>;

impl<T: Real> RadialGrid<T> {
    pub fn new(r_min: T, r_max: T, n: usize, scheme: Scheme) -> Result<GridRef<T>> {
        if !(r_min > T::zero() && r_max > r_min && r_max.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "grid needs 0 < r_min < r_max, got r_min = {r_min:e}, r_max = {r_max:e}"
            )));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidDomain(format!(
                "grid needs at least {MIN_NODES} nodes, got {n}"
            )));
        }
        let last = T::from_usize(n - 1).unwrap();
        let mut nodes: Vec<T> = match scheme {
            Scheme::Uniform => {
                let step = (r_max - r_min) / last;
                (0..n).map(|i| r_min + step * T::from_usize(i).unwrap()).collect()
            }
            Scheme::Geometric => {
                let log_span = (r_max / r_min).ln();
                (0..n)
                    .map(|i| r_min * (log_span * T::from_usize(i).unwrap() / last).exp())
                    .collect()
            }
        };
        nodes[0] = r_min;
        nodes[n - 1] = r_max;
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidDomain(
                "grid nodes are not strictly increasing at this precision".into(),
            ));
        }
        Ok(Arc::new(Self {
            nodes,
            scheme,
            weights: OnceLock::new(),
        }))
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> T {
        self.nodes[0]
    }

    pub fn r_max(&self) -> T {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Same node set (value comparison).
    pub fn same_as(&self, other: &Self) -> bool {
        std::ptr::eq(self, other) || (self.scheme == other.scheme && self.nodes == other.nodes)
    }

    /// First index of the five-point stencil used at node `i`.
    #[inline]
    pub(crate) fn stencil_start(&self, i: usize) -> usize {
        i.saturating_sub(2).min(self.len() - STENCIL)
    }

    /// Lagrange first-derivative weights at every node.
    fn diff_weights(&self) -> &[[T; STENCIL]] {
        self.weights.get_or_init(|| {
            (0..self.len())
                .map(|i| {
                    let s = self.stencil_start(i);
                    lagrange_derivative_weights(&self.nodes[s..s + STENCIL], self.nodes[i])
                })
                .collect()
        })
    }

    /// Index `i` with `nodes[i] <= r <= nodes[i+1]`, clamped to the grid.
    pub fn locate(&self, r: T) -> usize {
        let n = self.len();
        match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&r).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Cubic (four-point Lagrange) interpolation of samples on this grid.
    pub fn interpolate(&self, values: &[T], r: T) -> T {
        let i = self.locate(r);
        self.interpolate_in(values, i, r)
    }

    /// As [`interpolate`](Self::interpolate) with the bracketing interval known.
    pub(crate) fn interpolate_in(&self, values: &[T], i: usize, r: T) -> T {
        let s = i.saturating_sub(1).min(self.len() - 4);
        let x = &self.nodes[s..s + 4];
        let y = &values[s..s + 4];
        let mut acc = T::zero();
        for j in 0..4 {
            let mut basis = T::one();
            for m in 0..4 {
                if m != j {
                    basis = basis * (r - x[m]) / (x[j] - x[m]);
                }
            }
            acc = acc + basis * y[j];
        }
        acc
    }
}

/// Weights `w` with `sum_j w_j y(x_j) ~ y'(x0)` from the interpolating polynomial.
fn lagrange_derivative_weights<T: Real>(x: &[T], x0: T) -> [T; STENCIL] {
    let mut w = [T::zero(); STENCIL];
    for j in 0..STENCIL {
        let mut sum = T::zero();
        for k in 0..STENCIL {
            if k == j {
                continue;
            }
            let mut term = T::one() / (x[j] - x[k]);
            for m in 0..STENCIL {
                if m != j && m != k {
                    term = term * (x0 - x[m]) / (x[j] - x[m]);
                }
            }
            sum = sum + term;
        }
        w[j] = sum;
    }
    w
}

/// Real samples of a function of `r`, one per grid node.
#[derive(Debug, Clone)]
pub struct RadialFunction<T> {
    grid: GridRef<T>,
    values: Vec<T>,
}

impl<T: Real> RadialFunction<T> {
    pub fn new(grid: GridRef<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidDomain(format!(
                "{} samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &GridRef<T>, f: impl Fn(T) -> T) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn constant(grid: &GridRef<T>, c: T) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: &GridRef<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn grid(&self) -> &GridRef<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, i: usize) -> T {
        self.values[i]
    }

    pub fn first(&self) -> T {
        self.values[0]
    }

    pub fn last(&self) -> T {
        self.values[self.values.len() - 1]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise `f(r, value)`.
    pub fn map_with_r(&self, f: impl Fn(T, T) -> T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self
                .grid
                .nodes()
                .iter()
                .zip(&self.values)
                .map(|(&r, &v)| f(r, v))
                .collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        ensure_same_grid(self, other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn non_finite_nodes(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_finite())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn ensure_finite(&self) -> Result<()> {
        let bad = self.non_finite_nodes();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::NonFinite(NodeList(bad)))
        }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Maximum of `|value|` over nodes `lo..hi`.
    pub fn max_abs_in(&self, lo: usize, hi: usize) -> T {
        self.values[lo..hi].iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }
}

pub fn same_grid<T: Real>(a: &RadialFunction<T>, b: &RadialFunction<T>) -> bool {
    Arc::ptr_eq(&a.grid, &b.grid) || a.grid.same_as(&b.grid)
}

pub(crate) fn ensure_same_grid<T: Real>(a: &RadialFunction<T>, b: &RadialFunction<T>) -> Result<()> {
    if same_grid(a, b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

pub fn make_grid<T: Real>(r_min: T, r_max: T, n: usize, scheme: Scheme) -> Result<GridRef<T>> {
    RadialGrid::new(r_min, r_max, n, scheme)
}

/// Fourth-order finite-difference derivative.
///
/// Centered five-point stencils in the interior, one-sided five-point
/// stencils on the two outermost nodes at each end. On nonuniform grids the
/// weights come from differentiating the local interpolating quartic.
pub fn derivative<T: Real>(f: &RadialFunction<T>) -> RadialFunction<T> {
    let grid = f.grid();
    let weights = grid.diff_weights();
    let y = f.values();
    let values = (0..grid.len())
        .map(|i| {
            let s = grid.stencil_start(i);
            weights[i]
                .iter()
                .zip(&y[s..s + STENCIL])
                .fold(T::zero(), |acc, (&w, &v)| acc + w * v)
        })
        .collect();
    RadialFunction {
        grid: grid.clone(),
        values,
    }
}

/// Trapezoid running integral from `r_min`, starting at `seed`.
pub fn cumulative_integral<T: Real>(f: &RadialFunction<T>, seed: T) -> Result<RadialFunction<T>> {
    f.ensure_finite()?;
    let r = f.grid().nodes();
    let y = f.values();
    let half = T::lit(0.5);
    let mut acc = seed;
    let mut values = Vec::with_capacity(y.len());
    values.push(acc);
    for i in 1..y.len() {
        acc = acc + half * (r[i] - r[i - 1]) * (y[i] + y[i - 1]);
        values.push(acc);
    }
    Ok(RadialFunction {
        grid: f.grid().clone(),
        values,
    })
}

/// Composite Simpson rule with weights adapted to unequal spacing.
///
/// Pairs of intervals are integrated by the interpolating parabola; for an
/// odd interval count the last interval uses the three-point correction of
/// the final parabola.
pub fn definite_integral<T: Real>(f: &RadialFunction<T>) -> Result<T> {
    f.ensure_finite()?;
    let x = f.grid().nodes();
    let y = f.values();
    let intervals = x.len() - 1;
    let six = T::lit(6.0);
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let mut total = T::zero();
    let mut i = 0;
    while i + 2 <= intervals {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let hs = h0 + h1;
        total =
            total + hs / six * ((two - h1 / h0) * y[i] + hs * hs / (h0 * h1) * y[i + 1] + (two - h0 / h1) * y[i + 2]);
        i += 2;
    }
    if intervals % 2 == 1 {
        let k = intervals;
        let h0 = x[k - 1] - x[k - 2];
        let h1 = x[k] - x[k - 1];
        let alpha = (two * h1 * h1 + three * h0 * h1) / (six * (h0 + h1));
        let beta = (h1 * h1 + three * h0 * h1) / (six * h0);
        let eta = h1 * h1 * h1 / (six * h0 * (h0 + h1));
        total = total + alpha * y[k] + beta * y[k - 1] - eta * y[k - 2];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    type RadialFunction = crate::grid::RadialFunction<f64>;

    fn max_err(f: &RadialFunction, exact: impl Fn(f64) -> f64, lo: usize, hi: usize) -> f64 {
        let r = f.grid().nodes();
        (lo..hi).map(|i| (f.at(i) - exact(r[i])).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn geometric_endpoints_and_ratio() {
        let g = make_grid::<f64>(1e-6, 40.0, 2000, Scheme::Geometric).unwrap();
        assert_eq!(g.r_min(), 1e-6);
        assert_eq!(g.r_max(), 40.0);
        let r = g.nodes();
        let q0 = r[1] / r[0];
        for w in r.windows(2) {
            assert!((w[1] / w[0] - q0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_nodes() {
        let g = make_grid(1.0, 2.0, 17, Scheme::Uniform).unwrap();
        for (i, &r) in g.nodes().iter().enumerate() {
            assert!((r - (1.0 + i as f64 / 16.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(matches!(
            make_grid(2.0, 1.0, 100, Scheme::Uniform),
            Err(Error::InvalidDomain(_))
        ));
        assert!(make_grid(0.0, 1.0, 100, Scheme::Geometric).is_err());
        assert!(make_grid(1.0, 2.0, 3, Scheme::Uniform).is_err());
    }

    #[test]
    fn derivative_is_exact_on_quadratics() {
        let g = make_grid(0.5, 3.0, 64, Scheme::Uniform).unwrap();
        let f = RadialFunction::from_fn(&g, |r| r * r);
        let d = derivative(&f);
        assert!(max_err(&d, |r| 2.0 * r, 0, g.len()) < 1e-10);
        let c = derivative(&RadialFunction::constant(&g, 3.5));
        assert!(c.max_abs() < 1e-12);
    }

    #[test]
    fn derivative_exact_on_quartic_geometric() {
        let g = make_grid(1e-3, 5.0, 200, Scheme::Geometric).unwrap();
        let f = RadialFunction::from_fn(&g, |r| r.powi(4) - 2.0 * r * r * r + r);
        let d = derivative(&f);
        for (i, &r) in g.nodes().iter().enumerate() {
            let exact = 4.0 * r.powi(3) - 6.0 * r * r + 1.0;
            assert!((d.at(i) - exact).abs() < 1e-8 * (1.0 + exact.abs()), "node {i}");
        }
    }

    #[test]
    fn derivative_converges_fourth_order() {
        let err = |n| {
            let g = make_grid(0.1, 10.0, n, Scheme::Uniform).unwrap();
            let d = derivative(&RadialFunction::from_fn(&g, |r| (-r).exp()));
            max_err(&d, |r| -(-r).exp(), 0, g.len())
        };
        // doubling the number of intervals
        let ratio = err(2000) / err(3999);
        assert!(ratio >= 8.0, "ratio {ratio}");
    }

    #[test]
    fn cumulative_integral_examples() {
        let g = make_grid(0.5, 4.0, 101, Scheme::Uniform).unwrap();
        let c = cumulative_integral(&RadialFunction::constant(&g, 1.0), 0.0).unwrap();
        assert!(max_err(&c, |r| r - 0.5, 0, g.len()) < 1e-13);
        assert_eq!(c.first(), 0.0);
        let seeded = cumulative_integral(&RadialFunction::constant(&g, 1.0), 2.5).unwrap();
        assert_eq!(seeded.first(), 2.5);
        // trapezoid is exact on linear integrands
        let sq = cumulative_integral(&RadialFunction::from_fn(&g, |r| 2.0 * r), 0.0).unwrap();
        assert!(max_err(&sq, |r| r * r - 0.25, 0, g.len()) < 1e-12);
    }

    #[test]
    fn cumulative_integral_of_inverse_r_is_second_order() {
        let err = |n| {
            let g = make_grid(1e-4, 10.0, n, Scheme::Geometric).unwrap();
            let c = cumulative_integral(&RadialFunction::from_fn(&g, |r| 1.0 / r), 0.0).unwrap();
            max_err(&c, |r| (r / 1e-4).ln(), 0, g.len())
        };
        let ratio = err(500) / err(999);
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn cumulative_integral_rejects_nan() {
        let g = make_grid(1.0, 2.0, 20, Scheme::Uniform).unwrap();
        let mut v = vec![1.0; 20];
        v[7] = f64::NAN;
        let f = RadialFunction::new(g, v).unwrap();
        assert_eq!(
            cumulative_integral(&f, 0.0).unwrap_err(),
            Error::NonFinite(NodeList(vec![7]))
        );
        assert!(definite_integral(&f).is_err());
    }

    #[test]
    fn simpson_examples() {
        let g = make_grid(1.0, 2.0, 16, Scheme::Uniform).unwrap();
        let one = definite_integral(&RadialFunction::constant(&g, 1.0)).unwrap();
        assert!((one - 1.0).abs() < 1e-14);
        let g = make_grid(1e-6, 40.0, 4000, Scheme::Geometric).unwrap();
        let v = definite_integral(&RadialFunction::from_fn(&g, |r| (-2.0 * r).exp())).unwrap();
        let exact = 0.5 * ((-2e-6f64).exp() - (-80.0f64).exp());
        assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
    }

    #[test]
    fn simpson_even_and_odd_interval_counts_are_exact_on_quadratics() {
        for n in [40, 41] {
            let g = make_grid(0.01, 3.0, n, Scheme::Geometric).unwrap();
            let v = definite_integral(&RadialFunction::from_fn(&g, |r| 3.0 * r * r - r)).unwrap();
            let anti = |r: f64| r.powi(3) - r * r / 2.0;
            assert!((v - (anti(3.0) - anti(0.01))).abs() < 1e-11, "n = {n}");
        }
    }

    #[test]
    fn refinement_factors_match_theory() {
        let trap = |n| {
            let g = make_grid(0.0 + 0.2, 3.0, n, Scheme::Uniform).unwrap();
            let c = cumulative_integral(&RadialFunction::from_fn(&g, f64::sin), 0.0).unwrap();
            (c.last() - (0.2f64.cos() - 3.0f64.cos())).abs()
        };
        let t = trap(201) / trap(401);
        assert!((t - 4.0).abs() <= 0.8, "trapezoid factor {t}");
        let simp = |n| {
            let g = make_grid(0.2, 3.0, n, Scheme::Uniform).unwrap();
            let v = definite_integral(&RadialFunction::from_fn(&g, f64::sin)).unwrap();
            (v - (0.2f64.cos() - 3.0f64.cos())).abs()
        };
        let s = simp(41) / simp(81);
        assert!((s - 16.0).abs() <= 3.2, "simpson factor {s}");
    }

    #[test]
    fn derivative_of_cumulative_integral_recovers_integrand() {
        let err = |n| {
            let g = make_grid(1e-2, 8.0, n, Scheme::Geometric).unwrap();
            let f = RadialFunction::from_fn(&g, |r| (r * 0.7).cos() * (-0.3 * r).exp());
            let back = derivative(&cumulative_integral(&f, 0.0).unwrap());
            max_err(&back, |r| (r * 0.7).cos() * (-0.3 * r).exp(), 2, g.len() - 2)
        };
        let ratio = err(400) / err(799);
        assert!(ratio >= 4.0 * 0.8, "ratio {ratio}");
    }

    #[test]
    fn interpolation_is_exact_on_cubics() {
        let g = make_grid(0.1, 2.0, 30, Scheme::Geometric).unwrap();
        let f = RadialFunction::from_fn(&g, |r| r * r * r - r + 1.0);
        for &r in &[0.1, 0.1234, 0.77, 1.999, 2.0] {
            let v = g.interpolate(f.values(), r);
            assert!((v - (r * r * r - r + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_precision_grid() {
        let g = make_grid(0.5f32, 2.0, 64, Scheme::Uniform).unwrap();
        let d = derivative(&crate::grid::RadialFunction::from_fn(&g, |r| r * r));
        for (i, &r) in g.nodes().iter().enumerate() {
            assert!((d.at(i) - 2.0 * r).abs() < 1e-3);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn operations_are_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 0.1f64..2.0) {
                let g = make_grid(0.1, 5.0, 64, Scheme::Geometric).unwrap();
                let f = RadialFunction::from_fn(&g, |r| (k * r).sin());
                let h = RadialFunction::from_fn(&g, |r| r.ln() + k);
                let comb = f.scale(a).add(&h.scale(b)).unwrap();
                let lhs = derivative(&comb);
                let rhs = derivative(&f).scale(a).add(&derivative(&h).scale(b)).unwrap();
                let scale = 1.0 + lhs.max_abs();
                prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-10 * scale);
                let li = cumulative_integral(&comb, 0.0).unwrap();
                let ri = cumulative_integral(&f, 0.0).unwrap().scale(a)
                    .add(&cumulative_integral(&h, 0.0).unwrap().scale(b)).unwrap();
                prop_assert!(li.sub(&ri).unwrap().max_abs() < 1e-12 * (1.0 + li.max_abs()));
                let ld = definite_integral(&comb).unwrap();
                let rd = a * definite_integral(&f).unwrap() + b * definite_integral(&h).unwrap();
                prop_assert!((ld - rd).abs() < 1e-12 * (1.0 + ld.abs()));
            }
        }
    }
}
