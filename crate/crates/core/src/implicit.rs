//! Construction through logarithmic derivatives.
//!
//! With `F = f'/f`, `G = g'/g`, `Y = (F + G)/2`, `Z = (F - G)/2` and
//! `Xi = ln(f/g)`, the radial equation is equivalent to the algebraic
//! constraint
//!
//! ```text
//! (E + V)^2 + Y^2 = (M + W)^2 + (U - Z)^2
//! ```
//!
//! together with `Xi' = 2 Z`. Two parametrizations solve the constraint
//! identically. The trigonometric one takes free functions `A`, `B`:
//!
//! ```text
//! C = -(A + B)/2,  tan C = e^Xi,  Z = C' / sin 2C,  R = (U - Z) / sin B
//! E + V = R cos A,  M + W = R cos B,  Y = R sin A
//! ```
//!
//! The hyperbolic one takes `S`, `T` and integrates `Xi`:
//!
//! ```text
//! Xi' = 2U + 2S sinh(T + Xi)
//! Z = U + S sinh(T + Xi),  Y = -S cosh(T + Xi)
//! E + V = S sinh T,  M + W = S cosh T
//! ```

use serde::Serialize;

use crate::error::{Error, NodeList, Result};
use crate::expr::{sample_expression, Expression, RadialProfile};
use crate::grid::{cumulative_integral, derivative, ensure_same_grid, GridRef, RadialFunction};
use crate::models::{DiracSystem, SpinorSolution};
use crate::scalar::Real;
use crate::solver::residual_norm;

/// Largest `|Xi|` before `sinh`/`cosh` overflow.
pub const XI_LIMIT: f64 = 700.0;
/// Smallest admissible `|sin 2C|` and `|sin B|`.
pub const BRANCH_THRESHOLD: f64 = 1e-8;
/// Default fraction of trailing nodes used by the tail split.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.1;

const TINY: f64 = 1e-300;

/// Logarithmic derivatives of a spinor.
#[derive(Debug, Clone)]
pub struct LogDerivatives<T> {
    pub f: RadialFunction<T>,
    pub g: RadialFunction<T>,
    pub y: RadialFunction<T>,
    pub z: RadialFunction<T>,
    pub xi: RadialFunction<T>,
    pub xi0: T,
}

impl<T: Real> LogDerivatives<T> {
    /// Assembles the record from `Y`, `Z` and `Xi`.
    pub fn from_yz(y: RadialFunction<T>, z: RadialFunction<T>, xi: RadialFunction<T>) -> Result<Self> {
        ensure_same_grid(&y, &z)?;
        ensure_same_grid(&y, &xi)?;
        Ok(Self {
            f: y.add(&z)?,
            g: y.sub(&z)?,
            xi0: xi.first(),
            y,
            z,
            xi,
        })
    }

    pub fn grid(&self) -> &GridRef<T> {
        self.y.grid()
    }
}

/// `F`, `G`, `Y`, `Z` by finite differences and `Xi = xi0 + 2 int Z` with
/// `xi0 = ln(f/g)` at `r_min`.
pub fn log_derivatives<T: Real>(sol: &SpinorSolution<T>) -> Result<LogDerivatives<T>> {
    let (f, g) = (&sol.f, &sol.g);
    let tiny = T::lit(TINY);
    if let Some(i) = (0..f.len()).find(|&i| !(f.at(i).abs() >= tiny && g.at(i).abs() >= tiny)) {
        return Err(Error::DivisionByZero {
            node: i,
            r: f.grid().nodes()[i].as_f64(),
        });
    }
    let ratio = f.first() / g.first();
    if !(ratio > T::zero()) {
        return Err(Error::NegativeRatio { ratio: ratio.as_f64() });
    }
    let ff = derivative(f).zip_with(f, |d, v| d / v)?;
    let gg = derivative(g).zip_with(g, |d, v| d / v)?;
    let half = T::lit(0.5);
    let y = ff.zip_with(&gg, |a, b| half * (a + b))?;
    let z = ff.zip_with(&gg, |a, b| half * (a - b))?;
    let xi0 = ratio.ln();
    let xi = cumulative_integral(&z.scale(T::lit(2.0)), xi0)?;
    Ok(LogDerivatives {
        f: ff,
        g: gg,
        y,
        z,
        xi,
        xi0,
    })
}

/// Pointwise `(E+V)^2 + Y^2 - (M+W)^2 - (U-Z)^2`.
pub fn constraint_residual<T: Real>(
    system: &DiracSystem<T>,
    e: T,
    logs: &LogDerivatives<T>,
) -> Result<RadialFunction<T>> {
    ensure_same_grid(&system.u, &logs.y)?;
    let values = (0..logs.y.len())
        .map(|i| {
            let (ev, mw, dz) = constraint_terms(system, e, logs, i);
            let y = logs.y.at(i);
            ev * ev + y * y - mw * mw - dz * dz
        })
        .collect();
    RadialFunction::new(logs.grid().clone(), values)
}

/// Largest constraint residual relative to the pointwise size of its terms,
/// `|res| / ((E+V)^2 + Y^2 + (M+W)^2 + (U-Z)^2)`.
pub fn relative_constraint_max<T: Real>(system: &DiracSystem<T>, e: T, logs: &LogDerivatives<T>) -> Result<T> {
    let res = constraint_residual(system, e, logs)?;
    let tiny = T::lit(TINY);
    Ok((0..res.len()).fold(T::zero(), |acc, i| {
        let (ev, mw, dz) = constraint_terms(system, e, logs, i);
        let y = logs.y.at(i);
        let scale = (ev * ev + y * y + mw * mw + dz * dz).max(tiny);
        acc.max(res.at(i).abs() / scale)
    }))
}

fn constraint_terms<T: Real>(system: &DiracSystem<T>, e: T, logs: &LogDerivatives<T>, i: usize) -> (T, T, T) {
    (
        e + system.v.at(i),
        system.m + system.w.at(i),
        system.u.at(i) - logs.z.at(i),
    )
}

/// `V` and `W` from logarithmic derivatives at given `E` and `M`:
///
/// ```text
/// E + V = cosh Xi (Z - U) + sinh Xi Y
/// M + W = -sinh Xi (Z - U) - cosh Xi Y
/// ```
pub fn reconstruct_potentials<T: Real>(
    logs: &LogDerivatives<T>,
    u: &RadialFunction<T>,
    e: T,
    m: T,
) -> Result<(RadialFunction<T>, RadialFunction<T>)> {
    ensure_same_grid(&logs.y, u)?;
    let limit = T::lit(XI_LIMIT);
    if let Some(i) = (0..u.len()).find(|&i| !(logs.xi.at(i).abs() <= limit)) {
        return Err(Error::Overflow(format!(
            "|xi| = {:e} exceeds {XI_LIMIT} at node {i}",
            logs.xi.at(i).as_f64()
        )));
    }
    let n = u.len();
    let mut v = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let (c, s) = (logs.xi.at(i).cosh(), logs.xi.at(i).sinh());
        let d = logs.z.at(i) - u.at(i);
        let y = logs.y.at(i);
        v.push(c * d + s * y - e);
        w.push(-s * d - c * y - m);
    }
    let grid = u.grid().clone();
    Ok((RadialFunction::new(grid.clone(), v)?, RadialFunction::new(grid, w)?))
}

/// How the sums `E + V` and `M + W` are separated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum EnergySplit {
    /// Constants are the means over the trailing `fraction` of nodes, which
    /// must be flat there.
    Tail { fraction: f64 },
    /// Constants supplied by the caller.
    Given { e: f64, m: f64 },
}

impl Default for EnergySplit {
    fn default() -> Self {
        EnergySplit::Tail {
            fraction: DEFAULT_TAIL_FRACTION,
        }
    }
}

/// Result of separating `E + V` and `M + W`.
#[derive(Debug, Clone)]
pub struct Split<T> {
    pub e: T,
    pub v: RadialFunction<T>,
    pub m: T,
    pub w: RadialFunction<T>,
    /// Sample standard deviations of `E + V` and `M + W` over the tail.
    pub tail_deviation: (T, T),
}

/// Tail-mean split with a flatness gate of `1e-6 (1 + |E|)` on the sample
/// standard deviation.
pub fn split_energy<T: Real>(
    e_plus_v: &RadialFunction<T>,
    m_plus_w: &RadialFunction<T>,
    tail_fraction: f64,
) -> Result<Split<T>> {
    ensure_same_grid(e_plus_v, m_plus_w)?;
    if !(tail_fraction > 0.0 && tail_fraction < 0.5) {
        return Err(Error::InvalidDomain(format!(
            "tail fraction must lie in (0, 0.5), got {tail_fraction}"
        )));
    }
    let n = e_plus_v.len();
    let count = ((tail_fraction * n as f64).ceil() as usize).clamp(2, n);
    let (e, dev_e) = tail_stats(&e_plus_v.values()[n - count..]);
    let (m, dev_m) = tail_stats(&m_plus_w.values()[n - count..]);
    for (dev, c) in [(dev_e, e), (dev_m, m)] {
        let limit = T::lit(1e-6) * (T::one() + c.abs());
        if !(dev < limit) {
            return Err(Error::TailNotFlat {
                deviation: dev.as_f64(),
                limit: limit.as_f64(),
            });
        }
    }
    Ok(Split {
        e,
        v: e_plus_v.map(|x| x - e),
        m,
        w: m_plus_w.map(|x| x - m),
        tail_deviation: (dev_e, dev_m),
    })
}

fn tail_stats<T: Real>(xs: &[T]) -> (T, T) {
    let k = T::from_usize(xs.len()).unwrap();
    let mean = xs.iter().fold(T::zero(), |a, &x| a + x) / k;
    let var = xs.iter().fold(T::zero(), |a, &x| a + (x - mean) * (x - mean)) / (k - T::one());
    (mean, var.sqrt())
}

fn apply_split<T: Real>(
    e_plus_v: &RadialFunction<T>,
    m_plus_w: &RadialFunction<T>,
    split: EnergySplit,
) -> Result<Split<T>> {
    match split {
        EnergySplit::Tail { fraction } => split_energy(e_plus_v, m_plus_w, fraction),
        EnergySplit::Given { e, m } => {
            let (e, m) = (T::lit(e), T::lit(m));
            let n = e_plus_v.len();
            let count = ((DEFAULT_TAIL_FRACTION * n as f64).ceil() as usize).clamp(2, n);
            let dev_e = tail_stats(&e_plus_v.values()[n - count..]).1;
            let dev_m = tail_stats(&m_plus_w.values()[n - count..]).1;
            Ok(Split {
                e,
                v: e_plus_v.map(|x| x - e),
                m,
                w: m_plus_w.map(|x| x - m),
                tail_deviation: (dev_e, dev_m),
            })
        }
    }
}

/// Diagnostics attached to a construction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Diagnostics {
    /// Radial-equation residual, see [`residual_norm`].
    pub residual_norm: f64,
    /// Largest absolute constraint residual.
    pub constraint_max: f64,
    /// Largest constraint residual relative to the size of its terms.
    pub constraint_relative_max: f64,
    pub tail_deviation_e: f64,
    pub tail_deviation_m: f64,
    pub normalizable: bool,
}

/// Output of a construction pipeline.
#[derive(Debug, Clone)]
pub struct QEResult<T> {
    pub system: DiracSystem<T>,
    pub solution: SpinorSolution<T>,
    pub logs: LogDerivatives<T>,
    pub diagnostics: Diagnostics,
}

/// Spinor with `ln f = int Y + Xi/2`, `ln g = int Y - Xi/2`, normalized to
/// `int (f^2 + g^2) = 1`.
pub fn spinor_from_logs<T: Real>(logs: &LogDerivatives<T>, e: T) -> Result<SpinorSolution<T>> {
    let base = cumulative_integral(&logs.y, T::zero())?;
    let half = T::lit(0.5);
    let ln_f = base.zip_with(&logs.xi, |b, x| b + half * x)?;
    let ln_g = base.zip_with(&logs.xi, |b, x| b - half * x)?;
    let top = ln_f
        .values()
        .iter()
        .chain(ln_g.values())
        .fold(T::neg_infinity(), |a, &x| a.max(x));
    if !top.is_finite() {
        return Err(Error::Overflow("log amplitude is not finite".into()));
    }
    let f = ln_f.map(|x| (x - top).exp());
    let g = ln_g.map(|x| (x - top).exp());
    let mut sol = SpinorSolution::new(f, g, e)?;
    let norm = sol.norm_squared()?.sqrt();
    if norm.is_finite() && norm > T::zero() {
        sol.f = sol.f.scale(norm.recip());
        sol.g = sol.g.scale(norm.recip());
    }
    Ok(sol)
}

fn finish<T: Real>(
    u: RadialFunction<T>,
    e_plus_v: RadialFunction<T>,
    m_plus_w: RadialFunction<T>,
    logs: LogDerivatives<T>,
    split: EnergySplit,
) -> Result<QEResult<T>> {
    let parts = apply_split(&e_plus_v, &m_plus_w, split)?;
    let system = DiracSystem::new(u, parts.v, parts.w, parts.m)?;
    let solution = spinor_from_logs(&logs, parts.e)?;
    let constraint = constraint_residual(&system, parts.e, &logs)?;
    let diagnostics = Diagnostics {
        residual_norm: residual_norm(&system, &solution)?.as_f64(),
        constraint_max: constraint.max_abs().as_f64(),
        constraint_relative_max: relative_constraint_max(&system, parts.e, &logs)?.as_f64(),
        tail_deviation_e: parts.tail_deviation.0.as_f64(),
        tail_deviation_m: parts.tail_deviation.1.as_f64(),
        normalizable: solution.is_normalizable(),
    };
    Ok(QEResult {
        system,
        solution,
        logs,
        diagnostics,
    })
}

/// Free functions of the trigonometric parametrization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigParametrization {
    pub a: Expression,
    pub b: Expression,
}

/// Free functions of the hyperbolic parametrization and `Xi(r_min)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicParametrization {
    pub s: Expression,
    pub t: Expression,
    pub xi0: f64,
}

/// Trigonometric pipeline. `Xi(r_min) = ln tan C(r_min)` follows from `A`
/// and `B`; `C` is taken on the branch `(0, pi/2)` modulo `pi`.
pub fn trig_pipeline<T: Real>(
    p: &TrigParametrization,
    u: &dyn RadialProfile<T>,
    grid: &GridRef<T>,
    split: EnergySplit,
) -> Result<QEResult<T>> {
    let a = sample_expression(&p.a, grid)?;
    let b = sample_expression(&p.b, grid)?;
    trig_pipeline_sampled(&a, &b, &u.sample(grid), split)
}

/// [`trig_pipeline`] on pre-sampled `A`, `B` and `U`.
pub fn trig_pipeline_sampled<T: Real>(
    a: &RadialFunction<T>,
    b: &RadialFunction<T>,
    u: &RadialFunction<T>,
    split: EnergySplit,
) -> Result<QEResult<T>> {
    ensure_same_grid(a, b)?;
    ensure_same_grid(a, u)?;
    for f in [a, b, u] {
        f.ensure_finite()?;
    }
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let threshold = T::lit(BRANCH_THRESHOLD);
    let c = a.zip_with(b, |x, y| -half * (x + y))?;
    let bad: Vec<usize> = (0..c.len())
        .filter(|&i| !((two * c.at(i)).sin().abs() >= threshold && b.at(i).sin().abs() >= threshold))
        .collect();
    if !bad.is_empty() {
        return Err(Error::BranchSingularity(NodeList(bad)));
    }

    let pi = T::PI();
    let reduced = c.map(|x| x - pi * (x / pi).floor());
    if reduced.first() > pi * half {
        return Err(Error::NegativeRatio {
            ratio: reduced.first().tan().as_f64(),
        });
    }
    let crossed: Vec<usize> = (0..c.len()).filter(|&i| reduced.at(i) > pi * half).collect();
    if !crossed.is_empty() {
        return Err(Error::BranchSingularity(NodeList(crossed)));
    }
    let xi = reduced.map(|x| x.tan().ln());

    let dc = derivative(&c);
    let n = c.len();
    let mut z = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut ev = Vec::with_capacity(n);
    let mut mw = Vec::with_capacity(n);
    for i in 0..n {
        let zi = dc.at(i) / (two * c.at(i)).sin();
        let r = (u.at(i) - zi) / b.at(i).sin();
        z.push(zi);
        y.push(r * a.at(i).sin());
        ev.push(r * a.at(i).cos());
        mw.push(r * b.at(i).cos());
    }
    let grid = a.grid().clone();
    let mk = |v: Vec<T>| RadialFunction::new(grid.clone(), v);
    let logs = LogDerivatives::from_yz(mk(y)?, mk(z)?, xi)?;
    let (ev, mw) = (mk(ev)?, mk(mw)?);
    for f in [&logs.y, &ev, &mw] {
        f.ensure_finite()?;
    }
    finish(u.clone(), ev, mw, logs, split)
}

/// Hyperbolic pipeline with `Xi` integrated by classical RK4 from node to
/// node; `S`, `T` and `U` are evaluated at the substep abscissae.
pub fn hyperbolic_pipeline<T: Real>(
    p: &HyperbolicParametrization,
    u: &dyn RadialProfile<T>,
    grid: &GridRef<T>,
    split: EnergySplit,
) -> Result<QEResult<T>> {
    sample_expression(&p.s, grid)?;
    sample_expression(&p.t, grid)?;
    hyperbolic_pipeline_profiles(&p.s, &p.t, T::lit(p.xi0), u, grid, split)
}

/// [`hyperbolic_pipeline`] with arbitrary profiles for `S` and `T`.
pub fn hyperbolic_pipeline_profiles<T: Real>(
    s: &dyn RadialProfile<T>,
    t: &dyn RadialProfile<T>,
    xi0: T,
    u: &dyn RadialProfile<T>,
    grid: &GridRef<T>,
    split: EnergySplit,
) -> Result<QEResult<T>> {
    let xi = integrate_xi(s, t, xi0, u, grid)?;
    let (s, t, u) = (s.sample(grid), t.sample(grid), u.sample(grid));
    for f in [&s, &t, &u] {
        f.ensure_finite()?;
    }
    let n = grid.len();
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut ev = Vec::with_capacity(n);
    let mut mw = Vec::with_capacity(n);
    for i in 0..n {
        let phase = t.at(i) + xi.at(i);
        z.push(u.at(i) + s.at(i) * phase.sinh());
        y.push(-s.at(i) * phase.cosh());
        ev.push(s.at(i) * t.at(i).sinh());
        mw.push(s.at(i) * t.at(i).cosh());
    }
    let mk = |v: Vec<T>| RadialFunction::new(grid.clone(), v);
    let logs = LogDerivatives::from_yz(mk(y)?, mk(z)?, xi)?;
    let (ev, mw) = (mk(ev)?, mk(mw)?);
    for f in [&logs.y, &logs.z, &ev, &mw] {
        f.ensure_finite()?;
    }
    finish(u, ev, mw, logs, split)
}

/// RK4 solution of `Xi' = 2U + 2S sinh(T + Xi)`, `Xi(r_min) = xi0`.
pub fn integrate_xi<T: Real>(
    s: &dyn RadialProfile<T>,
    t: &dyn RadialProfile<T>,
    xi0: T,
    u: &dyn RadialProfile<T>,
    grid: &GridRef<T>,
) -> Result<RadialFunction<T>> {
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let six = T::lit(6.0);
    let limit = T::lit(XI_LIMIT);
    let rhs = |r: T, x: T| two * u.value_at(r) + two * s.value_at(r) * (t.value_at(r) + x).sinh();
    let nodes = grid.nodes();
    if !(xi0.abs() <= limit) {
        return Err(Error::BlowUp { r: nodes[0].as_f64() });
    }
    let mut values = Vec::with_capacity(nodes.len());
    let mut x = xi0;
    values.push(x);
    for w in nodes.windows(2) {
        let (r, h) = (w[0], w[1] - w[0]);
        let k1 = rhs(r, x);
        let k2 = rhs(r + half * h, x + half * h * k1);
        let k3 = rhs(r + half * h, x + half * h * k2);
        let k4 = rhs(w[1], x + h * k3);
        x = x + h / six * (k1 + two * k2 + two * k3 + k4);
        if x.is_nan() {
            return Err(Error::NonFinite(NodeList(vec![values.len()])));
        }
        if !(x.abs() <= limit) {
            return Err(Error::BlowUp { r: w[1].as_f64() });
        }
        values.push(x);
    }
    RadialFunction::new(grid.clone(), values)
}
