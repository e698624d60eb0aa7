//! Two bound states of one pair of potentials.
//!
//! A doublet is fixed by two functions `a(r)`, `b(r)` vanishing at `r_min`,
//! the energy split `delta = E2 - E1`, `E1` and the shared mass `M`. The
//! branches have `Xi1 = b - a`, `Xi2 = b + a`, `Z1 = (b' - a')/2`,
//! `Z2 = (a' + b')/2` and
//!
//! ```text
//! Y1 + Y2 = delta cosh b / sinh a - a' cosh a / sinh a
//! Y1 - Y2 = delta sinh b / cosh a + (b' - 2U) sinh a / cosh a
//! ```
//!
//! which makes both branches reconstruct the same `V` and `W`.

use serde::Serialize;

use crate::dd::Dd;
use crate::error::{Error, NodeList, Result};
use crate::expr::{sample_expression, Expression, RadialProfile};
use crate::grid::{derivative, ensure_same_grid, GridRef, RadialFunction};
use crate::implicit::{reconstruct_potentials, relative_constraint_max, spinor_from_logs, LogDerivatives};
use crate::models::{DiracSystem, SpinorSolution};
use crate::scalar::Real;
use crate::solver::residual_norm;

/// Smallest admissible `|sinh a|` and `|sinh 2a|`.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;
/// Largest admissible `|a(r_min)|`, `|b(r_min)|`.
pub const ORIGIN_TOLERANCE: f64 = 1e-4;

/// Free data of a doublet.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubletShape {
    pub a: Expression,
    pub b: Expression,
    pub delta: f64,
    pub e1: f64,
    pub m: f64,
}

/// Samples of `a`, `b` and their derivatives.
#[derive(Debug, Clone)]
pub struct SampledShape<T> {
    pub a: RadialFunction<T>,
    pub b: RadialFunction<T>,
    pub da: RadialFunction<T>,
    pub db: RadialFunction<T>,
}

impl<T: Real> SampledShape<T> {
    /// Samples `a`, `b` on `grid` and checks the admissibility conditions.
    pub fn new(a: &dyn RadialProfile<T>, b: &dyn RadialProfile<T>, grid: &GridRef<T>) -> Result<Self> {
        let a = a.sample(grid);
        let b = b.sample(grid);
        for f in [&a, &b] {
            let bad = f.non_finite_nodes();
            if !bad.is_empty() {
                return Err(Error::SingularSample(NodeList(bad)));
            }
        }
        let tol = T::lit(ORIGIN_TOLERANCE);
        if !(a.first().abs() <= tol && b.first().abs() <= tol) {
            return Err(Error::DegenerateShape {
                reason: format!(
                    "a(r_min) = {:e}, b(r_min) = {:e} must vanish (tolerance {ORIGIN_TOLERANCE:e})",
                    a.first().as_f64(),
                    b.first().as_f64()
                ),
                nodes: NodeList(vec![0]),
            });
        }
        let thr = T::lit(SINGULAR_THRESHOLD);
        let bad: Vec<usize> = (0..a.len()).filter(|&i| !(a.at(i).sinh().abs() >= thr)).collect();
        if !bad.is_empty() {
            return Err(Error::DegenerateShape {
                reason: format!("|sinh a| < {SINGULAR_THRESHOLD:e}"),
                nodes: NodeList(bad),
            });
        }
        Ok(Self {
            da: derivative(&a),
            db: derivative(&b),
            a,
            b,
        })
    }

    fn from_shape(d: &DoubletShape, grid: &GridRef<T>) -> Result<Self> {
        sample_expression(&d.a, grid)?;
        sample_expression(&d.b, grid)?;
        Self::new(&d.a, &d.b, grid)
    }
}

/// Closed-form `(Y1, Y2)` at a point.
pub fn doublet_point<T: Real>(a: T, b: T, da: T, db: T, delta: T, u: T) -> (T, T) {
    let (sa, ca) = (a.sinh(), a.cosh());
    let sum = delta * b.cosh() / sa - da * ca / sa;
    let diff = delta * b.sinh() / ca + (db - T::lit(2.0) * u) * sa / ca;
    let half = T::lit(0.5);
    (half * (sum + diff), half * (sum - diff))
}

/// `(Y1, Y2)` at a point by solving, in double-double precision, the linear
/// system that equates the two branch reconstructions of `V` and `W`;
/// `None` when `|sinh 2a|` is below the threshold.
pub fn oracle_point<T: Real>(a: T, b: T, da: T, db: T, delta: T, u: T) -> Option<(T, T)> {
    let d = |x: T| Dd::from_f64(x.as_f64());
    let (a, b, da, db, delta, u) = (d(a), d(b), d(da), d(db), d(delta), d(u));
    let half = Dd::from_f64(0.5);
    let (x1, x2) = (b - a, b + a);
    let (z1, z2) = (half * (db - da), half * (da + db));
    let (s1, c1) = x1.sinh_cosh();
    let (s2, c2) = x2.sinh_cosh();
    // [-s1, s2; c1, -c2] (Y1, Y2) = (r1, r2)
    let r1 = delta - c2 * (z2 - u) + c1 * (z1 - u);
    let r2 = s2 * (z2 - u) - s1 * (z1 - u);
    let det = s1 * c2 - s2 * c1;
    if !(det.abs().to_f64() >= SINGULAR_THRESHOLD) {
        return None;
    }
    let y1 = (-(c2 * r1) - s2 * r2) / det;
    let y2 = (-(s1 * r2) - c1 * r1) / det;
    Some((T::lit(y1.to_f64()), T::lit(y2.to_f64())))
}

/// Branch log-derivatives of a doublet.
#[derive(Debug, Clone)]
pub struct DoubletLogs<T> {
    pub y1: RadialFunction<T>,
    pub y2: RadialFunction<T>,
    pub z1: RadialFunction<T>,
    pub z2: RadialFunction<T>,
}

/// Closed-form `Y1`, `Y2`, `Z1`, `Z2`.
pub fn doublet_logderivatives<T: Real>(
    d: &DoubletShape,
    u: &RadialFunction<T>,
    grid: &GridRef<T>,
) -> Result<DoubletLogs<T>> {
    let shape = SampledShape::from_shape(d, grid)?;
    doublet_logderivatives_sampled(&shape, T::lit(d.delta), u)
}

/// [`doublet_logderivatives`] on a sampled shape.
pub fn doublet_logderivatives_sampled<T: Real>(
    s: &SampledShape<T>,
    delta: T,
    u: &RadialFunction<T>,
) -> Result<DoubletLogs<T>> {
    ensure_same_grid(&s.a, u)?;
    let n = u.len();
    let (mut y1, mut y2) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let (p, q) = doublet_point(s.a.at(i), s.b.at(i), s.da.at(i), s.db.at(i), delta, u.at(i));
        y1.push(p);
        y2.push(q);
    }
    let half = T::lit(0.5);
    let grid = u.grid().clone();
    Ok(DoubletLogs {
        y1: RadialFunction::new(grid.clone(), y1)?,
        y2: RadialFunction::new(grid, y2)?,
        z1: s.db.zip_with(&s.da, |db, da| half * (db - da))?,
        z2: s.da.zip_with(&s.db, |da, db| half * (da + db))?,
    })
}

/// Pointwise linear-solve reference for `(Y1, Y2)`.
pub fn doublet_pointwise_oracle<T: Real>(
    d: &DoubletShape,
    u: &RadialFunction<T>,
    grid: &GridRef<T>,
) -> Result<(RadialFunction<T>, RadialFunction<T>)> {
    let shape = SampledShape::from_shape(d, grid)?;
    doublet_pointwise_oracle_sampled(&shape, T::lit(d.delta), u)
}

/// [`doublet_pointwise_oracle`] on a sampled shape.
pub fn doublet_pointwise_oracle_sampled<T: Real>(
    s: &SampledShape<T>,
    delta: T,
    u: &RadialFunction<T>,
) -> Result<(RadialFunction<T>, RadialFunction<T>)> {
    ensure_same_grid(&s.a, u)?;
    let n = u.len();
    let (mut y1, mut y2, mut bad) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::new());
    for i in 0..n {
        match oracle_point(s.a.at(i), s.b.at(i), s.da.at(i), s.db.at(i), delta, u.at(i)) {
            Some((p, q)) => {
                y1.push(p);
                y2.push(q);
            }
            None => bad.push(i),
        }
    }
    if !bad.is_empty() {
        return Err(Error::SingularSystem(NodeList(bad)));
    }
    let grid = u.grid().clone();
    Ok((RadialFunction::new(grid.clone(), y1)?, RadialFunction::new(grid, y2)?))
}

/// Largest pointwise `max_k |Y_k - O_k| / max_k |O_k|` between closed-form
/// `Y` and oracle `O`.
pub fn oracle_deviation<T: Real>(logs: &DoubletLogs<T>, o1: &RadialFunction<T>, o2: &RadialFunction<T>) -> T {
    (0..o1.len()).fold(T::zero(), |acc, i| {
        let scale = o1.at(i).abs().max(o2.at(i).abs());
        let diff = (o1.at(i) - logs.y1.at(i)).abs().max((o2.at(i) - logs.y2.at(i)).abs());
        if diff == T::zero() {
            acc
        } else {
            acc.max(diff / scale)
        }
    })
}

/// Agreement diagnostics of a doublet construction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DoubletDiagnostics {
    /// Largest `|V1 - V2| + |W1 - W2|`.
    pub mismatch: f64,
    /// Mismatch relative to `1 + cosh(Xi) (|Z - U| + |Y|)`, the size of the
    /// terms in the reconstruction, taking the larger branch.
    pub mismatch_relative: f64,
    /// See [`oracle_deviation`].
    pub oracle_agreement: f64,
    pub residual_norm_1: f64,
    pub residual_norm_2: f64,
    pub constraint_relative_max_1: f64,
    pub constraint_relative_max_2: f64,
    pub normalizable_1: bool,
    pub normalizable_2: bool,
}

/// Shared system and both branch spinors.
#[derive(Debug, Clone)]
pub struct DoubletResult<T> {
    pub system: DiracSystem<T>,
    pub sol1: SpinorSolution<T>,
    pub sol2: SpinorSolution<T>,
    pub logs1: LogDerivatives<T>,
    pub logs2: LogDerivatives<T>,
    pub mismatch: T,
    pub diagnostics: DoubletDiagnostics,
}

/// Builds the shared potentials from branch 1 and both spinors.
pub fn doublet_systems<T: Real>(
    d: &DoubletShape,
    u: &RadialFunction<T>,
    grid: &GridRef<T>,
) -> Result<DoubletResult<T>> {
    let shape = SampledShape::from_shape(d, grid)?;
    doublet_systems_sampled(&shape, T::lit(d.delta), T::lit(d.e1), T::lit(d.m), u)
}

/// [`doublet_systems`] on a sampled shape.
pub fn doublet_systems_sampled<T: Real>(
    s: &SampledShape<T>,
    delta: T,
    e1: T,
    m: T,
    u: &RadialFunction<T>,
) -> Result<DoubletResult<T>> {
    let logs = doublet_logderivatives_sampled(s, delta, u)?;
    let e2 = e1 + delta;
    let xi1 = s.b.zip_with(&s.a, |b, a| b - a)?;
    let xi2 = s.b.zip_with(&s.a, |b, a| b + a)?;
    let logs1 = LogDerivatives::from_yz(logs.y1.clone(), logs.z1.clone(), xi1)?;
    let logs2 = LogDerivatives::from_yz(logs.y2.clone(), logs.z2.clone(), xi2)?;
    for f in [&logs1.y, &logs2.y] {
        f.ensure_finite()?;
    }
    let (v1, w1) = reconstruct_potentials(&logs1, u, e1, m)?;
    let (v2, w2) = reconstruct_potentials(&logs2, u, e2, m)?;
    let mismatch = (0..u.len()).fold(T::zero(), |acc, i| {
        acc.max((v1.at(i) - v2.at(i)).abs() + (w1.at(i) - w2.at(i)).abs())
    });

    let mismatch_relative = (0..u.len()).fold(T::zero(), |acc, i| {
        let terms = |l: &LogDerivatives<T>| l.xi.at(i).cosh() * ((l.z.at(i) - u.at(i)).abs() + l.y.at(i).abs());
        let scale = T::one() + terms(&logs1).max(terms(&logs2));
        acc.max(((v1.at(i) - v2.at(i)).abs() + (w1.at(i) - w2.at(i)).abs()) / scale)
    });
    let oracle_agreement = match doublet_pointwise_oracle_sampled(s, delta, u) {
        Ok((o1, o2)) => oracle_deviation(&logs, &o1, &o2),
        Err(_) => T::nan(),
    };

    let system = DiracSystem::new(u.clone(), v1, w1, m)?;
    let sol1 = spinor_from_logs(&logs1, e1)?;
    let sol2 = spinor_from_logs(&logs2, e2)?;
    let diagnostics = DoubletDiagnostics {
        mismatch: mismatch.as_f64(),
        mismatch_relative: mismatch_relative.as_f64(),
        oracle_agreement: oracle_agreement.as_f64(),
        residual_norm_1: residual_norm(&system, &sol1)?.as_f64(),
        residual_norm_2: residual_norm(&system, &sol2)?.as_f64(),
        constraint_relative_max_1: relative_constraint_max(&system, e1, &logs1)?.as_f64(),
        constraint_relative_max_2: relative_constraint_max(&system, e2, &logs2)?.as_f64(),
        normalizable_1: sol1.is_normalizable(),
        normalizable_2: sol2.is_normalizable(),
    };
    Ok(DoubletResult {
        system,
        sol1,
        sol2,
        logs1,
        logs2,
        mismatch,
        diagnostics,
    })
}

/// Nonrelativistic doublet condition
/// `(F1 - F2)' + (F1 - F2)(F1 + F2) - (E2 - E1)` for logarithmic
/// derivatives of two states of one potential.
pub fn nonrel_doublet_residual<T: Real>(
    f1: &RadialFunction<T>,
    f2: &RadialFunction<T>,
    e1: T,
    e2: T,
) -> Result<RadialFunction<T>> {
    let diff = f1.sub(f2)?;
    let sum = f1.add(f2)?;
    let ddiff = derivative(&diff);
    let delta = e2 - e1;
    let values = (0..diff.len())
        .map(|i| ddiff.at(i) + diff.at(i) * sum.at(i) - delta)
        .collect();
    RadialFunction::new(diff.grid().clone(), values)
}
