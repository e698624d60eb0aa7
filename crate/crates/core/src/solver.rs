//! Shooting solver for bound states of the radial equation.
//!
//! The regular solution is integrated outward from `r_min`, the decaying one
//! inward from `r_max`, both with classical RK4 on the grid nodes. Bound
//! states are the zeros of the matching determinant
//! `D(E) = f_out g_in - g_out f_in`, evaluated with both halves scaled to
//! unit amplitude at the matching node.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{derivative, ensure_same_grid, GridRef};
use crate::models::{DiracSystem, SpinorSolution};
use crate::scalar::Real;

const RESCALE: f64 = 1e100;

/// Where the two halves of the shooting solution meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchPoint {
    /// First local maximum of `|f_out|` at the bracket midpoint.
    Auto,
    Node(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig<T> {
    pub match_point: MatchPoint,
    pub e_bracket: (T, T),
    pub e_tol: T,
    pub max_iter: usize,
}

impl<T: Real> ShootingConfig<T> {
    pub fn new(e_lo: T, e_hi: T) -> Self {
        Self {
            match_point: MatchPoint::Auto,
            e_bracket: (e_lo, e_hi),
            e_tol: T::lit(1e-10),
            max_iter: 200,
        }
    }

    pub fn with_match(mut self, match_point: MatchPoint) -> Self {
        self.match_point = match_point;
        self
    }

    /// Checks `-|M| < E_lo < E_hi < |M|` and the tolerances.
    pub fn validate(&self, m: T) -> Result<()> {
        let (lo, hi) = self.e_bracket;
        let m = m.abs();
        if !(-m < lo && lo < hi && hi < m) {
            return Err(Error::InvalidDomain(format!(
                "energy bracket [{lo}, {hi}] must lie inside (-{m}, {m})"
            )));
        }
        if !(self.e_tol > T::zero()) {
            return Err(Error::InvalidDomain("e_tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidDomain("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// `(f', g')` of the radial equation at `r`, potentials interpolated from
/// the grid samples (cubic interpolation of `r U`, `r V`, `r W`).
pub fn dirac_rhs<T: Real>(system: &DiracSystem<T>, e: T, r: T, f: T, g: T) -> (T, T) {
    Coefficients::new(system).rhs(system.grid().locate(r), e, r, f, g)
}

/// Potentials scaled by `r`, which stay smooth at the origin.
struct Coefficients<'a, T: Real> {
    grid: &'a GridRef<T>,
    ru: Vec<T>,
    rv: Vec<T>,
    rw: Vec<T>,
    m: T,
}

impl<'a, T: Real> Coefficients<'a, T> {
    fn new(system: &'a DiracSystem<T>) -> Self {
        let grid = system.grid();
        let scaled = |x: &[T]| x.iter().zip(grid.nodes()).map(|(&v, &r)| v * r).collect::<Vec<_>>();
        Self {
            grid,
            ru: scaled(system.u.values()),
            rv: scaled(system.v.values()),
            rw: scaled(system.w.values()),
            m: system.m,
        }
    }

    fn at(&self, i: usize, r: T) -> (T, T, T) {
        let g = self.grid;
        (
            g.interpolate_in(&self.ru, i, r) / r,
            g.interpolate_in(&self.rv, i, r) / r,
            g.interpolate_in(&self.rw, i, r) / r,
        )
    }

    #[inline]
    fn rhs(&self, i: usize, e: T, r: T, f: T, g: T) -> (T, T) {
        let (u, v, w) = self.at(i, r);
        (u * f - (self.m + w - e - v) * g, -(self.m + w + e + v) * f - u * g)
    }

    /// One RK4 step over interval `i`, from `r0` to `r1` (either direction).
    fn step(&self, i: usize, e: T, r0: T, r1: T, y: (T, T)) -> (T, T) {
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        let h = r1 - r0;
        let rm = r0 + half * h;
        let k1 = self.rhs(i, e, r0, y.0, y.1);
        let k2 = self.rhs(i, e, rm, y.0 + half * h * k1.0, y.1 + half * h * k1.1);
        let k3 = self.rhs(i, e, rm, y.0 + half * h * k2.0, y.1 + half * h * k2.1);
        let k4 = self.rhs(i, e, r1, y.0 + h * k3.0, y.1 + h * k3.1);
        let sixth = h / T::lit(6.0);
        (
            y.0 + sixth * (k1.0 + two * k2.0 + two * k3.0 + k4.0),
            y.1 + sixth * (k1.1 + two * k2.1 + two * k3.1 + k4.1),
        )
    }

    /// Leading couplings `(kappa, alpha, beta)` at the origin by linear
    /// extrapolation of `r U`, `r V`, `r W`.
    fn origin_couplings(&self) -> (T, T, T) {
        let r = self.grid.nodes();
        let ext = |x: &[T]| x[0] - r[0] * (x[1] - x[0]) / (r[1] - r[0]);
        (ext(&self.ru), ext(&self.rv), ext(&self.rw))
    }
}

/// Threshold exponent and `g/f` ratio of the regular solution at the
/// origin for `U ~ kappa/r`, `V ~ alpha/r`, `W ~ beta/r`.
pub fn indicial_start<T: Real>(kappa: T, alpha: T, beta: T) -> Result<(T, T)> {
    let disc = kappa * kappa + beta * beta - alpha * alpha;
    if !(disc > T::zero()) {
        return Err(Error::NonRegular(disc.as_f64()));
    }
    let mu = disc.sqrt();
    let d1 = beta - alpha;
    let d2 = mu + kappa;
    let ratio = if d1.abs() >= d2.abs() {
        (kappa - mu) / d1
    } else {
        -(beta + alpha) / d2
    };
    Ok((mu, ratio))
}

fn start_vector<T: Real>(c: &Coefficients<'_, T>) -> Result<(T, T)> {
    let (kappa, alpha, beta) = c.origin_couplings();
    let (mu, ratio) = indicial_start(kappa, alpha, beta)?;
    if (beta - alpha) == T::zero() && (mu + kappa) == T::zero() {
        return Ok((T::zero(), T::one()));
    }
    Ok((T::one(), ratio))
}

/// Decaying eigenvector of the constant-coefficient system at `r_max`.
fn inward_start<T: Real>(system: &DiracSystem<T>, e: T) -> Result<(T, T)> {
    let n = system.u.len();
    let (u, v, w) = (system.u.at(n - 1), system.v.at(n - 1), system.w.at(n - 1));
    let p = system.m + w - e - v;
    let q = system.m + w + e + v;
    let disc = u * u + p * q;
    if !(disc > T::zero()) || p == T::zero() {
        return Err(Error::NonDecayingTail(format!(
            "no decaying solution at r_max for E = {e}"
        )));
    }
    let lambda = disc.sqrt();
    Ok((T::one(), (u + lambda) / p))
}

/// Rejects potentials that neither vanish nor decrease at `r_max`.
fn check_tail<T: Real>(system: &DiracSystem<T>, e: T) -> Result<()> {
    let n = system.u.len();
    let limit = T::lit(1e-6) * (T::one() + e.abs());
    let k = n - 1 - (n / 10).max(1);
    for (name, f) in [("V", &system.v), ("W", &system.w)] {
        let end = f.at(n - 1).abs();
        if end > limit && !(end < f.at(k).abs()) {
            return Err(Error::NonDecayingTail(format!(
                "|{name}(r_max)| = {:e} exceeds {:e} and is not decreasing",
                end.as_f64(),
                limit.as_f64()
            )));
        }
    }
    Ok(())
}

fn rescale<T: Real>(y: (T, T)) -> Result<(T, T)> {
    let a = y.0.abs().max(y.1.abs());
    if !a.is_finite() {
        return Err(Error::Overflow("shooting amplitude".into()));
    }
    if a > T::lit(RESCALE) {
        Ok((y.0 / a, y.1 / a))
    } else {
        Ok(y)
    }
}

/// Outward solution at every node up to and including `end`.
fn integrate_outward<T: Real>(c: &Coefficients<'_, T>, e: T, end: usize) -> Result<Vec<(T, T)>> {
    let r = c.grid.nodes();
    let mut y = start_vector(c)?;
    let mut out = Vec::with_capacity(end + 1);
    out.push(y);
    for i in 0..end {
        y = rescale(c.step(i, e, r[i], r[i + 1], y))?;
        out.push(y);
    }
    Ok(out)
}

fn outward_at<T: Real>(c: &Coefficients<'_, T>, e: T, end: usize) -> Result<(T, T)> {
    let r = c.grid.nodes();
    let mut y = start_vector(c)?;
    for i in 0..end {
        y = rescale(c.step(i, e, r[i], r[i + 1], y))?;
    }
    Ok(y)
}

fn inward_at<T: Real>(system: &DiracSystem<T>, c: &Coefficients<'_, T>, e: T, end: usize) -> Result<(T, T)> {
    let r = c.grid.nodes();
    let mut y = inward_start(system, e)?;
    for i in (end..r.len() - 1).rev() {
        y = rescale(c.step(i, e, r[i + 1], r[i], y))?;
    }
    Ok(y)
}

fn unit<T: Real>((f, g): (T, T)) -> (T, T) {
    let a = (f * f + g * g).sqrt();
    (f / a, g / a)
}

/// Resolves the matching node for `cfg`.
pub fn match_index<T: Real>(system: &DiracSystem<T>, cfg: &ShootingConfig<T>) -> Result<usize> {
    let n = system.u.len();
    match cfg.match_point {
        MatchPoint::Node(i) => {
            if i == 0 || i >= n - 1 {
                return Err(Error::InvalidDomain(format!(
                    "match node {i} must be interior (1..{})",
                    n - 1
                )));
            }
            Ok(i)
        }
        MatchPoint::Auto => {
            let c = Coefficients::new(system);
            let mid = T::lit(0.5) * (cfg.e_bracket.0 + cfg.e_bracket.1);
            let trial = integrate_outward(&c, mid, n - 1)?;
            let amp: Vec<T> = trial.iter().map(|y| y.0.abs()).collect();
            let peak = (1..n - 2).find(|&i| amp[i] >= amp[i - 1] && amp[i] > amp[i + 1] && amp[i] > T::zero());
            Ok(peak.unwrap_or(n / 2).clamp(1, n - 2))
        }
    }
}

fn determinant_at<T: Real>(system: &DiracSystem<T>, c: &Coefficients<'_, T>, e: T, k: usize) -> Result<T> {
    check_tail(system, e)?;
    let (fo, go) = unit(outward_at(c, e, k)?);
    let (fi, gi) = unit(inward_at(system, c, e, k)?);
    let d = fo * gi - go * fi;
    if !d.is_finite() {
        return Err(Error::Overflow("matching determinant".into()));
    }
    Ok(d)
}

/// Matching determinant `D(E)` at the node selected by `cfg`.
pub fn matching_determinant<T: Real>(system: &DiracSystem<T>, e: T, cfg: &ShootingConfig<T>) -> Result<T> {
    cfg.validate(system.m)?;
    let k = match_index(system, cfg)?;
    determinant_at(system, &Coefficients::new(system), e, k)
}

/// Bisection on `D(E)` inside `cfg.e_bracket`.
pub fn find_eigenvalue<T: Real>(system: &DiracSystem<T>, cfg: &ShootingConfig<T>) -> Result<T> {
    cfg.validate(system.m)?;
    let k = match_index(system, cfg)?;
    let c = Coefficients::new(system);
    let (mut lo, mut hi) = cfg.e_bracket;
    let mut d_lo = determinant_at(system, &c, lo, k)?;
    let d_hi = determinant_at(system, &c, hi, k)?;
    if d_lo == T::zero() {
        return Ok(lo);
    }
    if d_hi == T::zero() {
        return Ok(hi);
    }
    if d_lo.signum() == d_hi.signum() {
        return Err(Error::NoSignChange {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        });
    }
    let half = T::lit(0.5);
    for _ in 0..cfg.max_iter {
        if hi - lo < cfg.e_tol {
            return Ok(half * (lo + hi));
        }
        let mid = half * (lo + hi);
        let d = determinant_at(system, &c, mid, k)?;
        if d == T::zero() {
            return Ok(mid);
        }
        if d.signum() == d_lo.signum() {
            lo = mid;
            d_lo = d;
        } else {
            hi = mid;
        }
    }
    if hi - lo < cfg.e_tol {
        return Ok(half * (lo + hi));
    }
    Err(Error::MaxIter(cfg.max_iter))
}

/// Largest `|row1| + |row2|` over interior nodes, divided by the largest
/// spinor amplitude.
pub fn residual_norm<T: Real>(system: &DiracSystem<T>, sol: &SpinorSolution<T>) -> Result<T> {
    ensure_same_grid(&system.u, &sol.f)?;
    let (df, dg) = (derivative(&sol.f), derivative(&sol.g));
    let (u, v, w) = (system.u.values(), system.v.values(), system.w.values());
    let (f, g) = (sol.f.values(), sol.g.values());
    let (m, e) = (system.m, sol.e);
    let n = f.len();
    let mut worst = T::zero();
    for i in 1..n - 1 {
        let row1 = df.at(i) - u[i] * f[i] + (m + w[i] - e - v[i]) * g[i];
        let row2 = dg.at(i) + (m + w[i] + e + v[i]) * f[i] + u[i] * g[i];
        let x = row1.abs() + row2.abs();
        if !x.is_finite() {
            return Ok(T::infinity());
        }
        worst = worst.max(x);
    }
    let scale = sol.f.max_abs().max(sol.g.max_abs());
    Ok(worst / scale)
}

/// `D(E)` at each energy; failures are kept per point.
pub fn energy_scan<T: Real>(
    system: &DiracSystem<T>,
    energies: &[T],
    cfg: &ShootingConfig<T>,
) -> Result<Vec<(T, Result<T>)>> {
    if energies.is_empty() {
        return Ok(Vec::new());
    }
    let k = match_index(system, cfg)?;
    let c = Coefficients::new(system);
    let m = system.m.abs();
    Ok(energies
        .par_iter()
        .map(|&e| {
            let d = if -m < e && e < m {
                determinant_at(system, &c, e, k)
            } else {
                Err(Error::InvalidDomain(format!("E = {e} outside (-{m}, {m})")))
            };
            (e, d)
        })
        .collect())
}

/// Energies bracketing a sign change of `D`, from consecutive scan points.
pub fn sign_change_brackets<T: Real>(scan: &[(T, Result<T>)]) -> Vec<(T, T)> {
    scan.windows(2)
        .filter_map(|w| match (&w[0].1, &w[1].1) {
            (Ok(a), Ok(b)) if a.signum() != b.signum() => Some((w[0].0, w[1].0)),
            _ => None,
        })
        .collect()
}
