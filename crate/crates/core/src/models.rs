//! Dirac system data model, the Coulomb and screened-Coulomb family, and the
//! centrifugal term.
//!
//! Sign convention of the radial equation:
//!
//! ```text
//! f' = U f - (M + W - E - V) g
//! g' = -(M + W + E + V) f - U g
//! ```
//!
//! The map `(f, g, E, V, M, W) -> (f, -g, -E, -V, -M, -W)` leaves these
//! equations invariant; it sends the `eps = -1` sector onto `eps = +1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::RadialProfile;
use crate::grid::{definite_integral, derivative, ensure_same_grid, GridRef, RadialFunction};
use crate::scalar::Real;

/// A sign `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }

    pub fn from_int(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(Error::InvalidDomain(format!("sign must be +1 or -1, got {other}"))),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Quantum numbers the centrifugal coupling was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaProvenance {
    /// Orbital number; `-1` marks the marginal `kappa = 0` case.
    pub ell: i64,
    pub q_abs: f64,
    pub sign: Sign,
}

/// Centrifugal term `U(r) = kappa / r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentrifugalTerm<T> {
    pub kappa: T,
    pub provenance: Option<KappaProvenance>,
}

impl<T: Real> CentrifugalTerm<T> {
    pub fn new(kappa: T) -> Self {
        Self {
            kappa,
            provenance: None,
        }
    }

    /// The marginal `kappa = l + 1 = 0` term, admissible for a nonzero
    /// monopole charge.
    pub fn marginal(q_abs: f64, sign: Sign) -> Result<Self> {
        if !(q_abs > 0.0) {
            return Err(Error::InvalidDomain(
                "the kappa = 0 case needs a nonzero monopole charge".into(),
            ));
        }
        Ok(Self {
            kappa: T::zero(),
            provenance: Some(KappaProvenance { ell: -1, q_abs, sign }),
        })
    }

    pub fn sample(&self, grid: &GridRef<T>) -> RadialFunction<T> {
        RadialFunction::from_fn(grid, |r| self.kappa / r)
    }
}

impl<T: Real> RadialProfile<T> for CentrifugalTerm<T> {
    fn value_at(&self, r: T) -> T {
        self.kappa / r
    }
}

/// `kappa = sign * sqrt((l + 1)(l + 1 + 2|Q|))`.
pub fn kappa_from_quantum_numbers<T: Real>(ell: i64, q_abs: f64, sign: Sign) -> Result<CentrifugalTerm<T>> {
    if ell < 0 {
        return Err(Error::InvalidDomain(format!("ell must be >= 0, got {ell}")));
    }
    if !(q_abs >= 0.0) || !q_abs.is_finite() {
        return Err(Error::InvalidDomain(format!("|Q| must be >= 0, got {q_abs}")));
    }
    let l1 = T::from_i64(ell + 1).unwrap();
    let q = T::lit(q_abs);
    let kappa = sign.value::<T>() * (l1 * (l1 + T::lit(2.0) * q)).sqrt();
    Ok(CentrifugalTerm {
        kappa,
        provenance: Some(KappaProvenance { ell, q_abs, sign }),
    })
}

/// Coulomb couplings `(beta, alpha)` of the hyperbolic rotation
/// `[[-cosh t, sinh t], [sinh t, -cosh t]] (eps mu, eps kappa)`.
pub fn coulomb_couplings<T: Real>(eps: Sign, t: T, mu: T, kappa: T) -> (T, T) {
    let e = eps.value::<T>();
    let (c, s) = (t.cosh(), t.sinh());
    let beta = -c * e * mu + s * e * kappa;
    let alpha = s * e * mu - c * e * kappa;
    (beta, alpha)
}

/// Threshold exponent `mu = sqrt(kappa^2 + beta^2 - alpha^2)`; `None` when
/// the radicand is not positive.
pub fn threshold_exponent<T: Real>(kappa: T, alpha: T, beta: T) -> Option<T> {
    let m2 = kappa * kappa + beta * beta - alpha * alpha;
    (m2 > T::zero()).then(|| m2.sqrt())
}

/// Operator data of the radial equation.
#[derive(Debug, Clone)]
pub struct DiracSystem<T> {
    pub u: RadialFunction<T>,
    pub v: RadialFunction<T>,
    pub w: RadialFunction<T>,
    pub m: T,
}

impl<T: Real> DiracSystem<T> {
    pub fn new(u: RadialFunction<T>, v: RadialFunction<T>, w: RadialFunction<T>, m: T) -> Result<Self> {
        ensure_same_grid(&u, &v)?;
        ensure_same_grid(&u, &w)?;
        Ok(Self { u, v, w, m })
    }

    pub fn grid(&self) -> &GridRef<T> {
        self.u.grid()
    }

    /// Image under `(V, M, W) -> (-V, -M, -W)`.
    pub fn negated(&self) -> Self {
        Self {
            u: self.u.clone(),
            v: self.v.scale(-T::one()),
            w: self.w.scale(-T::one()),
            m: -self.m,
        }
    }

    /// Pointwise rows of the radial equation for `sol`, derivatives by
    /// finite differences.
    pub fn residual_rows(&self, sol: &SpinorSolution<T>) -> Result<(RadialFunction<T>, RadialFunction<T>)> {
        ensure_same_grid(&self.u, &sol.f)?;
        let df = derivative(&sol.f);
        let dg = derivative(&sol.g);
        let n = self.u.len();
        let (u, v, w) = (self.u.values(), self.v.values(), self.w.values());
        let (f, g) = (sol.f.values(), sol.g.values());
        let e = sol.e;
        let mut row1 = Vec::with_capacity(n);
        let mut row2 = Vec::with_capacity(n);
        for i in 0..n {
            row1.push(df.at(i) - u[i] * f[i] + (self.m + w[i] - e - v[i]) * g[i]);
            row2.push((self.m + w[i] + e + v[i]) * f[i] + dg.at(i) + u[i] * g[i]);
        }
        let grid = self.grid().clone();
        Ok((
            RadialFunction::new(grid.clone(), row1)?,
            RadialFunction::new(grid, row2)?,
        ))
    }
}

/// Candidate bound state.
#[derive(Debug, Clone)]
pub struct SpinorSolution<T> {
    pub f: RadialFunction<T>,
    pub g: RadialFunction<T>,
    pub e: T,
}

impl<T: Real> SpinorSolution<T> {
    pub fn new(f: RadialFunction<T>, g: RadialFunction<T>, e: T) -> Result<Self> {
        ensure_same_grid(&f, &g)?;
        if f.max_abs() == T::zero() || g.max_abs() == T::zero() {
            return Err(Error::InvalidDomain(
                "spinor components must not vanish identically".into(),
            ));
        }
        Ok(Self { f, g, e })
    }

    pub fn grid(&self) -> &GridRef<T> {
        self.f.grid()
    }

    /// Image under `(g, E) -> (-g, -E)`.
    pub fn negated(&self) -> Self {
        Self {
            f: self.f.clone(),
            g: self.g.scale(-T::one()),
            e: -self.e,
        }
    }

    /// `int (f^2 + g^2) dr` over the grid.
    pub fn norm_squared(&self) -> Result<T> {
        let density = self.f.zip_with(&self.g, |a, b| a * a + b * b)?;
        definite_integral(&density)
    }

    /// Artifact convention: the amplitude at both ends of the grid is below
    /// `1e-6` (outer end) and `1e-3` (inner end) of the peak amplitude.
    pub fn is_normalizable(&self) -> bool {
        let amp = |i: usize| self.f.at(i).abs().max(self.g.at(i).abs());
        let n = self.f.len();
        let peak = (0..n).fold(T::zero(), |acc, i| acc.max(amp(i)));
        peak.is_finite() && peak > T::zero() && amp(n - 1) <= T::lit(1e-6) * peak && amp(0) <= T::lit(1e-3) * peak
    }
}

/// Couplings of the screened-Coulomb family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingSet<T> {
    pub alpha: T,
    pub beta: T,
    pub alpha_s: T,
    pub beta_s: T,
    pub h: T,
    pub lambda: T,
    pub mu: T,
    pub kappa: T,
    pub eps: Sign,
    pub t: T,
}

impl<T: Real> CouplingSet<T> {
    /// `V(r) = alpha/r + alpha_s/(1 + h r)`.
    pub fn v_at(&self, r: T) -> T {
        self.alpha / r + self.alpha_s / (T::one() + self.h * r)
    }

    /// `W(r) = beta/r + beta_s/(1 + h r)`.
    pub fn w_at(&self, r: T) -> T {
        self.beta / r + self.beta_s / (T::one() + self.h * r)
    }

    pub fn energy(&self) -> T {
        -self.eps.value::<T>() * self.lambda * self.t.sinh()
    }

    pub fn mass(&self) -> T {
        self.eps.value::<T>() * self.lambda * self.t.cosh()
    }

    /// Ratio `p/q = eps e^t` of the spinor amplitudes.
    pub fn amplitude_ratio(&self) -> T {
        self.eps.value::<T>() * self.t.exp()
    }

    /// Common logarithmic derivative `mu/r + h/(1 + h r) - lambda`.
    pub fn log_derivative_at(&self, r: T) -> T {
        self.mu / r + self.h / (T::one() + self.h * r) - self.lambda
    }
}

/// The screened-Coulomb system together with its closed-form bound state.
#[derive(Debug, Clone)]
pub struct ScreenedModel<T> {
    pub system: DiracSystem<T>,
    pub solution: SpinorSolution<T>,
    pub couplings: CouplingSet<T>,
}

/// Builds the screened-Coulomb system whose bound state is
/// `f = p r^mu (1 + h r) e^{-lambda r}`, `g = q r^mu (1 + h r) e^{-lambda r}`.
///
/// `h = 0` is the exactly solvable Coulomb model.
pub fn screened_model<T: Real>(
    eps: Sign,
    t: T,
    lambda: T,
    h: T,
    mu: T,
    kappa: &CentrifugalTerm<T>,
    grid: &GridRef<T>,
) -> Result<ScreenedModel<T>> {
    if !(lambda > T::zero()) {
        return Err(Error::InvalidDomain(format!("lambda must be > 0, got {lambda}")));
    }
    if !(h >= T::zero()) {
        return Err(Error::InvalidDomain(format!("h must be >= 0, got {h}")));
    }
    if !(mu > T::zero()) {
        return Err(Error::InvalidDomain(format!("mu must be > 0, got {mu}")));
    }
    if !t.is_finite() || !kappa.kappa.is_finite() {
        return Err(Error::InvalidDomain("t and kappa must be finite".into()));
    }
    let e = eps.value::<T>();
    let (beta, alpha) = coulomb_couplings(eps, t, mu, kappa.kappa);
    let couplings = CouplingSet {
        alpha,
        beta,
        alpha_s: e * h * t.sinh() + T::zero(),
        beta_s: -e * h * t.cosh() + T::zero(),
        h,
        lambda,
        mu,
        kappa: kappa.kappa,
        eps,
        t,
    };

    let shape = RadialFunction::from_fn(grid, |r| (mu * r.ln() - lambda * r).exp() * (T::one() + h * r));
    let shape_norm = definite_integral(&shape.map(|s| s * s))?;
    let ratio = couplings.amplitude_ratio();
    let q = T::one() / ((T::one() + ratio * ratio) * shape_norm).sqrt();
    let p = ratio * q;
    if !(q.is_finite() && p.is_finite()) {
        return Err(Error::Overflow("spinor normalization".into()));
    }

    let system = DiracSystem::new(
        kappa.sample(grid),
        RadialFunction::from_fn(grid, |r| couplings.v_at(r)),
        RadialFunction::from_fn(grid, |r| couplings.w_at(r)),
        couplings.mass(),
    )?;
    let solution = SpinorSolution::new(shape.scale(p), shape.scale(q), couplings.energy())?;
    Ok(ScreenedModel {
        system,
        solution,
        couplings,
    })
}
