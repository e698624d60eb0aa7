//! Potentials from a prescribed bound state.
//!
//! Given a nodeless spinor `(f0, g0)` at energy `E0` and mass `M0`, the two
//! rows of the radial equation are solved algebraically for `V` and `W`:
//!
//! ```text
//! W = -M0 - [ (f0' - U f0) / g0 + (g0' + U g0) / f0 ] / 2
//! V = -E0 + [ (f0' - U f0) / g0 - (g0' + U g0) / f0 ] / 2
//! ```

use crate::error::{Error, Result};
use crate::grid::{derivative, ensure_same_grid, RadialFunction};
use crate::scalar::Real;

const TINY: f64 = 1e-300;

/// Vector and scalar potentials for which `(f0, g0, E0)` solves the radial
/// equation with centrifugal term `u` and mass `m0`.
pub fn potentials_from_ansatz<T: Real>(
    f0: &RadialFunction<T>,
    g0: &RadialFunction<T>,
    u: &RadialFunction<T>,
    m0: T,
    e0: T,
) -> Result<(RadialFunction<T>, RadialFunction<T>)> {
    ensure_same_grid(f0, g0)?;
    ensure_same_grid(f0, u)?;
    f0.ensure_finite()?;
    g0.ensure_finite()?;
    let tiny = T::lit(TINY);
    let nodes = f0.grid().nodes();
    if let Some(i) = (0..f0.len()).find(|&i| !(f0.at(i).abs() >= tiny && g0.at(i).abs() >= tiny)) {
        return Err(Error::DivisionByZero {
            node: i,
            r: nodes[i].as_f64(),
        });
    }
    let df = derivative(f0);
    let dg = derivative(g0);
    let half = T::lit(0.5);
    let n = f0.len();
    let mut v = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let upper = (df.at(i) - u.at(i) * f0.at(i)) / g0.at(i);
        let lower = (dg.at(i) + u.at(i) * g0.at(i)) / f0.at(i);
        w.push(-m0 - half * (upper + lower));
        v.push(-e0 + half * (upper - lower));
    }
    let grid = f0.grid().clone();
    Ok((RadialFunction::new(grid.clone(), v)?, RadialFunction::new(grid, w)?))
}

/// Nonrelativistic potential with logarithmic derivative `F` at energy `E0`:
/// `V = E0 - l(l+1)/r^2 + F^2 + F'`.
pub fn riccati_potential<T: Real>(f: &RadialFunction<T>, e0: T, ell: i64) -> RadialFunction<T> {
    let df = derivative(f);
    let l = T::from_i64(ell).unwrap();
    let barrier = l * (l + T::one());
    let nodes = f.grid().nodes();
    let values = (0..f.len())
        .map(|i| {
            let r = nodes[i];
            e0 - barrier / (r * r) + f.at(i) * f.at(i) + df.at(i)
        })
        .collect();
    RadialFunction::new(f.grid().clone(), values).expect("length preserved")
}
