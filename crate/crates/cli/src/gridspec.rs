use qesdirac::{make_grid, GridRef, Scheme};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const ENV_VAR: &str = "QESDIRAC_GRID";

/// Grid parameters as resolved from defaults, environment and flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
    pub scheme: Scheme,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            r_min: 1e-6,
            r_max: 40.0,
            n: 4000,
            scheme: Scheme::Geometric,
        }
    }
}

impl GridSpec {
    /// Parses `rmin:rmax:n:scheme`.
    pub fn parse(text: &str) -> CliResult<Self> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let bad = || CliError::input(format!("grid spec '{text}' is not of the form rmin:rmax:n:scheme"));
        if parts.len() != 4 {
            return Err(bad());
        }
        Ok(GridSpec {
            r_min: parts[0].parse().map_err(|_| bad())?,
            r_max: parts[1].parse().map_err(|_| bad())?,
            n: parts[2].parse().map_err(|_| bad())?,
            scheme: parts[3].parse()?,
        })
    }

    /// Default grid, replaced by the environment variable when set, then
    /// overridden field by field by explicit flags.
    pub fn resolve(
        env: Option<&str>,
        r_min: Option<f64>,
        r_max: Option<f64>,
        n: Option<usize>,
        scheme: Option<&str>,
    ) -> CliResult<Self> {
        let mut spec = match env {
            Some(text) if !text.trim().is_empty() => GridSpec::parse(text)?,
            _ => GridSpec::default(),
        };
        if let Some(v) = r_min {
            spec.r_min = v;
        }
        if let Some(v) = r_max {
            spec.r_max = v;
        }
        if let Some(v) = n {
            spec.n = v;
        }
        if let Some(s) = scheme {
            spec.scheme = s.parse()?;
        }
        Ok(spec)
    }

    pub fn build(&self) -> CliResult<GridRef> {
        Ok(make_grid(self.r_min, self.r_max, self.n, self.scheme)?)
    }

    /// Recovers the uniform or geometric grid whose nodes are `r`.
    pub fn infer(r: &[f64]) -> CliResult<(Self, GridRef)> {
        if r.len() < 2 {
            return Err(CliError::input("file has fewer than two rows"));
        }
        let (lo, hi) = (r[0], r[r.len() - 1]);
        for scheme in [Scheme::Geometric, Scheme::Uniform] {
            let spec = GridSpec {
                r_min: lo,
                r_max: hi,
                n: r.len(),
                scheme,
            };
            let Ok(grid) = spec.build() else { continue };
            let matches = grid
                .nodes()
                .iter()
                .zip(r)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs().max(1e-300));
            if matches {
                return Ok((spec, grid));
            }
        }
        Err(CliError::input("r column is neither a uniform nor a geometric grid"))
    }
}
