//! Quasi-exactly solvable radial Dirac systems.
//!
//! The library builds radial Dirac systems together with one or two of their
//! bound states in closed form, and checks every construction against an
//! independent shooting solver.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the type
//! aliases at the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod dd;
pub mod doublets;
pub mod error;
pub mod explicit;
pub mod expr;
pub mod grid;
pub mod implicit;
pub mod models;
pub mod scalar;
pub mod solver;

pub use doublets::{doublet_logderivatives, doublet_systems, nonrel_doublet_residual, DoubletShape};
pub use error::{Error, NodeList, Result};
pub use explicit::{potentials_from_ansatz, riccati_potential};
pub use expr::{parse, sample_expression, Expression, RadialProfile};
pub use grid::{cumulative_integral, definite_integral, derivative, make_grid, same_grid, Scheme, MIN_NODES};
pub use implicit::{
    hyperbolic_pipeline, log_derivatives, reconstruct_potentials, trig_pipeline, EnergySplit,
    HyperbolicParametrization, TrigParametrization,
};
pub use models::{coulomb_couplings, kappa_from_quantum_numbers, screened_model, threshold_exponent, Sign};
pub use scalar::Real;
pub use solver::{energy_scan, find_eigenvalue, matching_determinant, residual_norm, MatchPoint};

pub type RadialGrid = grid::RadialGrid<f64>;
pub type GridRef = grid::GridRef<f64>;
pub type RadialFunction = grid::RadialFunction<f64>;
pub type CentrifugalTerm = models::CentrifugalTerm<f64>;
pub type DiracSystem = models::DiracSystem<f64>;
pub type SpinorSolution = models::SpinorSolution<f64>;
pub type CouplingSet = models::CouplingSet<f64>;
pub type ScreenedModel = models::ScreenedModel<f64>;
pub type LogDerivatives = implicit::LogDerivatives<f64>;
pub type QEResult = implicit::QEResult<f64>;
pub type DoubletLogs = doublets::DoubletLogs<f64>;
pub type DoubletResult = doublets::DoubletResult<f64>;
pub type SampledShape = doublets::SampledShape<f64>;
pub type ShootingConfig = solver::ShootingConfig<f64>;
