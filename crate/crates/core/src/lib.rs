//! Cubic nonlinear Klein-Gordon systems in one space dimension: mass
//! resonances, reduced nonlinearities, the Hermitian-matrix dissipativity
//! condition, a pseudospectral solver, hyperbolic-coordinate profiles and
//! decay-rate fits.
//!
//! Numerical code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod algebra;
pub mod analysis;
pub mod condition;
pub mod profile;
pub mod reduced;
pub mod scalar;
pub mod solver;

pub use algebra::{CubicNonlinearity, CubicTerm, Derivative, Factor, Mass, MassVector, ResonanceTable, SignTriple};
pub use analysis::{fit_decay, growth_correlation, log_log_slope, lp_interpolation_check, DecayFit, DecayModel};
pub use condition::{check_condition, search_matrix, ConditionKind, SamplingSpec, SearchOptions};
pub use scalar::Real;
pub use solver::{CauchyData, EvolveOptions, FieldState, Grid1D};

pub type ConditionMatrix = condition::ConditionMatrix<f64>;
pub type ConditionReport = condition::ConditionReport<f64>;
pub type SearchOutcome = condition::SearchOutcome<f64>;
pub type ReducedSystem = reduced::ReducedSystem<f64>;
pub type HyperbolaPoint = reduced::HyperbolaPoint<f64>;
pub type Simulation = solver::Simulation<f64>;
pub type RunRecord = solver::RunRecord<f64>;
pub type HyperbolicChart = profile::HyperbolicChart<f64>;
pub type WeightFunction = profile::WeightFunction<f64>;
pub type ProfileTrajectory = profile::ProfileTrajectory<f64>;
pub type Ray = profile::Ray<f64>;
