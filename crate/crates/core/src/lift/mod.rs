//! Lifted groups, homogeneous norms, constant matrices and fundamental solutions.

pub mod calibrate;
pub mod diffop;
pub mod fundamental;
pub mod group;
pub mod matrix;
pub mod norm;

pub use calibrate::{calibrate_equivalence, calibrate_kappa, equivalence_from_samples, lifted_distance_field, EquivalenceCalibration, KAPPA_LADDER};
pub use diffop::DiffOperator;
pub use fundamental::{
    fiber_integral, fiber_peak, fit_bump, normalisation_constant, validation_bump, FiberIntegral, FundamentalSolution, Letter, SharedSolution, Validation,
    IDENTITY_TOLERANCE, SWEEP_TOLERANCE,
};
pub use group::{lift, lift_names, verify_lift, CarnotLift, LiftReport, LEFT_INVARIANCE_TOL};
pub use matrix::{matrix_sweep, sqrt_spd, ConstantMatrix};
pub use norm::{DilationPolar, HomNorm};
