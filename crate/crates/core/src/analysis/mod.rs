//! Maximal and sharp maximal functions over finite ball families, VMO
//! moduli and mean-oscillation bounds.

mod family;
mod maximal;
mod oscillation;

pub use family::{ball_members, BallFamily, BallFamilyConfig, FamilyBall};
pub use maximal::{
    fefferman_stein, hl_inequality, hl_maximal, hl_maximal_at, sharp_maximal, vmo_modulus, CoefficientModulus, NormRecord, VmoReport,
};
pub use oscillation::{fitted_constant, JetFn, OscillationRecord, OscillationSetup};
