//! Polynomial Hormander systems: fields, dilations, brackets and the rank condition.

pub mod catalog;
pub mod closure;
pub mod field;
pub mod poly;

pub use catalog::{builtin, builtin_names, chain, from_json, grushin, powers, to_json};
pub use closure::{default_max_depth, hormander_rank, lie_closure, validate, LieClosure, SystemSummary};
pub use field::{CompiledField, DilationFamily, HomogeneityReport, HormanderSystem, PolyVectorField};
pub use poly::{Coeff, CompiledPoly, Monomial, Poly};
