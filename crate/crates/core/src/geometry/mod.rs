//! Control distance, balls, covers and cutoff functions.

pub mod balls;
pub mod cover;
pub mod cutoff;
pub mod distance;
pub mod domain;

pub use balls::{ball_volume, doubling_ratios, fit_growth, local_exponents, volume_ratio, GrowthFit, RefinedRatio};
pub use cover::{greedy_cover, BallCover};
pub use cutoff::{CutoffFamily, SmoothStep};
pub use distance::{
    cc_distance, control_set, flow, reach_box, translation_invariant_axes, CCGraphConfig, DistanceEstimate, DistanceField,
    DistanceSolver, GridMetric, SourceView,
};
pub use domain::BoxDomain;
