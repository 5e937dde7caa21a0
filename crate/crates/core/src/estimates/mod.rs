//! Grid X-derivatives, Sobolev norms, the variable-coefficient operator and
//! a-priori estimate ratios.

mod apriori;
mod derivatives;

pub use apriori::{
    apply_l, apriori_ratio, higher_order_ratio, interpolation_check, AprioriRecord, DiscreteOperator, InterpolationRecord, InterpolationReport,
};
pub use derivatives::{apply_field_grid, apply_word_grid, leibniz_expand, sobolev_norm, words, SobolevReport, StencilOrder};
