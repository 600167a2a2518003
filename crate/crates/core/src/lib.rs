// Negated comparisons deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod comb;
pub mod config;
pub mod eit;
pub mod field_map;
pub mod receiver;
pub mod scenario;
pub mod stark;
