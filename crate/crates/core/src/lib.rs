//! Circuit simulation for quantum phase-slip junction networks.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod devices;
pub mod engine;
pub mod harness;
pub mod netlist;
pub mod templates;
pub mod units;
