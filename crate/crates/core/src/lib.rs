// NaN-rejecting parameter checks are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod merit;
pub mod propagation;
pub mod protocol;
pub mod pulse;
pub mod qoct;
pub mod spin;
