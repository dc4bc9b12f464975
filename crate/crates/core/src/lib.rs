// NaN must fail the parameter guards, so `!(x > 0.0)` is intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complex;
pub mod config;
pub mod corpus;
pub mod error;
pub mod geometry;
pub mod json;
pub mod leaf;
mod lp;
pub mod mac;
pub mod rational;
pub mod suite;
pub mod verify;
