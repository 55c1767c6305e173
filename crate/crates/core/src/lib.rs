// NaN-rejecting `!(x > 0.0)` guards and index loops over stage tables are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod controller;
pub mod error;
pub mod platoon;
pub mod profile;
pub mod sim;
