#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod config;
pub mod expr;
pub mod grid;
pub mod invexity;
pub mod optimize;
pub mod report;
pub mod sampling;
pub mod theorems;
