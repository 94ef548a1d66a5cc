#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod dual;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod reduction;
pub mod simulator;
pub mod structures;
