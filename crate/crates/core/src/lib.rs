#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod disambiguate;
pub mod experiments;
pub mod extract;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod run;
pub mod sim;
pub mod solver;
