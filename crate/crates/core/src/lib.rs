//! Quantitative LTL model checking for POMDPs.

pub mod ltl;
pub mod model;
pub mod pipeline;
pub mod product;
pub mod sim;
pub mod solver;
