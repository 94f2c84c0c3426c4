pub mod ambiguity;
pub mod cli;
pub mod config;
pub mod counterexamples;
pub mod error;
pub mod function;
pub mod inequalities;
pub mod lattice_dp;
pub mod lln;
pub mod montecarlo;
pub mod oracle;
pub mod report;

pub use error::{Error, ErrorCode, Result};
