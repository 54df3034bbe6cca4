//! Command-line front end for the `pd3o` solvers: step-size validation, single runs and
//! parameter sweeps, with plot-ready CSV output.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod instance;
pub mod output;

pub use commands::{compare, execute, run, validate, Failure, Sweep};
pub use config::{ParseError, ProblemKind, RunConfig};
