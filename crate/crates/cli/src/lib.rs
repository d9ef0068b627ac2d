//! Command-line front end for the `levy-omt` experiments.
//!
//! Every invocation writes one JSON document with `"schema": 1`, the echoed
//! configuration (defaults resolved), the results, and a verdict.

pub mod args;
pub mod run;

pub use args::{parse_complex, Command, RunConfig};
pub use run::{execute, run, Outcome, RunError};
