//! Library half of the `ptsa` command-line harness: instance file I/O,
//! multi-replica annealing runs, and serializable report types.
//!
//! The binary in `main.rs` is a thin argument-parsing shell over these
//! modules, so integration tests can drive the same code paths in-process.

pub mod instance;
pub mod report;
pub mod run;
