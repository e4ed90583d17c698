//! Instance generation, randomized verification suites and JSON file I/O
//! behind the `opineq` command-line tool.

pub mod error;
pub mod files;
pub mod generate;
pub mod suites;

pub use error::{HarnessError, Result};
pub use suites::{replay_trial, run_suite, Suite, SuiteReport, TrialOutcome};
