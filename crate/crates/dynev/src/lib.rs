//! File formats, run drivers, and the command line for `dynev-core`.

pub mod cli;
pub mod error;
pub mod jsonl;
pub mod mtx;
pub mod report;
pub mod run;
pub mod sweep;

pub use dynev_core as core;
pub use error::{DynevError, Result};
