//! Generator corpus, configuration, reports and file formats for the CLI.

pub mod config;
pub mod corpus;
pub mod io;
pub mod report;

pub use config::{parse_fibers, Config};
pub use report::{run_analyze, run_dual, run_oracle, run_reconstruct, run_scaling, FrameReport, OracleReport};
