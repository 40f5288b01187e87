//! Batch front end: CSV panels and a TOML run configuration in, estimation
//! tables, residual samples and plot data out.

pub mod config;
pub mod format;
pub mod ingest;
pub mod output;
pub mod pipeline;
