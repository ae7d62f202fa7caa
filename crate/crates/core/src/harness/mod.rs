//! Experiment plumbing: simulated and CSV data, error metrics, the optimizer
//! benchmark and config files for the command-line tool.

pub mod bench;
pub mod config;
pub mod data;
pub mod metrics;
pub mod report;
