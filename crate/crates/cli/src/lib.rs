//! Command-line front end: dataset synthesis, feature dumps, per-patient
//! training and evaluation runs, and throughput benchmarks.

pub mod bench;
pub mod config;
pub mod dataset;
pub mod extract;
pub mod run;
