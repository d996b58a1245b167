//! Experiment runner behind the `fockml` binary.

pub mod commands;
pub mod config;
pub mod report;
