//! Command-line front end for the fairness-aware selection pipeline.
//!
//! The binary wires five subcommands (`synth`, `run`, `sweep`, `ablate`,
//! `report`) over the library crate; everything here is also callable as a
//! library, which is how the acceptance suite drives it.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod plot;
pub mod report;

pub use commands::{cmd_ablate, cmd_report, cmd_run, cmd_sweep, cmd_synth, Format};
pub use config::{parse_synth_spec, DataSource, ExperimentConfig, KvDoc};
