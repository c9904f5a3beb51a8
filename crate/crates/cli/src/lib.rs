//! Experiment runner: configuration, persistence and the subcommands of the
//! `bulb` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod snapshot;
