//! Pipeline stages behind the `canopy` binary.
//!
//! Each submodule of [`commands`] implements one subcommand; `commands::run`
//! additionally exposes [`commands::run::execute`], the in-memory end-to-end
//! pipeline, so tests and callers can drive it without touching the CLI.

pub mod commands;
pub mod config;
pub mod errors;
pub mod features;
pub mod provenance;
