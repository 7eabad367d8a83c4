//! Scenario engine, configuration and command layer for the pricing library.
//!
//! The binary (`endow`) exposes five subcommands: `simulate`, `strategy`, `value`,
//! `price` and `sensitivity`. Defaults reproduce the two-regime reference
//! experiment; every command is deterministic under a fixed seed and identical
//! across worker counts.

pub mod commands;
pub mod config;
pub mod engine;
pub mod output;
