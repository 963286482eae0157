//! Scenario runner for the fractional least-gradient library: strict TOML
//! configs in, deterministic artifacts and PASS/FAIL assertion lines out.

pub mod config;
pub mod runner;
