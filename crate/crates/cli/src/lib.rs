//! Command-line experiment runner for `fracperim-core`.
//!
//! - [`config`]: TOML experiment files.
//! - [`runner`]: per-subcommand execution and exit statuses.
//! - [`output`]: `results.csv` / `results.json`.
//! - [`suite`]: the numbered acceptance criteria.

pub mod config;
pub mod output;
pub mod runner;
pub mod suite;
