//! Config-driven front end for the decoherence engines: parses run
//! descriptions, orchestrates the closed-form and grid engines, and writes
//! plot-ready CSV plus JSON reports.

pub mod config;
pub mod run;
