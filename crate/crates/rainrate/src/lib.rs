//! Files, persistence and the command line around `rainrate-core`.

pub mod atomic;
pub mod cli;
pub mod commands;
pub mod error;
pub mod experiment;
pub mod featurize;
pub mod formats;
pub mod report;
