//! Benchmark harness and scoring engine for LLM-agent engineering workflows.

pub mod backend;
pub mod error;
pub mod genmetrics;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod oracle;
pub mod params;
pub mod prompt;
pub mod rng;
pub mod scoring;
pub mod trace;
pub mod validate;

pub use error::{Error, Result};
