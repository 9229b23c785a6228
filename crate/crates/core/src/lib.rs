pub mod agents;
pub mod analytics;
pub mod error;
pub mod leakage;
pub mod llm;
pub mod market;
pub mod orchestrator;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
