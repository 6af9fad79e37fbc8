pub mod backtest;
pub mod cli;
pub mod error;
pub mod extratrees;
pub mod ingest;
pub mod metrics;
pub mod rng;
pub mod synth;
pub mod timeseries;
pub mod transforms;

pub use error::{Error, Result};
