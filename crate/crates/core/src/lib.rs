pub mod baselines;
pub mod checker;
pub mod datagen;
pub mod engine;
pub mod error;
pub mod fixture;
pub mod index;
pub mod io;
pub mod metrics;
pub mod network;
pub mod oracle;
pub mod pivots;
pub mod prune;
pub mod workload;

pub use error::{DecodeError, Error, LoadError, Result};
