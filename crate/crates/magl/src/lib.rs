//! File formats, data ingestion, the benchmark harness and the `magl`
//! command line around [`magl_core`].

pub mod cli;
pub mod config;
pub mod eig;
pub mod error;
pub mod format;
pub mod harness;
pub mod ingest;
pub mod report;

pub use config::{ConfigFile, ExperimentConfig, SelectionMode};
pub use eig::FaerEigensolver;
pub use error::{MaglError, Result};
pub use ingest::{ingest_csv, TimeSeriesTable};
pub use magl_core;
