//! Chain ingestion, file formats, fetching and reporting around
//! [`txconflict_core`].
//!
//! The pipeline stages talk to each other only through files:
//!
//! * [`fetch`] downloads raw RPC responses into a cache directory,
//! * [`ingest`] turns raw Ethereum / Solana blocks into [`BlockWorkload`]s,
//! * [`workload_json`] reads and writes the canonical workload format,
//! * [`report`] emits per-block metrics, speedups and period aggregates.
//!
//! [`BlockWorkload`]: txconflict_core::BlockWorkload

pub mod cli;
mod error;
pub mod fetch;
mod fsio;
pub mod ingest;
pub mod load;
pub mod report;
pub mod workload_json;

pub use error::Error;
