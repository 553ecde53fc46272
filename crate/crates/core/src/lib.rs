//! Transaction conflict analysis for blockchain blocks.
//!
//! A block is modelled as an ordered list of transactions, each carrying the
//! set of state keys it reads and writes. From that the crate builds the
//! per-block conflict graph (edges always point from the earlier to the later
//! transaction in block order) and derives the parallelism metrics:
//! independent transactions, the longest conflict chain, conflict families,
//! the densest family, and total / write-write conflict counts. The
//! [`sched`] module replays the same graph as conflict-respecting parallel
//! schedules to bound the achievable speedup.
//!
//! The crate is `no_std` and only needs `alloc`. Parsing chain data, file
//! formats and the command line live in the `txconflict` companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod aggregate;
pub mod conflict;
mod error;
pub mod filter;
pub mod gen;
pub mod hotspot;
pub mod key;
pub mod metrics;
pub mod model;
pub mod sched;
mod union_find;

pub use aggregate::{aggregate, threshold_histogram, AggregateMode, MetricStats, PeriodAggregate};
pub use conflict::{build_graph, conflict, ConflictEdge, ConflictGraph, ConflictType};
pub use error::Error;
pub use filter::filter_for_analysis;
pub use key::StateKey;
pub use metrics::{analyze_block, BlockMetrics};
pub use model::{
    effective_access, AccessMode, AccessSet, AnalysisConfig, BlockWorkload, Chain, Coinbase, SuccessFilter,
    Transaction, TransactionKind,
};
pub use sched::{bounded_schedule, level_schedule, speedup_report, Schedule, Workers};

pub type Result<T, E = Error> = core::result::Result<T, E>;
