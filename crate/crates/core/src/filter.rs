use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::model::{AnalysisConfig, BlockWorkload, SuccessFilter, TransactionKind};

/// Metadata key listing the pre-filter preset index of every kept transaction.
pub const ORIGINAL_INDICES_METADATA_KEY: &str = "original_indices";

/// Drops the transactions excluded by `cfg` and renumbers the rest.
///
/// Vote transactions are removed unless `include_voting` is set, failed ones
/// under [`SuccessFilter::SuccessfulOnly`]. Relative order is preserved. When
/// anything is dropped, the original indices are recorded as a comma
/// separated list under [`ORIGINAL_INDICES_METADATA_KEY`].
pub fn filter_for_analysis(wl: &BlockWorkload, cfg: &AnalysisConfig) -> BlockWorkload {
    let keep = |kind: TransactionKind, success: bool| {
        (cfg.include_voting || kind != TransactionKind::SolanaVote)
            && (cfg.success_filter == SuccessFilter::All || success)
    };
    if wl.transactions().iter().all(|t| keep(t.kind, t.success)) {
        return wl.clone();
    }

    let mut original = String::new();
    let mut kept = Vec::new();
    for tx in wl.transactions().iter().filter(|t| keep(t.kind, t.success)) {
        if !kept.is_empty() {
            original.push(',');
        }
        let _ = write!(original, "{}", tx.preset_index);
        let mut tx = tx.clone();
        tx.preset_index = kept.len();
        kept.push(tx);
    }

    let mut metadata = wl.metadata().clone();
    metadata.insert(ORIGINAL_INDICES_METADATA_KEY.into(), original);
    BlockWorkload::new(wl.chain(), wl.block_number(), kept, metadata)
        .expect("stable filtering keeps the workload valid")
}
