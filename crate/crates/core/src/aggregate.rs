//! Aggregation of per-block metrics over a period of blocks.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::metrics::{percent, BlockMetrics, KindIndependence};
use crate::model::TransactionKind;
use crate::Error;

pub const DEFAULT_THRESHOLDS: [f64; 5] = [40.0, 50.0, 60.0, 70.0, 80.0];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AggregateMode {
    /// Percentages computed per block, then averaged.
    #[default]
    PerBlock,
    /// Percentages computed from totals summed over all blocks.
    Pooled,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl MetricStats {
    fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut count = 0usize;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            count += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        if count == 0 {
            return MetricStats::default();
        }
        MetricStats { mean: sum / count as f64, min, max }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdCount {
    pub threshold: f64,
    /// Blocks whose independent percentage is strictly above `threshold`.
    pub blocks: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KindAggregate {
    /// Blocks containing at least one transaction of this kind.
    pub blocks: usize,
    pub mean_analyzed: f64,
    pub independent_pct: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodAggregate {
    pub label: String,
    pub mode: AggregateMode,
    pub blocks: usize,
    pub first_block: u64,
    pub last_block: u64,
    pub n_total: MetricStats,
    pub n_analyzed: MetricStats,
    pub independent_count: MetricStats,
    pub independent_pct: MetricStats,
    pub longest_chain_len: MetricStats,
    pub longest_chain_pct: MetricStats,
    pub family_count: MetricStats,
    pub densest_family_size: MetricStats,
    pub total_conflicts: MetricStats,
    pub write_write_conflicts: MetricStats,
    /// Write-write share of total conflicts, over blocks with any conflict.
    pub write_write_share_pct: MetricStats,
    pub success_count: MetricStats,
    pub thresholds: Vec<ThresholdCount>,
    pub per_kind: BTreeMap<TransactionKind, KindAggregate>,
}

/// Count of blocks whose independent percentage is strictly greater than
/// each threshold. Thresholds must be strictly ascending.
pub fn threshold_histogram(metrics: &[BlockMetrics], thresholds: &[f64]) -> Result<Vec<ThresholdCount>, Error> {
    if thresholds.iter().any(|t| !t.is_finite()) {
        return Err(Error::parameter("thresholds", "must be finite"));
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::parameter("thresholds", "must be strictly ascending"));
    }
    Ok(thresholds
        .iter()
        .map(|&threshold| ThresholdCount {
            threshold,
            blocks: metrics.iter().filter(|m| m.independent_pct > threshold).count(),
        })
        .collect())
}

fn canonical_order(a: &BlockMetrics, b: &BlockMetrics) -> core::cmp::Ordering {
    let key = |m: &BlockMetrics| {
        (
            m.block_number,
            m.n_total,
            m.n_analyzed,
            m.independent_count,
            m.longest_chain_len,
            m.family_count,
            m.densest_family_size,
            m.total_conflicts,
            m.write_write_conflicts,
            m.success_count,
        )
    };
    key(a)
        .cmp(&key(b))
        .then_with(|| a.per_kind.iter().cmp(b.per_kind.iter()))
        .then_with(|| a.independent_pct.total_cmp(&b.independent_pct))
        .then_with(|| a.longest_chain_pct.total_cmp(&b.longest_chain_pct))
}

/// Summary of `metrics` under `label`. The result does not depend on the
/// order of `metrics`.
pub fn aggregate(
    metrics: &[BlockMetrics],
    label: &str,
    thresholds: &[f64],
    mode: AggregateMode,
) -> Result<PeriodAggregate, Error> {
    if metrics.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    let thresholds = threshold_histogram(metrics, thresholds)?;
    let mut sorted: Vec<&BlockMetrics> = metrics.iter().collect();
    sorted.sort_by(|a, b| canonical_order(a, b));

    let stat = |f: fn(&BlockMetrics) -> f64| MetricStats::of(sorted.iter().map(|m| f(m)));
    let sum = |f: fn(&BlockMetrics) -> usize| sorted.iter().map(|m| f(m)).sum::<usize>();
    let ww_share = |m: &BlockMetrics| percent(m.write_write_conflicts, m.total_conflicts);

    let mut independent_pct = stat(|m| m.independent_pct);
    let mut longest_chain_pct = stat(|m| m.longest_chain_pct);
    let mut write_write_share_pct =
        MetricStats::of(sorted.iter().filter(|m| m.total_conflicts > 0).map(|m| ww_share(m)));
    if mode == AggregateMode::Pooled {
        let analyzed = sum(|m| m.n_analyzed);
        independent_pct.mean = percent(sum(|m| m.independent_count), analyzed);
        longest_chain_pct.mean = percent(sum(|m| m.longest_chain_len), analyzed);
        write_write_share_pct.mean = percent(sum(|m| m.write_write_conflicts), sum(|m| m.total_conflicts));
    }

    let mut kinds: BTreeMap<TransactionKind, Vec<KindIndependence>> = BTreeMap::new();
    for m in &sorted {
        for (kind, k) in &m.per_kind {
            if k.analyzed > 0 {
                kinds.entry(*kind).or_default().push(*k);
            }
        }
    }
    let per_kind = kinds
        .into_iter()
        .map(|(kind, rows)| {
            let analyzed: usize = rows.iter().map(|k| k.analyzed).sum();
            let independent_pct = match mode {
                AggregateMode::PerBlock => {
                    MetricStats::of(rows.iter().map(|k| percent(k.independent, k.analyzed))).mean
                }
                AggregateMode::Pooled => percent(rows.iter().map(|k| k.independent).sum(), analyzed),
            };
            let agg = KindAggregate {
                blocks: rows.len(),
                mean_analyzed: analyzed as f64 / rows.len() as f64,
                independent_pct,
            };
            (kind, agg)
        })
        .collect();

    Ok(PeriodAggregate {
        label: label.into(),
        mode,
        blocks: sorted.len(),
        first_block: sorted.iter().map(|m| m.block_number).min().unwrap_or(0),
        last_block: sorted.iter().map(|m| m.block_number).max().unwrap_or(0),
        n_total: stat(|m| m.n_total as f64),
        n_analyzed: stat(|m| m.n_analyzed as f64),
        independent_count: stat(|m| m.independent_count as f64),
        independent_pct,
        longest_chain_len: stat(|m| m.longest_chain_len as f64),
        longest_chain_pct,
        family_count: stat(|m| m.family_count as f64),
        densest_family_size: stat(|m| m.densest_family_size as f64),
        total_conflicts: stat(|m| m.total_conflicts as f64),
        write_write_conflicts: stat(|m| m.write_write_conflicts as f64),
        write_write_share_pct,
        success_count: stat(|m| m.success_count as f64),
        thresholds,
        per_kind,
    })
}
