//! Parallelism metrics over a conflict graph.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::conflict::{build_graph, ConflictGraph, ConflictType};
use crate::filter::filter_for_analysis;
use crate::model::{AnalysisConfig, BlockWorkload, TransactionKind};
use crate::union_find::UnionFind;
use crate::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KindIndependence {
    pub analyzed: usize,
    pub independent: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Independence {
    pub count: usize,
    /// `0.0` for an empty block, with `empty` set.
    pub pct: f64,
    pub empty: bool,
    pub per_kind: BTreeMap<TransactionKind, KindIndependence>,
}

/// Transactions that conflict with no other transaction in the block.
///
/// `kinds[v]` is the kind of vertex `v`; the per-kind split counts each kind
/// against its own population.
pub fn independent_transactions(g: &ConflictGraph, kinds: &[TransactionKind]) -> Independence {
    let n = g.vertex_count();
    debug_assert_eq!(kinds.len(), n);
    let mut per_kind: BTreeMap<TransactionKind, KindIndependence> = BTreeMap::new();
    let mut count = 0;
    for (v, kind) in kinds.iter().enumerate() {
        let entry = per_kind.entry(*kind).or_default();
        entry.analyzed += 1;
        if g.degree(v) == 0 {
            entry.independent += 1;
            count += 1;
        }
    }
    Independence { count, pct: percent(count, n), empty: n == 0, per_kind }
}

/// `L(v)`: vertices on the longest conflict chain ending at `v`.
///
/// Preset order is topological, so one forward pass suffices.
pub fn chain_levels(g: &ConflictGraph) -> Vec<usize> {
    let mut level = alloc::vec![0usize; g.vertex_count()];
    for v in 0..g.vertex_count() {
        level[v] = 1 + g.predecessors(v).iter().map(|&p| level[p]).max().unwrap_or(0);
    }
    level
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictChain {
    /// Counted in transactions.
    pub len: usize,
    /// One longest chain, in preset order.
    pub path: Vec<usize>,
}

/// Longest path in the directed conflict graph.
///
/// Among equally long chains the witness ends at the lowest index and
/// follows the lowest-index predecessor at each step.
pub fn longest_conflict_chain(g: &ConflictGraph) -> ConflictChain {
    let level = chain_levels(g);
    let Some(len) = level.iter().copied().max() else {
        return ConflictChain { len: 0, path: Vec::new() };
    };
    let mut v = level.iter().position(|&l| l == len).expect("max exists");
    let mut path = alloc::vec![v];
    while level[v] > 1 {
        v = *g
            .predecessors(v)
            .iter()
            .find(|&&p| level[p] + 1 == level[v])
            .expect("a level above 1 has a predecessor one level down");
        path.push(v);
    }
    path.reverse();
    ConflictChain { len, path }
}

/// Connected components of the undirected conflict graph.
///
/// Singletons are included. Each family is sorted ascending; families are
/// ordered by size descending, then smallest member ascending.
pub fn conflict_families(g: &ConflictGraph) -> Vec<Vec<usize>> {
    let n = g.vertex_count();
    let mut uf = UnionFind::new(n);
    for e in g.edges() {
        uf.union(e.earlier, e.later);
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        by_root.entry(uf.find(v)).or_default().push(v);
    }
    let mut families: Vec<Vec<usize>> = by_root.into_values().collect();
    families.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    families
}

/// The largest family; ties go to the family with the smallest member.
pub fn densest_family(families: &[Vec<usize>]) -> Result<(usize, &[usize]), Error> {
    families
        .iter()
        .filter(|f| !f.is_empty())
        .min_by(|a, b| b.len().cmp(&a.len()).then(a.iter().min().cmp(&b.iter().min())))
        .map(|f| (f.len(), f.as_slice()))
        .ok_or(Error::NoFamilies)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConflictCounts {
    pub total: usize,
    pub write_write: usize,
}

/// Total conflicts count each `(pair, state, type)` witness once.
pub fn count_conflicts(g: &ConflictGraph) -> ConflictCounts {
    g.edges().iter().fold(ConflictCounts::default(), |acc, e| ConflictCounts {
        total: acc.total + e.labels.len(),
        write_write: acc.write_write + e.labels.iter().filter(|(_, t)| *t == ConflictType::WriteWrite).count(),
    })
}

/// Full metric record for one block.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockMetrics {
    pub block_number: u64,
    pub n_total: usize,
    pub n_analyzed: usize,
    pub independent_count: usize,
    pub independent_pct: f64,
    pub longest_chain_len: usize,
    pub longest_chain_pct: f64,
    pub family_count: usize,
    pub densest_family_size: usize,
    pub total_conflicts: usize,
    pub write_write_conflicts: usize,
    pub per_kind: BTreeMap<TransactionKind, KindIndependence>,
    pub success_count: usize,
    /// Set when no transaction survived filtering; percentages are then 0.
    pub empty: bool,
    /// Transaction ids along one longest conflict chain.
    #[cfg_attr(feature = "serde", serde(default))]
    pub longest_chain: Vec<String>,
}

/// Filters `wl`, builds its conflict graph and computes every metric.
/// Deterministic for identical inputs.
pub fn analyze_block(wl: &BlockWorkload, cfg: &AnalysisConfig) -> BlockMetrics {
    let analyzed = filter_for_analysis(wl, cfg);
    let graph = build_graph(&analyzed, cfg);
    metrics_for_graph(wl.len(), &analyzed, &graph)
}

/// Metrics for `analyzed` given its precomputed conflict graph.
pub fn metrics_for_graph(n_total: usize, analyzed: &BlockWorkload, graph: &ConflictGraph) -> BlockMetrics {
    let txs = analyzed.transactions();
    let n = txs.len();
    let kinds: Vec<TransactionKind> = txs.iter().map(|t| t.kind).collect();

    let independence = independent_transactions(graph, &kinds);
    let chain = longest_conflict_chain(graph);
    let families = conflict_families(graph);
    let densest = densest_family(&families).map(|(size, _)| size).unwrap_or(0);
    let counts = count_conflicts(graph);

    BlockMetrics {
        block_number: analyzed.block_number(),
        n_total,
        n_analyzed: n,
        independent_count: independence.count,
        independent_pct: independence.pct,
        longest_chain_len: chain.len,
        longest_chain_pct: percent(chain.len, n),
        family_count: families.len(),
        densest_family_size: densest,
        total_conflicts: counts.total,
        write_write_conflicts: counts.write_write,
        per_kind: independence.per_kind,
        success_count: txs.iter().filter(|t| t.success).count(),
        empty: independence.empty,
        longest_chain: chain.path.iter().map(|&v| txs[v].id.clone()).collect(),
    }
}

pub(crate) fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}
