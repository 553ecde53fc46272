//! Pairwise conflicts and the per-block conflict graph.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::key::StateKey;
use crate::model::{effective_access, AccessSet, AnalysisConfig, BlockWorkload};

/// How two accesses to the same key collide, named earlier-side first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ConflictType {
    /// Earlier transaction reads, later one writes.
    ReadWrite,
    /// Earlier transaction writes, later one reads.
    WriteRead,
    WriteWrite,
}

impl ConflictType {
    /// The same collision seen from the other transaction.
    pub fn swapped(self) -> Self {
        match self {
            ConflictType::ReadWrite => ConflictType::WriteRead,
            ConflictType::WriteRead => ConflictType::ReadWrite,
            ConflictType::WriteWrite => ConflictType::WriteWrite,
        }
    }
}

/// Every `(state, type)` witness of a conflict between `earlier` and `later`.
///
/// * `WriteWrite` for keys both transactions write,
/// * `WriteRead` for keys the earlier one writes and the later one reads,
/// * `ReadWrite` for keys the earlier one only reads and the later one writes.
///
/// A key the earlier transaction both reads and writes is ordered by its
/// write, so it produces no `ReadWrite` witness. Read-read is never a
/// conflict. Witnesses come back sorted by key, then type; an empty result
/// means the two transactions are independent.
pub fn conflict(earlier: &AccessSet, later: &AccessSet) -> Vec<(StateKey, ConflictType)> {
    let mut out = Vec::new();
    let keys = earlier.accessed();
    for key in keys {
        let (er, ew) = (earlier.reads.contains(key), earlier.writes.contains(key));
        let (lr, lw) = (later.reads.contains(key), later.writes.contains(key));
        push_witnesses(&mut out, key, (er, ew), (lr, lw));
    }
    out
}

fn push_witnesses(
    out: &mut Vec<(StateKey, ConflictType)>,
    key: &StateKey,
    (er, ew): (bool, bool),
    (lr, lw): (bool, bool),
) {
    if er && !ew && lw {
        out.push((key.clone(), ConflictType::ReadWrite));
    }
    if ew && lr {
        out.push((key.clone(), ConflictType::WriteRead));
    }
    if ew && lw {
        out.push((key.clone(), ConflictType::WriteWrite));
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictEdge {
    pub earlier: usize,
    pub later: usize,
    /// Non-empty, sorted, no duplicates.
    pub labels: Vec<(StateKey, ConflictType)>,
}

impl ConflictEdge {
    pub fn write_write_count(&self) -> usize {
        self.labels.iter().filter(|(_, t)| *t == ConflictType::WriteWrite).count()
    }
}

/// Conflict graph of one block.
///
/// Vertices are preset indices `0..n`. Edges are stored once, oriented from
/// the earlier to the later transaction, so the directed view is acyclic and
/// preset order is a topological order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictGraph {
    n: usize,
    edges: Vec<ConflictEdge>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
}

impl ConflictGraph {
    /// Builds the graph over already-effective access sets, one per
    /// transaction in preset order.
    pub fn from_access(access: &[AccessSet]) -> Self {
        let n = access.len();

        // key -> [(tx, reads, writes)] in preset order
        let mut by_key: BTreeMap<&StateKey, Vec<(usize, bool, bool)>> = BTreeMap::new();
        for (i, set) in access.iter().enumerate() {
            for key in &set.writes {
                by_key.entry(key).or_default().push((i, set.reads.contains(key), true));
            }
            for key in set.reads.iter().filter(|k| !set.writes.contains(*k)) {
                by_key.entry(key).or_default().push((i, true, false));
            }
        }

        let mut labels: BTreeMap<(usize, usize), Vec<(StateKey, ConflictType)>> = BTreeMap::new();
        let mut scratch = Vec::new();
        for (key, accessors) in &by_key {
            for (x, &(i, ir, iw)) in accessors.iter().enumerate() {
                for &(j, jr, jw) in &accessors[x + 1..] {
                    if !iw && !jw {
                        continue;
                    }
                    push_witnesses(&mut scratch, key, (ir, iw), (jr, jw));
                    if !scratch.is_empty() {
                        labels.entry((i, j)).or_default().append(&mut scratch);
                    }
                }
            }
        }

        let mut preds = alloc::vec![Vec::new(); n];
        let mut succs = alloc::vec![Vec::new(); n];
        let edges = labels
            .into_iter()
            .map(|((earlier, later), labels)| {
                succs[earlier].push(later);
                preds[later].push(earlier);
                ConflictEdge { earlier, later, labels }
            })
            .collect();
        for p in &mut preds {
            p.sort_unstable();
        }
        ConflictGraph { n, edges, preds, succs }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Edges sorted by `(earlier, later)`.
    pub fn edges(&self) -> &[ConflictEdge] {
        &self.edges
    }

    pub fn edge(&self, earlier: usize, later: usize) -> Option<&ConflictEdge> {
        self.edges.binary_search_by(|e| (e.earlier, e.later).cmp(&(earlier, later))).ok().map(|i| &self.edges[i])
    }

    /// Earlier transactions `v` conflicts with, ascending.
    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.preds[v]
    }

    /// Later transactions `v` conflicts with, ascending.
    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succs[v]
    }

    /// Undirected neighbourhood of `v`.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.preds[v].iter().chain(self.succs[v].iter()).copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.preds[v].len() + self.succs[v].len()
    }
}

/// Effective access sets for every transaction of `wl` under `cfg`.
pub fn effective_accesses(wl: &BlockWorkload, cfg: &AnalysisConfig) -> Vec<AccessSet> {
    let coinbase = if cfg.coinbase_filter {
        let cb = wl.coinbase();
        if cb.is_none() {
            log::warn!("block {}: coinbase filter requested but no coinbase recorded", wl.block_number());
        }
        cb
    } else {
        None
    };
    wl.transactions().iter().map(|tx| effective_access(tx, cfg, coinbase.as_ref())).collect()
}

/// Conflict graph of an already filtered workload.
pub fn build_graph(wl: &BlockWorkload, cfg: &AnalysisConfig) -> ConflictGraph {
    ConflictGraph::from_access(&effective_accesses(wl, cfg))
}
