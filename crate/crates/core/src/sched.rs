//! Conflict-respecting schedule simulation.
//!
//! Transactions have unit cost. A schedule is a sequence of rounds; a
//! transaction may run once every earlier transaction it conflicts with has
//! finished in a previous round, so the result is always serializable to
//! block order.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::conflict::ConflictGraph;
use crate::metrics::chain_levels;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(into = "String", try_from = "String"))]
pub enum Workers {
    Bounded(usize),
    Unbounded,
}

impl Workers {
    pub fn bounded(k: usize) -> Result<Self, Error> {
        if k == 0 {
            return Err(Error::parameter("workers", "must be at least 1"));
        }
        Ok(Workers::Bounded(k))
    }
}

impl PartialOrd for Workers {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Workers {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        use core::cmp::Ordering::*;
        match (self, other) {
            (Workers::Bounded(a), Workers::Bounded(b)) => a.cmp(b),
            (Workers::Bounded(_), Workers::Unbounded) => Less,
            (Workers::Unbounded, Workers::Bounded(_)) => Greater,
            (Workers::Unbounded, Workers::Unbounded) => Equal,
        }
    }
}

impl fmt::Display for Workers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Workers::Bounded(k) => write!(f, "{k}"),
            Workers::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for Workers {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "unbounded" | "∞" => Ok(Workers::Unbounded),
            other => {
                let k = other
                    .parse::<usize>()
                    .map_err(|_| Error::parameter("workers", alloc::format!("not a worker count: {other:?}")))?;
                Workers::bounded(k)
            }
        }
    }
}

impl From<Workers> for String {
    fn from(w: Workers) -> Self {
        w.to_string()
    }
}

impl TryFrom<String> for Workers {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    /// Preset indices executed in each round, ascending within a round.
    pub rounds: Vec<Vec<usize>>,
    pub workers: Workers,
    /// Number of unit-cost rounds.
    pub makespan: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScheduleViolation {
    #[error("transaction {0} is scheduled {1} times")]
    Multiplicity(usize, usize),
    #[error("transaction {0} is out of range")]
    OutOfRange(usize),
    #[error("round {round} runs {size} transactions with {workers} workers")]
    Oversubscribed { round: usize, size: usize, workers: usize },
    #[error("transaction {later} runs no later than conflicting earlier transaction {earlier}")]
    Order { earlier: usize, later: usize },
    #[error("makespan {makespan} does not match {rounds} rounds")]
    Makespan { makespan: usize, rounds: usize },
}

impl Schedule {
    /// Replays the schedule against `g`, checking that every transaction runs
    /// exactly once, rounds respect the worker bound, and each conflicting
    /// pair runs in preset order in distinct rounds.
    pub fn validate(&self, g: &ConflictGraph) -> Result<(), ScheduleViolation> {
        let n = g.vertex_count();
        let mut round_of = alloc::vec![None; n];
        let mut seen = alloc::vec![0usize; n];
        for (r, round) in self.rounds.iter().enumerate() {
            if let Workers::Bounded(k) = self.workers {
                if round.len() > k {
                    return Err(ScheduleViolation::Oversubscribed { round: r, size: round.len(), workers: k });
                }
            }
            for &v in round {
                if v >= n {
                    return Err(ScheduleViolation::OutOfRange(v));
                }
                seen[v] += 1;
                round_of[v] = Some(r);
            }
        }
        if let Some((v, &times)) = seen.iter().enumerate().find(|(_, &t)| t != 1) {
            return Err(ScheduleViolation::Multiplicity(v, times));
        }
        for e in g.edges() {
            if round_of[e.earlier] >= round_of[e.later] {
                return Err(ScheduleViolation::Order { earlier: e.earlier, later: e.later });
            }
        }
        if self.makespan != self.rounds.len() {
            return Err(ScheduleViolation::Makespan { makespan: self.makespan, rounds: self.rounds.len() });
        }
        Ok(())
    }
}

/// Unbounded-worker schedule: each transaction runs in the round given by
/// the longest conflict chain ending at it. The round count equals the
/// longest chain length.
pub fn level_schedule(g: &ConflictGraph) -> Schedule {
    let level = chain_levels(g);
    let depth = level.iter().copied().max().unwrap_or(0);
    let mut rounds = alloc::vec![Vec::new(); depth];
    for (v, l) in level.into_iter().enumerate() {
        rounds[l - 1].push(v);
    }
    Schedule { makespan: rounds.len(), rounds, workers: Workers::Unbounded }
}

/// Greedy list schedule on `k` workers: each step runs up to `k` ready
/// transactions, lowest preset index first.
pub fn bounded_schedule(g: &ConflictGraph, k: usize) -> Result<Schedule, Error> {
    let workers = Workers::bounded(k)?;
    let n = g.vertex_count();
    let mut waiting: Vec<usize> = (0..n).map(|v| g.predecessors(v).len()).collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| waiting[v] == 0).collect();
    let mut rounds = Vec::new();
    while !ready.is_empty() {
        let round: Vec<usize> = (0..k).map_while(|_| ready.pop_first()).collect();
        for &v in &round {
            for &s in g.successors(v) {
                waiting[s] -= 1;
                if waiting[s] == 0 {
                    ready.insert(s);
                }
            }
        }
        rounds.push(round);
    }
    Ok(Schedule { makespan: rounds.len(), rounds, workers })
}

pub fn schedule(g: &ConflictGraph, workers: Workers) -> Result<Schedule, Error> {
    match workers {
        Workers::Unbounded => Ok(level_schedule(g)),
        Workers::Bounded(k) => bounded_schedule(g, k),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpeedupPoint {
    pub workers: Workers,
    pub makespan: usize,
    /// Transactions over makespan; `1.0` for an empty block.
    pub speedup: f64,
}

/// Makespan and speedup for each worker count, ascending, always including
/// [`Workers::Unbounded`].
pub fn speedup_report(g: &ConflictGraph, workers: &[Workers]) -> Result<Vec<SpeedupPoint>, Error> {
    let mut counts: Vec<Workers> = workers.to_vec();
    counts.push(Workers::Unbounded);
    counts.sort();
    counts.dedup();
    let n = g.vertex_count();
    counts
        .into_iter()
        .map(|w| {
            let makespan = schedule(g, w)?.makespan;
            let speedup = if makespan == 0 { 1.0 } else { n as f64 / makespan as f64 };
            Ok(SpeedupPoint { workers: w, makespan, speedup })
        })
        .collect()
}
