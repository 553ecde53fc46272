use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::key::StateKey;
use crate::model::{AccessSet, BlockWorkload};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hotspot {
    pub key: StateKey,
    /// Transactions reading the key.
    pub reads: usize,
    /// Transactions writing the key.
    pub writes: usize,
}

impl Hotspot {
    pub fn total(&self) -> usize {
        self.reads + self.writes
    }
}

/// The `top` most accessed keys of a block, by total accesses descending and
/// then key order.
pub fn access_hotspots(wl: &BlockWorkload, top: usize) -> Vec<Hotspot> {
    hotspots(wl.transactions().iter().map(|t| &t.access), top)
}

/// [`access_hotspots`] over arbitrary access sets, e.g. effective ones.
pub fn hotspots<'a>(accesses: impl IntoIterator<Item = &'a AccessSet>, top: usize) -> Vec<Hotspot> {
    let mut counts: BTreeMap<&StateKey, (usize, usize)> = BTreeMap::new();
    for access in accesses {
        for k in &access.reads {
            counts.entry(k).or_default().0 += 1;
        }
        for k in &access.writes {
            counts.entry(k).or_default().1 += 1;
        }
    }
    let mut spots: Vec<Hotspot> =
        counts.into_iter().map(|(key, (reads, writes))| Hotspot { key: key.clone(), reads, writes }).collect();
    spots.sort_by(|a, b| b.total().cmp(&a.total()).then_with(|| a.key.cmp(&b.key)));
    spots.truncate(top);
    spots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::worked_example;

    #[test]
    fn worked_example_hotspots() {
        let spots = access_hotspots(&worked_example(), 3);
        let keys: Vec<_> = spots.iter().map(|s| (s.key.encode(), s.reads, s.writes)).collect();
        assert_eq!(keys, [("gen:X3".into(), 2, 2), ("gen:X6".into(), 1, 2), ("gen:X9".into(), 1, 2),]);
    }
}
