//! Synthetic workloads.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::key::StateKey;
use crate::model::{AccessSet, BlockWorkload, Chain, Transaction, TransactionKind};
use crate::Error;

/// Zipf distribution over ranks `0..n`, sampled by inverse CDF over a
/// precomputed harmonic table. Exponent `0` is uniform.
#[derive(Clone, Debug)]
pub struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    pub fn new(n: usize, exponent: f64) -> Result<Self, Error> {
        if n == 0 {
            return Err(Error::parameter("n_keys", "must be at least 1"));
        }
        if !exponent.is_finite() || exponent < 0.0 {
            return Err(Error::parameter("skew", format!("{exponent} is not a finite non-negative exponent")));
        }
        let mut acc = 0.0;
        let cdf = (1..=n)
            .map(|rank| {
                acc += 1.0 / libm::pow(rank as f64, exponent);
                acc
            })
            .collect();
        Ok(Zipf { cdf })
    }

    /// Probability of `rank`.
    pub fn pmf(&self, rank: usize) -> f64 {
        let total = *self.cdf.last().expect("non-empty");
        let lower = if rank == 0 { 0.0 } else { self.cdf[rank - 1] };
        (self.cdf[rank] - lower) / total
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().expect("non-empty");
        let u = rng.random::<f64>() * total;
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub seed: u64,
    pub block_number: u64,
    pub n_txs: usize,
    pub n_keys: usize,
    /// Zipf exponent over key ranks.
    pub skew: f64,
    /// Probability each drawn key lands in the write set.
    pub write_prob: f64,
    /// Inclusive bounds on distinct keys per transaction.
    pub set_size: (usize, usize),
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            seed: 0,
            block_number: 0,
            n_txs: 100,
            n_keys: 1000,
            skew: 1.0,
            write_prob: 0.5,
            set_size: (1, 4),
        }
    }
}

/// Deterministic synthetic block.
///
/// Each transaction draws a set size uniformly from `set_size`, then that
/// many distinct Zipf-distributed keys `gen:k<rank>`; every key goes to the
/// write set with probability `write_prob` and to the read set otherwise, so
/// a generated transaction never reads and writes the same key.
pub fn generate(params: &GeneratorParams) -> Result<BlockWorkload, Error> {
    let zipf = Zipf::new(params.n_keys, params.skew)?;
    if !(0.0..=1.0).contains(&params.write_prob) {
        return Err(Error::parameter("write_prob", format!("{} is outside [0, 1]", params.write_prob)));
    }
    let (min, max) = params.set_size;
    if min > max {
        return Err(Error::parameter("set_size", format!("min {min} exceeds max {max}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut txs = Vec::with_capacity(params.n_txs);
    for i in 0..params.n_txs {
        let size = rng.random_range(min..=max).min(params.n_keys);
        let mut ranks = BTreeSet::new();
        let mut attempts = 0;
        while ranks.len() < size && attempts < 64 * size {
            ranks.insert(zipf.sample(&mut rng));
            attempts += 1;
        }
        // Heavy skew with large sets can starve rejection sampling.
        let mut fill = 0;
        while ranks.len() < size {
            ranks.insert(fill);
            fill += 1;
        }
        let mut access = AccessSet::default();
        for rank in ranks {
            let key = StateKey::generic(format!("k{rank}"));
            if rng.random::<f64>() < params.write_prob {
                access.writes.insert(key);
            } else {
                access.reads.insert(key);
            }
        }
        txs.push(Transaction {
            id: format!("tx{i}"),
            preset_index: i,
            kind: TransactionKind::Generic,
            success: true,
            access,
        });
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("generator".to_string(), "zipf".to_string());
    metadata.insert("seed".to_string(), params.seed.to_string());
    BlockWorkload::new(Chain::Generic, params.block_number, txs, metadata)
}

/// The eight-transaction illustration used as the golden fixture: five
/// transfers over accounts `X1..X10` and two balance reads of `X11`.
pub fn worked_example() -> BlockWorkload {
    const SETS: [(&[&str], &[&str]); 8] = [
        (&["X1"], &["X1", "X2"]),
        (&["X3"], &["X3", "X4"]),
        (&["X3"], &["X3", "X6"]),
        (&["X6"], &["X6", "X7"]),
        (&["X8"], &["X8", "X9"]),
        (&["X9"], &["X9", "X10"]),
        (&["X11"], &[]),
        (&["X11"], &[]),
    ];
    let txs = SETS
        .iter()
        .enumerate()
        .map(|(i, (reads, writes))| Transaction {
            id: format!("T{}", i + 1),
            preset_index: i,
            kind: TransactionKind::Generic,
            success: true,
            access: AccessSet::new(
                reads.iter().map(|k| StateKey::generic(*k)),
                writes.iter().map(|k| StateKey::generic(*k)),
            ),
        })
        .collect();
    BlockWorkload::new(Chain::Generic, 0, txs, BTreeMap::new()).expect("fixture is well formed")
}
