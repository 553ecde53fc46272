//! Canonical workload files.
//!
//! One block per UTF-8 JSON file, named `<chain>-<block_number>.json`:
//!
//! ```json
//! {
//!   "chain": "generic",
//!   "block_number": 0,
//!   "metadata": { "coinbase": "0x..." },
//!   "transactions": [
//!     { "id": "T1", "index": 0, "kind": "generic", "success": true,
//!       "reads": ["gen:X1"], "writes": ["gen:X1", "gen:X2"] }
//!   ]
//! }
//! ```
//!
//! State keys use their canonical encoding. Indices must be `0..n` in order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use txconflict_core::{AccessSet, BlockWorkload, Chain, StateKey, Transaction, TransactionKind};

use crate::{fsio, Error};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireWorkload {
    chain: Chain,
    block_number: u64,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
    transactions: Vec<WireTransaction>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireTransaction {
    id: String,
    index: usize,
    kind: TransactionKind,
    success: bool,
    reads: Vec<String>,
    writes: Vec<String>,
}

fn decode_keys(index: usize, keys: &[String]) -> Result<Vec<StateKey>, Error> {
    keys.iter().map(|k| StateKey::decode(k).map_err(|e| Error::tx(index, e.to_string()))).collect()
}

pub fn from_json(text: &str) -> Result<BlockWorkload, Error> {
    let wire: WireWorkload = serde_json::from_str(text)?;
    let transactions = wire
        .transactions
        .into_iter()
        .enumerate()
        .map(|(position, tx)| {
            Ok(Transaction {
                access: AccessSet::new(decode_keys(position, &tx.reads)?, decode_keys(position, &tx.writes)?),
                id: tx.id,
                preset_index: tx.index,
                kind: tx.kind,
                success: tx.success,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(BlockWorkload::new(wire.chain, wire.block_number, transactions, wire.metadata)?)
}

/// Pretty-printed canonical JSON with a trailing newline.
pub fn to_json(wl: &BlockWorkload) -> String {
    let wire = WireWorkload {
        chain: wl.chain(),
        block_number: wl.block_number(),
        metadata: wl.metadata().clone(),
        transactions: wl
            .transactions()
            .iter()
            .map(|tx| WireTransaction {
                id: tx.id.clone(),
                index: tx.preset_index,
                kind: tx.kind,
                success: tx.success,
                reads: tx.access.reads.iter().map(StateKey::encode).collect(),
                writes: tx.access.writes.iter().map(StateKey::encode).collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&wire).expect("workload serializes");
    text.push('\n');
    text
}

/// `<chain>-<block_number>.json`
pub fn file_name(wl: &BlockWorkload) -> String {
    format!("{}-{}.json", wl.chain(), wl.block_number())
}

/// Whether a parsed JSON document looks like a canonical workload rather
/// than a raw RPC response.
pub fn is_canonical(doc: &serde_json::Value) -> bool {
    doc.get("chain").is_some() && doc.get("block_number").is_some() && doc.get("transactions").is_some()
}

pub fn read(path: &Path) -> Result<BlockWorkload, Error> {
    from_json(&fsio::read_to_string(path)?)
}

pub fn write(path: &Path, wl: &BlockWorkload) -> Result<(), Error> {
    fsio::write_output(path, to_json(wl).as_bytes())
}

/// Writes `wl` into `dir` under its canonical file name.
pub fn write_into(dir: &Path, wl: &BlockWorkload) -> Result<PathBuf, Error> {
    let path = dir.join(file_name(wl));
    fsio::write_atomic(&path, to_json(wl).as_bytes())?;
    Ok(path)
}
