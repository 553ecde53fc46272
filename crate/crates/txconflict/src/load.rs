//! Input discovery: turns `--in` paths into workloads.
//!
//! Accepted inputs are canonical workload JSON, raw Ethereum pairs
//! (`eth-<n>.block.json` next to `eth-<n>.trace.json`) and raw Solana blocks
//! (`sol-<slot>.block.json`). Directories expand to their `.json` files.
//! Skip markers, trace halves and the fetch manifest are not inputs.

use std::path::{Path, PathBuf};

use txconflict_core::BlockWorkload;

use crate::ingest::{parse_ethereum, parse_solana, EthereumRawBlock, SolanaRawBlock};
use crate::{fsio, workload_json, Error};

/// Expands directories (one level, sorted) and drops non-inputs.
pub fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Error> {
    let mut out = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| Error::io(path, e))?
                .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(path, err)))
                .collect::<Result<_, _>>()?;
            entries.sort();
            out.extend(entries.into_iter().filter(|p| p.is_file() && is_input_name(p)));
        } else {
            out.push(path.clone());
        }
    }
    Ok(out)
}

fn file_name(path: &Path) -> &str {
    path.file_name().and_then(|n| n.to_str()).unwrap_or("")
}

fn is_input_name(path: &Path) -> bool {
    let name = file_name(path);
    name.ends_with(".json") && !name.ends_with(".skipped.json") && !name.ends_with(".trace.json")
}

/// `eth-<n>.block.json` → `n`.
fn raw_number(name: &str, prefix: &str) -> Option<u64> {
    name.strip_prefix(prefix)?.strip_suffix(".block.json")?.parse().ok()
}

/// Parses one input file of any accepted kind.
pub fn load_workload(path: &Path) -> Result<BlockWorkload, Error> {
    let name = file_name(path);
    let text = fsio::read_to_string(path)?;
    if raw_number(name, "eth-").is_some() {
        return load_ethereum(path, &text);
    }
    if let Some(slot) = raw_number(name, "sol-") {
        return parse_solana(&SolanaRawBlock::from_json(slot, &text)?);
    }

    let doc: serde_json::Value = serde_json::from_str(&text)?;
    if workload_json::is_canonical(&doc) {
        return workload_json::from_json(&text);
    }
    if doc.get("blockhash").is_some() && doc.get("parentSlot").is_some() {
        let parent = doc["parentSlot"].as_u64().ok_or_else(|| Error::structure("parentSlot is not an integer"))?;
        log::warn!("{}: slot not in file name, assuming parentSlot + 1 = {}", path.display(), parent + 1);
        return parse_solana(&SolanaRawBlock::from_json(parent + 1, &text)?);
    }
    if doc.get("miner").is_some() && doc.get("transactions").is_some() {
        return load_ethereum(path, &text);
    }
    Err(Error::structure("not a canonical workload or raw block"))
}

fn load_ethereum(path: &Path, block: &str) -> Result<BlockWorkload, Error> {
    let name = file_name(path);
    let trace_name = match name.strip_suffix(".block.json") {
        Some(stem) => format!("{stem}.trace.json"),
        None => format!("{}.trace.json", name.strip_suffix(".json").unwrap_or(name)),
    };
    let trace_path = path.with_file_name(trace_name);
    let trace = fsio::read_to_string(&trace_path)?;
    parse_ethereum(&EthereumRawBlock::from_json(block, &trace)?)
}
