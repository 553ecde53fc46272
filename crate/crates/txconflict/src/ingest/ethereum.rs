//! Ethereum blocks with prestate traces.
//!
//! Input is the `eth_getBlockByNumber` result (with full transactions) plus
//! the `debug_traceBlockByNumber` result under the prestate tracer, one entry
//! per transaction. The tracer reports which accounts and storage slots a
//! transaction touched but not whether it read or wrote them, so every key
//! lands in the write set.
//!
//! Key assignment per touched address:
//! * no code and no storage: `EoaAccount`,
//! * otherwise one `ContractStorage` key per touched slot, plus the
//!   `ContractAccount` key only when the transaction moves value into the
//!   contract or creates it.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use sha3::{Digest, Keccak256};
use txconflict_core::key::{Address, Slot};
use txconflict_core::{AccessSet, BlockWorkload, Chain, StateKey, Transaction, TransactionKind};

use super::constants::{ERC20_TRANSFER_FROM_SELECTOR, ERC20_TRANSFER_SELECTOR};
use super::parse_quantity;
use crate::Error;

#[derive(Debug, Clone, Deserialize)]
pub struct RpcBlock {
    pub number: String,
    #[serde(default)]
    pub hash: Option<String>,
    #[serde(default)]
    pub miner: Option<String>,
    #[serde(default)]
    pub timestamp: Option<String>,
    pub transactions: Vec<RpcTransaction>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RpcTransaction {
    pub hash: String,
    pub from: String,
    #[serde(default)]
    pub to: Option<String>,
    #[serde(default)]
    pub input: String,
    #[serde(default)]
    pub value: Option<String>,
    #[serde(default)]
    pub nonce: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct AccountState {
    #[serde(default)]
    pub code: Option<String>,
    #[serde(default)]
    pub storage: BTreeMap<String, serde_json::Value>,
}

impl AccountState {
    fn has_code(&self) -> bool {
        matches!(self.code.as_deref(), Some(c) if !c.is_empty() && c != "0x")
    }
}

pub type Prestate = BTreeMap<String, AccountState>;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TraceEntry {
    Wrapped(WrappedTrace),
    Bare(Prestate),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WrappedTrace {
    #[serde(default, rename = "txHash")]
    pub tx_hash: Option<String>,
    #[serde(default)]
    pub result: Option<Prestate>,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct EthereumRawBlock {
    pub block: RpcBlock,
    pub trace: Vec<TraceEntry>,
}

impl EthereumRawBlock {
    /// From the two cached RPC results.
    pub fn from_json(block: &str, trace: &str) -> Result<Self, Error> {
        let block: RpcBlock = serde_json::from_str(block).map_err(|e| Error::structure(format!("block JSON: {e}")))?;
        let trace: Vec<TraceEntry> =
            serde_json::from_str(trace).map_err(|e| Error::structure(format!("trace JSON: {e}")))?;
        Ok(EthereumRawBlock { block, trace })
    }
}

/// Empty calldata is a plain transfer, an ERC-20 `transfer`/`transferFrom`
/// selector is a token transfer, anything else (including contract
/// creation) is a contract call.
pub fn classify_ethereum_kind(tx: &RpcTransaction) -> TransactionKind {
    if tx.to.is_none() {
        return TransactionKind::ContractCall;
    }
    let data = tx.input.strip_prefix("0x").unwrap_or(&tx.input);
    if data.is_empty() {
        return TransactionKind::EthTransfer;
    }
    let selector = data.get(..8).and_then(|s| u32::from_str_radix(s, 16).ok()).map(u32::to_be_bytes);
    match selector {
        Some(s) if s == ERC20_TRANSFER_SELECTOR || s == ERC20_TRANSFER_FROM_SELECTOR => TransactionKind::Erc20Transfer,
        _ => TransactionKind::ContractCall,
    }
}

fn is_nonzero_quantity(v: Option<&str>) -> bool {
    v.map(|s| s.strip_prefix("0x").unwrap_or(s).trim_start_matches('0')).is_some_and(|digits| !digits.is_empty())
}

/// Address of a contract created by `sender` at `nonce`:
/// the last 20 bytes of `keccak256(rlp([sender, nonce]))`.
pub fn create_address(sender: &Address, nonce: u64) -> Address {
    let nonce_bytes = nonce.to_be_bytes();
    let trimmed = &nonce_bytes[nonce_bytes.iter().position(|&b| b != 0).unwrap_or(8)..];
    let mut nonce_rlp = Vec::with_capacity(9);
    match trimmed {
        [] => nonce_rlp.push(0x80),
        [b] if *b < 0x80 => nonce_rlp.push(*b),
        bytes => {
            nonce_rlp.push(0x80 + bytes.len() as u8);
            nonce_rlp.extend_from_slice(bytes);
        }
    }
    let mut rlp = Vec::with_capacity(32);
    rlp.push(0xc0 + (21 + nonce_rlp.len()) as u8);
    rlp.push(0x94);
    rlp.extend_from_slice(&sender.0);
    rlp.extend_from_slice(&nonce_rlp);
    let hash = Keccak256::digest(&rlp);
    let mut out = [0u8; 20];
    out.copy_from_slice(&hash[12..]);
    Address(out)
}

fn parse_slot(raw: &str) -> Option<Slot> {
    let digits = raw.strip_prefix("0x").or_else(|| raw.strip_prefix("0X"))?;
    if digits.len() > 64 {
        return None;
    }
    format!("0x{digits:0>64}").parse().ok()
}

fn transaction_access(index: usize, tx: &RpcTransaction, prestate: &Prestate) -> Result<AccessSet, Error> {
    let parse_addr =
        |s: &str, what: &str| s.parse::<Address>().map_err(|e| Error::tx(index, format!("{what} {s:?}: {e}")));
    let to = tx.to.as_deref().map(|t| parse_addr(t, "to")).transpose()?;
    let value_in = is_nonzero_quantity(tx.value.as_deref());
    let created = match (&to, tx.nonce.as_deref()) {
        (None, Some(nonce)) => {
            let from = parse_addr(&tx.from, "from")?;
            let nonce = parse_quantity(nonce).ok_or_else(|| Error::tx(index, format!("nonce {nonce:?}")))?;
            Some(create_address(&from, nonce))
        }
        _ => None,
    };

    let mut writes = BTreeSet::new();
    for (raw_addr, state) in prestate {
        let addr = parse_addr(raw_addr, "traced address")?;
        let is_created = created == Some(addr);
        if !state.has_code() && state.storage.is_empty() && !is_created {
            writes.insert(StateKey::EoaAccount(addr));
            continue;
        }
        for raw_slot in state.storage.keys() {
            let slot = parse_slot(raw_slot)
                .ok_or_else(|| Error::tx(index, format!("storage slot {raw_slot:?} of {raw_addr}")))?;
            writes.insert(StateKey::ContractStorage { contract: addr, slot });
        }
        if is_created || (value_in && to == Some(addr)) {
            writes.insert(StateKey::ContractAccount(addr));
        }
    }
    if let Some(addr) = created {
        writes.insert(StateKey::ContractAccount(addr));
    }
    Ok(AccessSet { reads: BTreeSet::new(), writes })
}

/// Builds the exclusive-access workload of one Ethereum block.
///
/// The miner address is recorded as `coinbase` metadata so analysis can
/// drop it.
pub fn parse_ethereum(raw: &EthereumRawBlock) -> Result<BlockWorkload, Error> {
    let block = &raw.block;
    let number =
        parse_quantity(&block.number).ok_or_else(|| Error::structure(format!("block number {:?}", block.number)))?;
    if block.transactions.len() != raw.trace.len() {
        return Err(Error::structure(format!(
            "block {number} has {} transactions but the trace has {} entries",
            block.transactions.len(),
            raw.trace.len()
        )));
    }

    let mut txs = Vec::with_capacity(block.transactions.len());
    for (index, (tx, entry)) in block.transactions.iter().zip(&raw.trace).enumerate() {
        let prestate = match entry {
            TraceEntry::Bare(p) => p,
            TraceEntry::Wrapped(w) => {
                if let Some(h) = &w.tx_hash {
                    if !h.eq_ignore_ascii_case(&tx.hash) {
                        return Err(Error::structure(format!("trace entry {index} is for {h}, block has {}", tx.hash)));
                    }
                }
                match (&w.result, &w.error) {
                    (Some(p), _) => p,
                    (None, Some(err)) => return Err(Error::tx(index, format!("tracer error: {err}"))),
                    (None, None) => return Err(Error::tx(index, "trace entry has no result")),
                }
            }
        };
        txs.push(Transaction {
            id: tx.hash.to_ascii_lowercase(),
            preset_index: index,
            kind: classify_ethereum_kind(tx),
            success: true,
            access: transaction_access(index, tx, prestate)?,
        });
    }

    let mut metadata = BTreeMap::new();
    if let Some(miner) = &block.miner {
        let addr: Address = miner.parse().map_err(|e| Error::structure(format!("miner {miner:?}: {e}")))?;
        metadata.insert("coinbase".to_string(), addr.to_string());
    }
    if let Some(hash) = &block.hash {
        metadata.insert("hash".to_string(), hash.to_ascii_lowercase());
    }
    if let Some(ts) = block.timestamp.as_deref().and_then(parse_quantity) {
        metadata.insert("timestamp".to_string(), ts.to_string());
    }
    Ok(BlockWorkload::new(Chain::Ethereum, number, txs, metadata)?)
}
