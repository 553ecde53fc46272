//! Solana `getBlock` results (JSON encoding, transaction version <= 0).
//!
//! Account writability follows the message header: the first
//! `numRequiredSignatures` keys are signers, the last
//! `numReadonlySignedAccounts` of those are read-only; of the remaining
//! unsigned keys the last `numReadonlyUnsignedAccounts` are read-only.
//! Address-lookup-table accounts from `meta.loadedAddresses` join the same
//! sets. `jsonParsed` account keys carrying an explicit `writable` flag are
//! taken as given.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use txconflict_core::{AccessSet, BlockWorkload, Chain, StateKey, Transaction, TransactionKind};

use super::constants::SOLANA_VOTE_PROGRAM_ID;
use crate::Error;

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RpcSolanaBlock {
    #[serde(default)]
    pub blockhash: Option<String>,
    #[serde(default)]
    pub parent_slot: Option<u64>,
    #[serde(default)]
    pub block_time: Option<i64>,
    #[serde(default)]
    pub block_height: Option<u64>,
    #[serde(default)]
    pub transactions: Vec<RpcTransactionWithMeta>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RpcTransactionWithMeta {
    pub transaction: serde_json::Value,
    #[serde(default)]
    pub meta: Option<RpcMeta>,
    #[serde(default)]
    pub version: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RpcMeta {
    #[serde(default)]
    pub err: Option<serde_json::Value>,
    #[serde(default)]
    pub loaded_addresses: Option<LoadedAddresses>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct LoadedAddresses {
    #[serde(default)]
    pub writable: Vec<String>,
    #[serde(default)]
    pub readonly: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct RpcTransaction {
    #[serde(default)]
    signatures: Vec<String>,
    message: RpcMessage,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RpcMessage {
    account_keys: Vec<AccountKey>,
    #[serde(default)]
    header: Option<MessageHeader>,
    #[serde(default)]
    instructions: Vec<Instruction>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum AccountKey {
    Plain(String),
    Parsed { pubkey: String, writable: bool },
}

impl AccountKey {
    fn pubkey(&self) -> &str {
        match self {
            AccountKey::Plain(k) | AccountKey::Parsed { pubkey: k, .. } => k,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MessageHeader {
    pub num_required_signatures: usize,
    pub num_readonly_signed_accounts: usize,
    pub num_readonly_unsigned_accounts: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Instruction {
    #[serde(default)]
    program_id_index: Option<usize>,
    #[serde(default)]
    program_id: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SolanaRawBlock {
    /// `getBlock` results do not carry their own slot.
    pub slot: u64,
    pub block: RpcSolanaBlock,
}

impl SolanaRawBlock {
    pub fn from_json(slot: u64, text: &str) -> Result<Self, Error> {
        let block = serde_json::from_str(text).map_err(|e| Error::structure(format!("getBlock JSON: {e}")))?;
        Ok(SolanaRawBlock { slot, block })
    }
}

/// Writability of each static account key under `header`.
pub fn writable_by_header(len: usize, header: &MessageHeader) -> Result<Vec<bool>, Error> {
    let signed = header.num_required_signatures;
    if signed > len
        || header.num_readonly_signed_accounts > signed
        || header.num_readonly_unsigned_accounts > len - signed
    {
        return Err(Error::structure(format!("message header {header:?} does not fit {len} account keys")));
    }
    let writable_signed = signed - header.num_readonly_signed_accounts;
    let writable_unsigned_end = len - header.num_readonly_unsigned_accounts;
    Ok((0..len).map(|i| if i < signed { i < writable_signed } else { i < writable_unsigned_end }).collect())
}

fn key(index: usize, pubkey: &str) -> Result<StateKey, Error> {
    StateKey::solana(pubkey).map_err(|e| Error::tx(index, e.to_string()))
}

fn parse_transaction(index: usize, entry: &RpcTransactionWithMeta) -> Result<Transaction, Error> {
    match &entry.version {
        None | Some(serde_json::Value::Null) => {}
        Some(serde_json::Value::String(v)) if v == "legacy" => {}
        Some(v) if v.as_u64() == Some(0) => {}
        Some(v) => return Err(Error::tx(index, format!("unsupported transaction version {v}"))),
    }
    if !entry.transaction.is_object() {
        return Err(Error::tx(index, "only the json / jsonParsed transaction encodings are supported"));
    }
    let tx: RpcTransaction =
        serde_json::from_value(entry.transaction.clone()).map_err(|e| Error::tx(index, format!("transaction: {e}")))?;
    let msg = &tx.message;
    let loaded = entry.meta.as_ref().and_then(|m| m.loaded_addresses.clone()).unwrap_or_default();

    let writable: Vec<bool> = if msg.account_keys.iter().all(|k| matches!(k, AccountKey::Parsed { .. })) {
        msg.account_keys.iter().map(|k| matches!(k, AccountKey::Parsed { writable: true, .. })).collect()
    } else {
        let header = msg
            .header
            .as_ref()
            .ok_or_else(|| Error::structure(format!("transaction {index}: message has no header")))?;
        writable_by_header(msg.account_keys.len(), header)?
    };

    let mut reads = BTreeSet::new();
    let mut writes = BTreeSet::new();
    for (account, &w) in msg.account_keys.iter().zip(&writable) {
        let k = key(index, account.pubkey())?;
        if w {
            writes.insert(k);
        } else {
            reads.insert(k);
        }
    }
    for pk in &loaded.writable {
        writes.insert(key(index, pk)?);
    }
    for pk in &loaded.readonly {
        reads.insert(key(index, pk)?);
    }
    reads.retain(|k| !writes.contains(k));

    let all_keys: Vec<&str> = msg
        .account_keys
        .iter()
        .map(AccountKey::pubkey)
        .chain(loaded.writable.iter().map(String::as_str))
        .chain(loaded.readonly.iter().map(String::as_str))
        .collect();
    let mut is_vote = false;
    for ix in &msg.instructions {
        let program = match (&ix.program_id, ix.program_id_index) {
            (Some(p), _) => p.as_str(),
            (None, Some(i)) => {
                *all_keys.get(i).ok_or_else(|| Error::tx(index, format!("program id index {i} out of range")))?
            }
            (None, None) => return Err(Error::tx(index, "instruction without program id")),
        };
        is_vote |= program == SOLANA_VOTE_PROGRAM_ID;
    }

    let success = entry.meta.as_ref().is_none_or(|m| m.err.is_none());
    Ok(Transaction {
        id: tx.signatures.first().cloned().unwrap_or_else(|| format!("tx{index}")),
        preset_index: index,
        kind: if is_vote { TransactionKind::SolanaVote } else { TransactionKind::SolanaNonVote },
        success,
        access: AccessSet { reads, writes },
    })
}

/// Builds the declared read/write workload of one Solana block.
pub fn parse_solana(raw: &SolanaRawBlock) -> Result<BlockWorkload, Error> {
    let txs = raw
        .block
        .transactions
        .iter()
        .enumerate()
        .map(|(i, entry)| parse_transaction(i, entry))
        .collect::<Result<Vec<_>, _>>()?;
    let mut metadata = BTreeMap::new();
    if let Some(h) = &raw.block.blockhash {
        metadata.insert("blockhash".to_string(), h.clone());
    }
    if let Some(p) = raw.block.parent_slot {
        metadata.insert("parent_slot".to_string(), p.to_string());
    }
    if let Some(t) = raw.block.block_time {
        metadata.insert("timestamp".to_string(), t.to_string());
    }
    if let Some(h) = raw.block.block_height {
        metadata.insert("block_height".to_string(), h.to_string());
    }
    Ok(BlockWorkload::new(Chain::Solana, raw.slot, txs, metadata)?)
}
