//! Chain-agnostic block model.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::key::{Address, StateKey};
use crate::Error;

/// Metadata key holding the block proposer's fee account.
pub const COINBASE_METADATA_KEY: &str = "coinbase";

/// Read and write sets of one transaction.
///
/// The two sets may overlap: a key that is both read and written is stored
/// in both.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AccessSet {
    pub reads: BTreeSet<StateKey>,
    pub writes: BTreeSet<StateKey>,
}

impl AccessSet {
    pub fn new<R, W>(reads: R, writes: W) -> Self
    where
        R: IntoIterator<Item = StateKey>,
        W: IntoIterator<Item = StateKey>,
    {
        AccessSet { reads: reads.into_iter().collect(), writes: writes.into_iter().collect() }
    }

    /// Every key accessed, read or written.
    pub fn accessed(&self) -> BTreeSet<&StateKey> {
        self.reads.iter().chain(self.writes.iter()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.reads.is_empty() && self.writes.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TransactionKind {
    EthTransfer,
    ContractCall,
    /// ERC-20 `transfer` / `transferFrom`; a refinement of a contract call.
    Erc20Transfer,
    SolanaVote,
    SolanaNonVote,
    Generic,
}

impl TransactionKind {
    pub const ALL: [TransactionKind; 6] = [
        TransactionKind::EthTransfer,
        TransactionKind::ContractCall,
        TransactionKind::Erc20Transfer,
        TransactionKind::SolanaVote,
        TransactionKind::SolanaNonVote,
        TransactionKind::Generic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransactionKind::EthTransfer => "eth_transfer",
            TransactionKind::ContractCall => "contract_call",
            TransactionKind::Erc20Transfer => "erc20_transfer",
            TransactionKind::SolanaVote => "solana_vote",
            TransactionKind::SolanaNonVote => "solana_non_vote",
            TransactionKind::Generic => "generic",
        }
    }
}

impl fmt::Display for TransactionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransactionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TransactionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::parameter("kind", alloc::format!("unknown transaction kind {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    /// Hash or synthetic label.
    pub id: String,
    /// 0-based position in block order.
    pub preset_index: usize,
    pub kind: TransactionKind,
    pub success: bool,
    pub access: AccessSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Chain {
    Ethereum,
    Solana,
    Generic,
}

impl Chain {
    pub fn as_str(self) -> &'static str {
        match self {
            Chain::Ethereum => "ethereum",
            Chain::Solana => "solana",
            Chain::Generic => "generic",
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Chain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ethereum" | "eth" => Ok(Chain::Ethereum),
            "solana" | "sol" => Ok(Chain::Solana),
            "generic" => Ok(Chain::Generic),
            _ => Err(Error::parameter("chain", alloc::format!("unknown chain {s:?}"))),
        }
    }
}

/// One block's transactions in preset order.
///
/// Construction validates that preset indices are exactly `0..n` in order and,
/// for Solana blocks, that every transaction is a vote or non-vote. A
/// workload is immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockWorkload {
    chain: Chain,
    block_number: u64,
    transactions: Vec<Transaction>,
    metadata: BTreeMap<String, String>,
}

impl BlockWorkload {
    pub fn new(
        chain: Chain,
        block_number: u64,
        transactions: Vec<Transaction>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self, Error> {
        for (position, tx) in transactions.iter().enumerate() {
            if tx.preset_index != position {
                return Err(Error::PresetIndex { position, found: tx.preset_index });
            }
            if chain == Chain::Solana
                && !matches!(tx.kind, TransactionKind::SolanaVote | TransactionKind::SolanaNonVote)
            {
                return Err(Error::SolanaKind { index: position, kind: tx.kind.as_str() });
            }
        }
        Ok(BlockWorkload { chain, block_number, transactions, metadata })
    }

    pub fn chain(&self) -> Chain {
        self.chain
    }

    pub fn block_number(&self) -> u64 {
        self.block_number
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    /// The coinbase account recorded in metadata, if any and if it parses.
    pub fn coinbase(&self) -> Option<Coinbase> {
        let raw = self.metadata.get(COINBASE_METADATA_KEY)?;
        match Coinbase::parse(raw) {
            Some(c) => Some(c),
            None => {
                log::warn!("block {}: unrecognised coinbase metadata {raw:?}, filter disabled", self.block_number);
                None
            }
        }
    }

    pub fn into_parts(self) -> (Chain, u64, Vec<Transaction>, BTreeMap<String, String>) {
        (self.chain, self.block_number, self.transactions, self.metadata)
    }
}

/// The block proposer's account, as recorded in workload metadata.
///
/// A bare `0x` address matches both the EOA and the contract-account key for
/// that address; an encoded state key matches only itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coinbase {
    Address(Address),
    Key(StateKey),
}

impl Coinbase {
    pub fn parse(raw: &str) -> Option<Self> {
        if let Ok(addr) = raw.parse::<Address>() {
            return Some(Coinbase::Address(addr));
        }
        StateKey::decode(raw).ok().map(Coinbase::Key)
    }

    pub fn matches(&self, key: &StateKey) -> bool {
        match self {
            Coinbase::Address(addr) => key.account_address() == Some(addr),
            Coinbase::Key(k) => k == key,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccessMode {
    /// Every access is treated as a write. Used when the source cannot tell
    /// reads from writes; over-approximates conflicts.
    ExclusiveAccess,
    ReadWriteAware,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuccessFilter {
    All,
    SuccessfulOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnalysisConfig {
    pub coinbase_filter: bool,
    pub access_mode: AccessMode,
    pub include_voting: bool,
    pub success_filter: SuccessFilter,
}

impl AnalysisConfig {
    /// Per-chain defaults: Ethereum uses exclusive access with the coinbase
    /// removed; Solana uses declared read/write sets over non-vote
    /// transactions; generic workloads use their sets as given.
    pub fn for_chain(chain: Chain) -> Self {
        match chain {
            Chain::Ethereum => AnalysisConfig {
                coinbase_filter: true,
                access_mode: AccessMode::ExclusiveAccess,
                include_voting: false,
                success_filter: SuccessFilter::All,
            },
            Chain::Solana => AnalysisConfig {
                coinbase_filter: false,
                access_mode: AccessMode::ReadWriteAware,
                include_voting: false,
                success_filter: SuccessFilter::All,
            },
            Chain::Generic => AnalysisConfig {
                coinbase_filter: false,
                access_mode: AccessMode::ReadWriteAware,
                include_voting: true,
                success_filter: SuccessFilter::All,
            },
        }
    }
}

/// The access set conflict detection should see for `tx`.
///
/// Under [`AccessMode::ExclusiveAccess`] every accessed key becomes a write.
/// With `cfg.coinbase_filter` set, keys matching `coinbase` are dropped from
/// both sets; a missing coinbase makes the filter a no-op.
pub fn effective_access(tx: &Transaction, cfg: &AnalysisConfig, coinbase: Option<&Coinbase>) -> AccessSet {
    let keep = |k: &&StateKey| match (cfg.coinbase_filter, coinbase) {
        (true, Some(cb)) => !cb.matches(k),
        _ => true,
    };
    match cfg.access_mode {
        AccessMode::ReadWriteAware => AccessSet {
            reads: tx.access.reads.iter().filter(keep).cloned().collect(),
            writes: tx.access.writes.iter().filter(keep).cloned().collect(),
        },
        AccessMode::ExclusiveAccess => AccessSet {
            reads: BTreeSet::new(),
            writes: tx.access.reads.iter().chain(tx.access.writes.iter()).filter(keep).cloned().collect(),
        },
    }
}
