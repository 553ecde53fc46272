//! Raw chain data to [`BlockWorkload`](txconflict_core::BlockWorkload).

pub mod constants;
pub mod ethereum;
pub mod solana;

pub use ethereum::{classify_ethereum_kind, parse_ethereum, EthereumRawBlock};
pub use solana::{parse_solana, SolanaRawBlock};

/// Parses a `0x`-prefixed hex quantity.
pub(crate) fn parse_quantity(s: &str) -> Option<u64> {
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X"))?;
    if digits.is_empty() {
        return Some(0);
    }
    u64::from_str_radix(digits, 16).ok()
}
