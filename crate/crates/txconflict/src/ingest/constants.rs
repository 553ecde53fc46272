//! Protocol constants used during ingestion.
//!
//! These are fixed facts of the two chains, not tunables.

/// Solana vote program.
pub const SOLANA_VOTE_PROGRAM_ID: &str = "Vote111111111111111111111111111111111111111";

/// `transfer(address,uint256)`
pub const ERC20_TRANSFER_SELECTOR: [u8; 4] = [0xa9, 0x05, 0x9c, 0xbb];

/// `transferFrom(address,address,uint256)`
pub const ERC20_TRANSFER_FROM_SELECTOR: [u8; 4] = [0x23, 0xb8, 0x72, 0xdd];
