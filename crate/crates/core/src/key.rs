//! State keys and their canonical text encoding.
//!
//! Every unit of state a transaction can touch is a [`StateKey`]. Address and
//! hash payloads are stored as raw bytes, so two keys compare equal exactly
//! when their canonical encodings are byte-identical:
//!
//! | variant            | encoding                       |
//! |--------------------|--------------------------------|
//! | `EoaAccount`       | `eoa:0x<40 hex>`               |
//! | `ContractStorage`  | `slot:0x<40 hex>:0x<64 hex>`   |
//! | `ContractAccount`  | `code:0x<40 hex>`              |
//! | `SolanaAccount`    | `acct:<base58>`                |
//! | `Generic`          | `gen:<name>`                   |
//!
//! Hex is always emitted lowercase.

use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use crate::Error;

/// 20-byte Ethereum address.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub [u8; 20]);

/// 32-byte contract storage slot.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot(pub [u8; 32]);

/// 32-byte Solana account public key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pubkey(pub [u8; 32]);

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateKey {
    EoaAccount(Address),
    ContractStorage { contract: Address, slot: Slot },
    ContractAccount(Address),
    SolanaAccount(Pubkey),
    Generic(String),
}

impl StateKey {
    pub fn eoa(address: &str) -> Result<Self, Error> {
        Ok(StateKey::EoaAccount(address.parse()?))
    }

    pub fn contract(address: &str) -> Result<Self, Error> {
        Ok(StateKey::ContractAccount(address.parse()?))
    }

    pub fn storage(contract: &str, slot: &str) -> Result<Self, Error> {
        Ok(StateKey::ContractStorage { contract: contract.parse()?, slot: slot.parse()? })
    }

    pub fn solana(pubkey: &str) -> Result<Self, Error> {
        Ok(StateKey::SolanaAccount(pubkey.parse()?))
    }

    pub fn generic(name: impl Into<String>) -> Self {
        StateKey::Generic(name.into())
    }

    /// The account address for `EoaAccount` / `ContractAccount` keys.
    pub fn account_address(&self) -> Option<&Address> {
        match self {
            StateKey::EoaAccount(a) | StateKey::ContractAccount(a) => Some(a),
            _ => None,
        }
    }

    /// Canonical text form. Inverse of [`StateKey::decode`].
    pub fn encode(&self) -> String {
        self.to_string()
    }

    pub fn decode(s: &str) -> Result<Self, Error> {
        let (tag, payload) = s.split_once(':').ok_or_else(|| Error::KeyEncoding {
            field: "tag",
            reason: alloc::format!("missing `<tag>:` prefix in {s:?}"),
        })?;
        match tag {
            "eoa" => StateKey::eoa(payload),
            "code" => StateKey::contract(payload),
            "slot" => {
                let (contract, slot) = payload.split_once(':').ok_or_else(|| Error::KeyEncoding {
                    field: "slot",
                    reason: "expected `slot:<contract>:<slot>`".to_string(),
                })?;
                StateKey::storage(contract, slot)
            }
            "acct" => StateKey::solana(payload),
            "gen" => Ok(StateKey::generic(payload)),
            other => Err(Error::KeyEncoding { field: "tag", reason: alloc::format!("unknown tag {other:?}") }),
        }
    }
}

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateKey::EoaAccount(a) => write!(f, "eoa:{a}"),
            StateKey::ContractStorage { contract, slot } => write!(f, "slot:{contract}:{slot}"),
            StateKey::ContractAccount(a) => write!(f, "code:{a}"),
            StateKey::SolanaAccount(p) => write!(f, "acct:{p}"),
            StateKey::Generic(name) => write!(f, "gen:{name}"),
        }
    }
}

impl fmt::Debug for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for StateKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StateKey::decode(s)
    }
}

fn write_hex(f: &mut fmt::Formatter<'_>, bytes: &[u8]) -> fmt::Result {
    f.write_str("0x")?;
    for b in bytes {
        write!(f, "{b:02x}")?;
    }
    Ok(())
}

fn parse_hex<const N: usize>(s: &str, field: &'static str) -> Result<[u8; N], Error> {
    let digits = s
        .strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .ok_or_else(|| Error::KeyEncoding { field, reason: alloc::format!("expected 0x prefix in {s:?}") })?;
    if digits.len() != 2 * N {
        return Err(Error::KeyEncoding {
            field,
            reason: alloc::format!("expected {} hex digits, got {}", 2 * N, digits.len()),
        });
    }
    let mut out = [0u8; N];
    for (i, pair) in digits.as_bytes().chunks_exact(2).enumerate() {
        let hi = hex_val(pair[0]);
        let lo = hex_val(pair[1]);
        match (hi, lo) {
            (Some(hi), Some(lo)) => out[i] = (hi << 4) | lo,
            _ => return Err(Error::KeyEncoding { field, reason: alloc::format!("non-hex digit in {s:?}") }),
        }
    }
    Ok(out)
}

fn hex_val(c: u8) -> Option<u8> {
    match c {
        b'0'..=b'9' => Some(c - b'0'),
        b'a'..=b'f' => Some(c - b'a' + 10),
        b'A'..=b'F' => Some(c - b'A' + 10),
        _ => None,
    }
}

impl FromStr for Address {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_hex::<20>(s, "address").map(Address)
    }
}

impl FromStr for Slot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_hex::<32>(s, "slot").map(Slot)
    }
}

impl FromStr for Pubkey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 32];
        match bs58::decode(s).onto(&mut out) {
            Ok(32) => Ok(Pubkey(out)),
            Ok(n) => Err(Error::KeyEncoding {
                field: "pubkey",
                reason: alloc::format!("{s:?} decodes to {n} bytes, expected 32"),
            }),
            Err(e) => Err(Error::KeyEncoding { field: "pubkey", reason: alloc::format!("{s:?}: {e}") }),
        }
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_hex(f, &self.0)
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_hex(f, &self.0)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_hex(f, &self.0)
    }
}

impl fmt::Debug for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_hex(f, &self.0)
    }
}

impl fmt::Display for Pubkey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&bs58::encode(&self.0).into_string())
    }
}

impl fmt::Debug for Pubkey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
