use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// A state key payload failed validation.
    #[error("malformed {field} in state key: {reason}")]
    KeyEncoding { field: &'static str, reason: String },

    /// Transactions must carry preset indices `0..n` in order.
    #[error("transaction at position {position} has preset index {found}")]
    PresetIndex { position: usize, found: usize },

    #[error("transaction {index} in a solana workload has kind {kind}")]
    SolanaKind { index: usize, kind: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("no conflict families to choose from")]
    NoFamilies,

    #[error("cannot aggregate an empty list of block metrics")]
    EmptyAggregate,
}

impl Error {
    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter { name, reason: reason.into() }
    }
}
