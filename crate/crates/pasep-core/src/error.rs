//! Error type shared by the whole crate.

use alloc::string::String;

/// Everything that can go wrong in this crate.
///
/// Cap overruns (`EnumerationTooLarge`, `StateSpaceTooLarge`,
/// `LinkingExplosion`) are recoverable by raising the relevant cap; the
/// verification suite downgrades them to skipped checks.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// An argument fell outside an operation's stated domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Multiline-queue enumeration would exceed the configured cap.
    #[error("enumeration too large: {count} multiline queues exceeds cap {cap}")]
    EnumerationTooLarge { count: u128, cap: u64 },
    /// Linking enumeration of a single multiline queue exceeded the cap.
    #[error("linking explosion in row {row}: more than {cap} linkings")]
    LinkingExplosion { row: usize, cap: u64 },
    /// The Markov state space exceeds the configured cap.
    #[error("state space too large: {states} states exceeds cap {cap}")]
    StateSpaceTooLarge { states: u128, cap: u64 },
    /// The generator has more than one closed communicating class.
    #[error("non-unique stationary distribution: {closed_classes} closed classes")]
    NonUniqueStationary { closed_classes: usize },
    /// The printed form of the i<j correlation carries q^(i-j), a negative
    /// power, and cannot be evaluated at q = 0.
    #[error("printed form undefined at q=0")]
    PrintedFormUndefined,
    /// Internal invariant violation (a bug, not a user error).
    #[error("internal error: {0}")]
    Internal(String),
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    /// True for errors that only signal "too big for the configured caps".
    pub fn is_cap_exceeded(&self) -> bool {
        matches!(
            self,
            Error::EnumerationTooLarge { .. }
                | Error::LinkingExplosion { .. }
                | Error::StateSpaceTooLarge { .. }
        )
    }
}
