//! Compressed n-gram indexes and modified Kneser-Ney estimation.
//!
//! The crate is split along the data flow:
//!
//! - [`vocabulary`]: token ids and the minimal perfect hash behind them.
//! - [`ngram_blocks`]: fixed-width n-gram records, orderings, sorting,
//!   on-disk blocks and merging.
//! - [`trie_index`]: the Elias-Fano trie for counts or probabilities.
//! - [`hash_index`]: one minimal perfect hash table per order.
//! - [`estimation`]: counting, adjusting and the last pass that lays out a
//!   reversed trie of interpolated probabilities.
//! - [`scoring`]: backoff lookups, stateful scoring and perplexity.

pub mod error;
pub mod estimation;
pub mod hash_index;
pub mod ngram_blocks;
pub mod scoring;
pub mod text;
pub mod trie_index;
pub mod vocabulary;

pub use error::{Error, Result};

/// Word identifier. Ids are dense in `[0, V)`.
pub type WordId = u32;

/// Largest supported n-gram order.
pub const MAX_ORDER: usize = 8;

pub use succinct;

#[cfg(test)]
pub(crate) mod testutil;
