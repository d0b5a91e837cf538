//! Succinct building blocks for compressed n-gram indexes.
//!
//! - [`BitVector`] and [`SelectIndex`] for `select1` over plain bitvectors.
//! - [`IntVector`] for fixed-width packed integers.
//! - [`EliasFano`] and [`PartitionedEliasFano`] for monotone sequences.
//! - [`CodewordArray`] for variable-length indexes into small alphabets.
//!
//! All structures are immutable once built and serialize to little-endian
//! streams through [`io`].

pub mod bitvec;
pub mod codeword;
pub mod elias_fano;
pub mod intvec;
pub mod io;
pub mod partitioned;

pub use bitvec::{BitVector, SelectIndex};
pub use codeword::{cw_decode, cw_encode, CodewordArray};
pub use elias_fano::EliasFano;
pub use intvec::IntVector;
pub use partitioned::PartitionedEliasFano;

/// Errors raised by the codecs in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("rank {rank} out of bounds ({ones} set bits)")]
    RankOutOfBounds { rank: usize, ones: usize },
    #[error("index {index} out of bounds (length {len})")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("value {value} at position {position} is smaller than the previous value {previous}")]
    NotMonotone {
        position: usize,
        value: u64,
        previous: u64,
    },
    #[error("value {value} at position {position} is outside universe {universe}")]
    OutOfUniverse {
        position: usize,
        value: u64,
        universe: u64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Read access shared by the monotone sequence codecs.
pub trait MonotoneSequence {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Value at `i`. Panics when `i >= len()`.
    fn get(&self, i: usize) -> u64;

    /// Checked variant of [`MonotoneSequence::get`].
    fn access(&self, i: usize) -> Result<u64> {
        if i >= self.len() {
            return Err(Error::IndexOutOfBounds {
                index: i,
                len: self.len(),
            });
        }
        Ok(self.get(i))
    }

    /// Smallest position `p` in `[b, e)` with `get(p) == x`, found by binary search.
    fn find(&self, b: usize, e: usize, x: u64) -> Option<usize> {
        let e = e.min(self.len());
        let (mut lo, mut hi) = (b, e);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.get(mid) < x {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        (lo < e && self.get(lo) == x).then_some(lo)
    }

    fn to_vec(&self) -> Vec<u64> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }
}

/// Number of bits needed to write `x` (0 for 0).
#[inline]
pub fn bit_width(x: u64) -> u32 {
    64 - x.leading_zeros()
}

/// `ceil(log2(x))` for `x >= 1`.
#[inline]
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        bit_width(x - 1)
    }
}
