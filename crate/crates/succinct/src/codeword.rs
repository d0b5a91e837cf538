//! Variable-length codewords for small ranks.
//!
//! Index `i` is written as the `ℓ`-bit integer `i + 2 - 2^ℓ` where
//! `ℓ = floor(log2(i + 2))`. Codewords are concatenated in `B`, and a second
//! bitvector `L` marks where each one begins.

use std::io::{Read, Write};

use crate::bitvec::{BitVector, SelectIndex};
use crate::io::{read_len, read_magic, write_magic, WriteBytesExt, LE};
use crate::{bit_width, Error, Result};

const MAGIC: &[u8; 4] = b"CWAR";
const VERSION: u16 = 1;

/// Returns `(codeword, length in bits)` for index `i`.
#[inline]
pub fn cw_encode(i: u64) -> (u64, u32) {
    let x = i as u128 + 2;
    let l = 127 - x.leading_zeros();
    ((x - (1u128 << l)) as u64, l)
}

#[inline]
pub fn cw_decode(code: u64, len: u32) -> u64 {
    ((code as u128 + (1u128 << len)) - 2) as u64
}

/// Array of indexes stored as codewords.
///
/// ```
/// use succinct::CodewordArray;
/// let a = CodewordArray::new(&[0, 1, 2, 5, 6]);
/// assert_eq!(a.get(3), 5);
/// ```
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodewordArray {
    codes: BitVector,
    starts: BitVector,
    select: SelectIndex,
    len: usize,
}

impl CodewordArray {
    pub fn new(indexes: &[u64]) -> Self {
        let mut codes = BitVector::new();
        let mut starts = BitVector::new();
        for &i in indexes {
            let (c, l) = cw_encode(i);
            starts.push(true);
            for _ in 1..l {
                starts.push(false);
            }
            codes.push_bits(c, l);
        }
        let select = SelectIndex::new(&starts);
        Self {
            codes,
            starts,
            select,
            len: indexes.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, pos: usize) -> u64 {
        assert!(pos < self.len, "index {pos} out of bounds (length {})", self.len);
        let b = self.select.select1_unchecked(&self.starts, pos);
        let e = self.starts.next_one(b + 1).unwrap_or(self.codes.len());
        let l = (e - b) as u32;
        cw_decode(self.codes.get_bits(b, l), l)
    }

    pub fn access(&self, pos: usize) -> Result<u64> {
        if pos >= self.len {
            return Err(Error::IndexOutOfBounds {
                index: pos,
                len: self.len,
            });
        }
        Ok(self.get(pos))
    }

    /// Bits of `B` plus `L`.
    pub fn payload_bits(&self) -> usize {
        self.codes.len() + self.starts.len()
    }

    pub fn size_in_bytes(&self) -> usize {
        self.codes.size_in_bytes() + self.starts.size_in_bytes() + self.select.size_in_bytes() + 8
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_magic(w, MAGIC, VERSION)?;
        w.write_u64::<LE>(self.len as u64)?;
        self.codes.write_to(w)?;
        self.starts.write_to(w)?;
        self.select.write_to(w)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        read_magic(r, MAGIC, VERSION)?;
        let len = read_len(r)?;
        let codes = BitVector::read_from(r)?;
        let starts = BitVector::read_from(r)?;
        let select = SelectIndex::read_from(r)?;
        if codes.len() != starts.len() || select.ones() != len || starts.count_ones() != len {
            return Err(Error::Format("inconsistent codeword array".into()));
        }
        Ok(Self {
            codes,
            starts,
            select,
            len,
        })
    }
}

/// Length of the codeword for `i`.
#[inline]
pub fn cw_len(i: u64) -> u32 {
    bit_width(i.saturating_add(2)) - 1
}
