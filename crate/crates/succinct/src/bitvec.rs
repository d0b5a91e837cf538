//! Plain bitvectors with a sampled select index.

use std::io::{Read, Write};

use crate::io::{read_len, read_u64s, write_u64s, ReadBytesExt, WriteBytesExt, LE};
use crate::{Error, Result};

/// Growable bit array; bit `i` lives in word `i / 64` at offset `i % 64`.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

impl std::fmt::Debug for BitVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitVector(")?;
        for i in 0..self.len.min(256) {
            write!(f, "{}", self.get(i) as u8)?;
        }
        if self.len > 256 {
            write!(f, "..")?;
        }
        write!(f, ")")
    }
}

impl BitVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    /// All-zero vector of `len` bits.
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut bv = Self::new();
        for b in bits {
            bv.push(b);
        }
        bv
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        if bit {
            self.words[self.len / 64] |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    /// Appends the low `width` bits of `value`, least significant first.
    #[inline]
    pub fn push_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        if width == 0 {
            return;
        }
        let value = if width == 64 {
            value
        } else {
            value & ((1u64 << width) - 1)
        };
        let off = (self.len % 64) as u32;
        if off == 0 {
            self.words.push(value);
        } else {
            *self.words.last_mut().unwrap() |= value << off;
            if off + width > 64 {
                self.words.push(value >> (64 - off));
            }
        }
        self.len += width as usize;
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    /// Reads `width` bits starting at bit `pos`.
    #[inline]
    pub fn get_bits(&self, pos: usize, width: u32) -> u64 {
        debug_assert!(width <= 64 && pos + width as usize <= self.len);
        if width == 0 {
            return 0;
        }
        let w = pos / 64;
        let off = (pos % 64) as u32;
        let mut v = self.words[w] >> off;
        if off + width > 64 {
            v |= self.words[w + 1] << (64 - off);
        }
        if width == 64 {
            v
        } else {
            v & ((1u64 << width) - 1)
        }
    }

    /// Overwrites `width` bits at `pos` (the range must already exist).
    pub fn set_bits(&mut self, pos: usize, value: u64, width: u32) {
        debug_assert!(width <= 64 && pos + width as usize <= self.len);
        if width == 0 {
            return;
        }
        let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
        let value = value & mask;
        let w = pos / 64;
        let off = (pos % 64) as u32;
        self.words[w] = (self.words[w] & !(mask << off)) | (value << off);
        if off + width > 64 {
            let spill = off + width - 64;
            let hi_mask = (1u64 << spill) - 1;
            self.words[w + 1] = (self.words[w + 1] & !hi_mask) | (value >> (64 - off));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Position of the first set bit at or after `from`, if any.
    #[inline]
    pub fn next_one(&self, from: usize) -> Option<usize> {
        if from >= self.len {
            return None;
        }
        let mut w = from / 64;
        let mut word = self.words[w] & (u64::MAX << (from % 64));
        loop {
            if word != 0 {
                let p = w * 64 + word.trailing_zeros() as usize;
                return (p < self.len).then_some(p);
            }
            w += 1;
            if w >= self.words.len() {
                return None;
            }
            word = self.words[w];
        }
    }

    /// Position of the `k`-th (0-based) set bit at or after bit `from`, by word scan.
    #[inline]
    pub fn select_from(&self, from: usize, mut k: usize) -> Option<usize> {
        if from >= self.len {
            return None;
        }
        let mut w = from / 64;
        let mut word = self.words[w] & (u64::MAX << (from % 64));
        loop {
            let c = word.count_ones() as usize;
            if k < c {
                let p = w * 64 + select_in_word(word, k as u32) as usize;
                return (p < self.len).then_some(p);
            }
            k -= c;
            w += 1;
            if w >= self.words.len() {
                return None;
            }
            word = self.words[w];
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn size_in_bytes(&self) -> usize {
        self.words.len() * 8 + 8
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_u64::<LE>(self.len as u64)?;
        write_u64s(w, &self.words)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let len = read_len(r)?;
        let words = read_u64s(r)?;
        if words.len() != len.div_ceil(64) {
            return Err(Error::Format(format!(
                "bitvector of {len} bits stored in {} words",
                words.len()
            )));
        }
        Ok(Self { words, len })
    }
}

/// Position of the `k`-th set bit inside `word`; requires `k < popcount(word)`.
#[inline]
pub fn select_in_word(mut word: u64, mut k: u32) -> u32 {
    let mut base = 0;
    loop {
        let c = (word & 0xFF).count_ones();
        if k < c {
            break;
        }
        k -= c;
        word >>= 8;
        base += 8;
    }
    for _ in 0..k {
        word &= word - 1;
    }
    base + word.trailing_zeros()
}

/// Sampled positions of every 1024-th set bit of a [`BitVector`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SelectIndex {
    samples: Vec<u64>,
    ones: usize,
}

pub const SELECT_SAMPLE: usize = 1024;

impl SelectIndex {
    pub fn new(bv: &BitVector) -> Self {
        let mut samples = Vec::new();
        let mut seen = 0usize;
        for (wi, &word) in bv.words().iter().enumerate() {
            let c = word.count_ones() as usize;
            // next sample rank that falls inside this word
            let mut next = seen.div_ceil(SELECT_SAMPLE) * SELECT_SAMPLE;
            while next < seen + c {
                let p = wi * 64 + select_in_word(word, (next - seen) as u32) as usize;
                samples.push(p as u64);
                next += SELECT_SAMPLE;
            }
            seen += c;
        }
        Self {
            samples,
            ones: seen,
        }
    }

    pub fn ones(&self) -> usize {
        self.ones
    }

    /// Position of the `(k+1)`-th set bit.
    pub fn select1(&self, bv: &BitVector, k: usize) -> Result<usize> {
        if k >= self.ones {
            return Err(Error::RankOutOfBounds {
                rank: k,
                ones: self.ones,
            });
        }
        Ok(self.select1_unchecked(bv, k))
    }

    #[inline]
    pub fn select1_unchecked(&self, bv: &BitVector, k: usize) -> usize {
        let s = k / SELECT_SAMPLE;
        let start = self.samples[s] as usize;
        bv.select_from(start, k - s * SELECT_SAMPLE)
            .expect("select index out of sync with its bitvector")
    }

    pub fn size_in_bytes(&self) -> usize {
        self.samples.len() * 8 + 16
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_u64::<LE>(self.ones as u64)?;
        write_u64s(w, &self.samples)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let ones = r.read_u64::<LE>()? as usize;
        let samples = read_u64s(r)?;
        if samples.len() != ones.div_ceil(SELECT_SAMPLE) {
            return Err(Error::Format("select samples do not match popcount".into()));
        }
        Ok(Self { samples, ones })
    }
}
