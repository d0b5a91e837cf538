//! Elias-Fano encoding of nondecreasing integer sequences.

use std::io::{Read, Write};

use crate::bitvec::{BitVector, SelectIndex};
use crate::io::{read_len, read_magic, write_magic, ReadBytesExt, WriteBytesExt, LE};
use crate::{bit_width, Error, MonotoneSequence, Result};

const MAGIC: &[u8; 4] = b"EFSQ";
const VERSION: u16 = 1;

/// Low-part width for `m` values below `u`: `floor(log2(u / m))`, or 0 when `u <= m`.
#[inline]
pub fn low_width(m: u64, u: u64) -> u32 {
    if m == 0 || u <= m {
        0
    } else {
        bit_width(u / m) - 1
    }
}

/// Checks monotonicity and the universe bound.
pub(crate) fn validate(values: &[u64], universe: u64) -> Result<()> {
    let limit = universe.max(1);
    let mut prev = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < prev {
            return Err(Error::NotMonotone {
                position: i,
                value: v,
                previous: prev,
            });
        }
        if v >= limit {
            return Err(Error::OutOfUniverse {
                position: i,
                value: v,
                universe,
            });
        }
        prev = v;
    }
    Ok(())
}

/// Appends the low parts and then the high-part unary codes of `values - base`
/// to `out`. Returns the low width used.
pub(crate) fn encode_into(out: &mut BitVector, values: &[u64], base: u64, universe: u64) -> u32 {
    let m = values.len() as u64;
    let l = low_width(m, universe);
    for &v in values {
        out.push_bits(v - base, l);
    }
    let start = out.len();
    let high_len = high_bits_len(m, universe, l);
    let mut bits = vec![0u64; high_len.div_ceil(64)];
    for (i, &v) in values.iter().enumerate() {
        let p = (((v - base) >> l) as usize) + i;
        bits[p / 64] |= 1 << (p % 64);
    }
    let mut remaining = high_len;
    for w in bits {
        let take = remaining.min(64) as u32;
        out.push_bits(w, take);
        remaining -= take as usize;
    }
    debug_assert_eq!(out.len(), start + high_len);
    l
}

#[inline]
pub(crate) fn high_bits_len(m: u64, universe: u64, l: u32) -> usize {
    if m == 0 {
        0
    } else {
        (m + ((universe.max(1) - 1) >> l) + 1) as usize
    }
}

/// Elias-Fano sequence with constant-time access through a sampled select index.
///
/// ```
/// use succinct::{EliasFano, MonotoneSequence};
/// let ef = EliasFano::new(&[0, 2, 3, 4, 5, 5, 8, 9, 11], 12).unwrap();
/// assert_eq!(ef.get(4), 5);
/// assert_eq!(ef.find(2, 5, 4), Some(3));
/// ```
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliasFano {
    len: usize,
    universe: u64,
    low_width: u32,
    low: BitVector,
    high: BitVector,
    select: SelectIndex,
}

impl EliasFano {
    /// Encodes `values`, which must be nondecreasing and below `max(universe, 1)`.
    pub fn new(values: &[u64], universe: u64) -> Result<Self> {
        validate(values, universe)?;
        let m = values.len() as u64;
        let l = low_width(m, universe);
        let mut low = BitVector::with_capacity(values.len() * l as usize);
        for &v in values {
            low.push_bits(v, l);
        }
        let high_len = high_bits_len(m, universe, l);
        let mut high = BitVector::zeros(high_len);
        for (i, &v) in values.iter().enumerate() {
            high.set((v >> l) as usize + i, true);
        }
        let select = SelectIndex::new(&high);
        Ok(Self {
            len: values.len(),
            universe,
            low_width: l,
            low,
            high,
            select,
        })
    }

    /// Encodes with the universe set to `last + 1`.
    pub fn from_slice(values: &[u64]) -> Result<Self> {
        let u = values.last().map_or(0, |&v| v + 1);
        Self::new(values, u)
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    pub fn low_width(&self) -> u32 {
        self.low_width
    }

    /// Low plus high bits, excluding the select index.
    pub fn payload_bits(&self) -> usize {
        self.low.len() + self.high.len()
    }

    pub fn size_in_bytes(&self) -> usize {
        self.low.size_in_bytes() + self.high.size_in_bytes() + self.select.size_in_bytes() + 32
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter {
            ef: self,
            i: 0,
            high_pos: 0,
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_magic(w, MAGIC, VERSION)?;
        w.write_u64::<LE>(self.len as u64)?;
        w.write_u64::<LE>(self.universe)?;
        w.write_u8(self.low_width as u8)?;
        self.low.write_to(w)?;
        self.high.write_to(w)?;
        self.select.write_to(w)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        read_magic(r, MAGIC, VERSION)?;
        let len = read_len(r)?;
        let universe = r.read_u64::<LE>()?;
        let low_width = r.read_u8()? as u32;
        let low = BitVector::read_from(r)?;
        let high = BitVector::read_from(r)?;
        let select = SelectIndex::read_from(r)?;
        if low_width != self::low_width(len as u64, universe)
            || low.len() != len * low_width as usize
            || high.len() != high_bits_len(len as u64, universe, low_width)
            || select.ones() != len
        {
            return Err(Error::Format("inconsistent Elias-Fano header".into()));
        }
        Ok(Self {
            len,
            universe,
            low_width,
            low,
            high,
            select,
        })
    }
}

impl MonotoneSequence for EliasFano {
    fn len(&self) -> usize {
        self.len
    }

    #[inline]
    fn get(&self, i: usize) -> u64 {
        assert!(i < self.len, "index {i} out of bounds (length {})", self.len);
        let high = (self.select.select1_unchecked(&self.high, i) - i) as u64;
        (high << self.low_width) | self.low.get_bits(i * self.low_width as usize, self.low_width)
    }
}

/// Sequential decoder that scans the high bits instead of selecting.
pub struct Iter<'a> {
    ef: &'a EliasFano,
    i: usize,
    high_pos: usize,
}

impl Iterator for Iter<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.i >= self.ef.len {
            return None;
        }
        let p = self.ef.high.next_one(self.high_pos)?;
        self.high_pos = p + 1;
        let l = self.ef.low_width;
        let v = (((p - self.i) as u64) << l) | self.ef.low.get_bits(self.i * l as usize, l);
        self.i += 1;
        Some(v)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.ef.len - self.i;
        (r, Some(r))
    }
}
