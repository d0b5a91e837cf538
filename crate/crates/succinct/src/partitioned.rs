//! Uniformly partitioned Elias-Fano.
//!
//! Every block but the last holds exactly `block_size` values. A block is
//! encoded relative to the previous block's upper bound, which shrinks its
//! local universe. Upper bounds and block offsets are stored uncompressed in
//! fixed-width arrays, so access computes the block by division.

use std::io::{Read, Write};

use crate::bitvec::BitVector;
use crate::elias_fano::{encode_into, high_bits_len, low_width, validate};
use crate::intvec::IntVector;
use crate::io::{read_len, read_magic, write_magic, ReadBytesExt, WriteBytesExt, LE};
use crate::{bit_width, ceil_log2, Error, MonotoneSequence, Result};

const MAGIC: &[u8; 4] = b"EFSQ";
const VERSION: u16 = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionedEliasFano {
    len: usize,
    universe: u64,
    block_size: usize,
    uppers: IntVector,
    offsets: IntVector,
    data: BitVector,
}

impl PartitionedEliasFano {
    pub fn new(values: &[u64], universe: u64, block_size: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidArgument("block size must be at least 1".into()));
        }
        validate(values, universe)?;
        let upper_width = ceil_log2(universe.max(1)).max(bit_width(values.last().copied().unwrap_or(0)));
        let mut uppers = IntVector::new(upper_width);
        let mut offsets_raw = Vec::with_capacity(values.len().div_ceil(block_size));
        let mut data = BitVector::new();
        let mut base = 0;
        for block in values.chunks(block_size) {
            let upper = *block.last().unwrap();
            uppers.push(upper);
            offsets_raw.push(data.len() as u64);
            encode_into(&mut data, block, base, upper - base + 1);
            base = upper;
        }
        Ok(Self {
            len: values.len(),
            universe,
            block_size,
            uppers,
            offsets: IntVector::from_slice(&offsets_raw),
            data,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn num_blocks(&self) -> usize {
        self.uppers.len()
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    /// Encoded blocks plus upper bounds and offsets.
    pub fn payload_bits(&self) -> usize {
        self.data.len() + self.uppers.payload_bits() + self.offsets.payload_bits()
    }

    pub fn size_in_bytes(&self) -> usize {
        self.data.size_in_bytes() + self.uppers.size_in_bytes() + self.offsets.size_in_bytes() + 40
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_magic(w, MAGIC, VERSION)?;
        w.write_u64::<LE>(self.len as u64)?;
        w.write_u64::<LE>(self.universe)?;
        w.write_u8(0)?;
        w.write_u32::<LE>(self.block_size as u32)?;
        w.write_u64::<LE>(self.num_blocks() as u64)?;
        w.write_u8(self.uppers.width() as u8)?;
        self.uppers.write_to(w)?;
        self.offsets.write_to(w)?;
        self.data.write_to(w)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        read_magic(r, MAGIC, VERSION)?;
        let len = read_len(r)?;
        let universe = r.read_u64::<LE>()?;
        let _low_width = r.read_u8()?;
        let block_size = r.read_u32::<LE>()? as usize;
        let blocks = read_len(r)?;
        let upper_width = r.read_u8()? as u32;
        let uppers = IntVector::read_from(r)?;
        let offsets = IntVector::read_from(r)?;
        let data = BitVector::read_from(r)?;
        if block_size == 0
            || blocks != len.div_ceil(block_size)
            || uppers.len() != blocks
            || offsets.len() != blocks
            || uppers.width() != upper_width
        {
            return Err(Error::Format("inconsistent partitioned sequence header".into()));
        }
        Ok(Self {
            len,
            universe,
            block_size,
            uppers,
            offsets,
            data,
        })
    }
}

impl MonotoneSequence for PartitionedEliasFano {
    fn len(&self) -> usize {
        self.len
    }

    #[inline]
    fn get(&self, i: usize) -> u64 {
        assert!(i < self.len, "index {i} out of bounds (length {})", self.len);
        let b = i / self.block_size;
        let j = i % self.block_size;
        let cnt = if b + 1 == self.num_blocks() {
            self.len - b * self.block_size
        } else {
            self.block_size
        };
        let base = if b == 0 { 0 } else { self.uppers.get(b - 1) };
        let local_u = self.uppers.get(b) - base + 1;
        let l = low_width(cnt as u64, local_u);
        let off = self.offsets.get(b) as usize;
        let low = self.data.get_bits(off + j * l as usize, l);
        let high_start = off + cnt * l as usize;
        debug_assert!(high_start + high_bits_len(cnt as u64, local_u, l) <= self.data.len());
        let p = self
            .data
            .select_from(high_start, j)
            .expect("corrupt partitioned block");
        let high = (p - high_start - j) as u64;
        base + ((high << l) | low)
    }
}
