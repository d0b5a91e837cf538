//! Fixed-width packed integer arrays.

use std::io::{Read, Write};

use crate::bitvec::BitVector;
use crate::io::{read_len, ReadBytesExt, WriteBytesExt, LE};
use crate::{bit_width, Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntVector {
    bits: BitVector,
    width: u32,
    len: usize,
}

impl IntVector {
    pub fn new(width: u32) -> Self {
        assert!(width <= 64);
        Self {
            bits: BitVector::new(),
            width,
            len: 0,
        }
    }

    /// `len` zeros of the given width.
    pub fn zeros(width: u32, len: usize) -> Self {
        assert!(width <= 64);
        Self {
            bits: BitVector::zeros(width as usize * len),
            width,
            len,
        }
    }

    /// Packs `values` with the smallest width that holds their maximum.
    pub fn from_slice(values: &[u64]) -> Self {
        let width = bit_width(values.iter().copied().max().unwrap_or(0));
        Self::from_slice_with_width(values, width)
    }

    pub fn from_slice_with_width(values: &[u64], width: u32) -> Self {
        let mut v = Self::new(width);
        v.bits = BitVector::with_capacity(values.len() * width as usize);
        for &x in values {
            v.push(x);
        }
        v
    }

    #[inline]
    pub fn push(&mut self, x: u64) {
        debug_assert!(self.width == 64 || x >> self.width == 0);
        self.bits.push_bits(x, self.width);
        self.len += 1;
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        debug_assert!(i < self.len);
        self.bits.get_bits(i * self.width as usize, self.width)
    }

    #[inline]
    pub fn set(&mut self, i: usize, x: u64) {
        debug_assert!(i < self.len);
        self.bits.set_bits(i * self.width as usize, x, self.width);
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn size_in_bytes(&self) -> usize {
        self.bits.size_in_bytes() + 16
    }

    pub fn payload_bits(&self) -> usize {
        self.len * self.width as usize
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_u8(self.width as u8)?;
        w.write_u64::<LE>(self.len as u64)?;
        self.bits.write_to(w)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let width = r.read_u8()? as u32;
        let len = read_len(r)?;
        let bits = BitVector::read_from(r)?;
        if width > 64 || bits.len() != len * width as usize {
            return Err(Error::Format("packed integer array size mismatch".into()));
        }
        Ok(Self { bits, width, len })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packs_and_reads() {
        let xs: Vec<u64> = (0..1000).map(|i| (i * 37) % 513).collect();
        let v = IntVector::from_slice(&xs);
        assert_eq!(v.width(), 10);
        assert_eq!(v.iter().collect::<Vec<_>>(), xs);
        let mut buf = Vec::new();
        v.write_to(&mut buf).unwrap();
        assert_eq!(IntVector::read_from(&mut &buf[..]).unwrap(), v);
    }

    #[test]
    fn zero_width() {
        let v = IntVector::from_slice(&[0, 0, 0]);
        assert_eq!(v.width(), 0);
        assert_eq!(v.get(2), 0);
    }

    #[test]
    fn set_overwrites() {
        let mut v = IntVector::zeros(7, 20);
        v.set(9, 100);
        v.set(10, 127);
        assert_eq!(v.get(9), 100);
        assert_eq!(v.get(10), 127);
        assert_eq!(v.get(8), 0);
    }
}
