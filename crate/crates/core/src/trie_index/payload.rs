//! Per-level payloads: count ranks into unique-value arrays, and binned
//! probability or backoff values.

use std::collections::HashMap;
use std::io::{Read, Write};

use succinct::io::{read_u64s, write_u64s, ReadBytesExt, WriteBytesExt, LE};
use succinct::{bit_width, CodewordArray, EliasFano, IntVector, MonotoneSequence, PartitionedEliasFano};

use crate::{Error, Result};

/// How count ranks are stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexEncoding {
    Codewords = 0,
    PrefixEf = 1,
    PrefixPef = 2,
}

impl IndexEncoding {
    pub fn from_u8(x: u8) -> Option<Self> {
        match x {
            0 => Some(Self::Codewords),
            1 => Some(Self::PrefixEf),
            2 => Some(Self::PrefixPef),
            _ => None,
        }
    }
}

/// Distinct values ordered by decreasing frequency of use, plus the rank of
/// each input value.
pub fn unique_values(values: &[u64]) -> (Vec<u64>, Vec<u64>) {
    let mut freq: HashMap<u64, u64> = HashMap::new();
    for &v in values {
        *freq.entry(v).or_insert(0) += 1;
    }
    let mut distinct: Vec<(u64, u64)> = freq.into_iter().collect();
    distinct.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let rank: HashMap<u64, u64> = distinct.iter().enumerate().map(|(i, &(v, _))| (v, i as u64)).collect();
    let ranks = values.iter().map(|v| rank[v]).collect();
    (distinct.into_iter().map(|(v, _)| v).collect(), ranks)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexStore {
    Codewords(CodewordArray),
    PrefixEf(EliasFano),
    PrefixPef(PartitionedEliasFano),
}

impl IndexStore {
    pub fn new(ranks: &[u64], encoding: IndexEncoding, block_size: usize) -> Result<Self> {
        Ok(match encoding {
            IndexEncoding::Codewords => Self::Codewords(CodewordArray::new(ranks)),
            _ => {
                let mut sums = Vec::with_capacity(ranks.len());
                let mut acc = 0u64;
                for &r in ranks {
                    acc += r;
                    sums.push(acc);
                }
                if encoding == IndexEncoding::PrefixEf {
                    Self::PrefixEf(EliasFano::new(&sums, acc + 1)?)
                } else {
                    Self::PrefixPef(PartitionedEliasFano::new(&sums, acc + 1, block_size)?)
                }
            }
        })
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        match self {
            Self::Codewords(c) => c.get(i),
            Self::PrefixEf(s) => s.get(i) - if i == 0 { 0 } else { s.get(i - 1) },
            Self::PrefixPef(s) => s.get(i) - if i == 0 { 0 } else { s.get(i - 1) },
        }
    }

    pub fn payload_bits(&self) -> usize {
        match self {
            Self::Codewords(c) => c.payload_bits(),
            Self::PrefixEf(s) => s.payload_bits(),
            Self::PrefixPef(s) => s.payload_bits(),
        }
    }

    pub fn size_in_bytes(&self) -> usize {
        match self {
            Self::Codewords(c) => c.size_in_bytes(),
            Self::PrefixEf(s) => s.size_in_bytes(),
            Self::PrefixPef(s) => s.size_in_bytes(),
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        match self {
            Self::Codewords(c) => {
                w.write_u8(IndexEncoding::Codewords as u8)?;
                c.write_to(w)?;
            }
            Self::PrefixEf(s) => {
                w.write_u8(IndexEncoding::PrefixEf as u8)?;
                s.write_to(w)?;
            }
            Self::PrefixPef(s) => {
                w.write_u8(IndexEncoding::PrefixPef as u8)?;
                s.write_to(w)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        Ok(match IndexEncoding::from_u8(r.read_u8()?) {
            Some(IndexEncoding::Codewords) => Self::Codewords(CodewordArray::read_from(r)?),
            Some(IndexEncoding::PrefixEf) => Self::PrefixEf(EliasFano::read_from(r)?),
            Some(IndexEncoding::PrefixPef) => Self::PrefixPef(PartitionedEliasFano::read_from(r)?),
            None => return Err(Error::Corrupt("unknown index encoding".into())),
        })
    }
}

/// Count payload of one level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountPayload {
    pub values: Vec<u64>,
    pub ranks: IndexStore,
}

impl CountPayload {
    pub fn new(counts: &[u64], encoding: IndexEncoding, block_size: usize) -> Result<Self> {
        let (values, ranks) = unique_values(counts);
        Ok(Self {
            values,
            ranks: IndexStore::new(&ranks, encoding, block_size)?,
        })
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        self.values[self.ranks.get(i) as usize]
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_u64s(w, &self.values)?;
        self.ranks.write_to(w)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let values = read_u64s(r)?;
        let ranks = IndexStore::read_from(r)?;
        Ok(Self { values, ranks })
    }
}

/// Codebook of bin means over sorted values.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantizer {
    pub codebook: Vec<f32>,
}

impl Quantizer {
    /// Sorts the values into at most `2^q` equal-size bins (the last may be
    /// smaller) and returns the bin means and the bin of every input.
    pub fn fit(values: &[f64], q: u32) -> Result<(Self, Vec<u64>)> {
        if values.is_empty() {
            return Err(Error::Empty("quantization of zero values".into()));
        }
        if !(1..=32).contains(&q) {
            return Err(Error::InvalidArgument(format!("quantization bits {q} outside 1..=32")));
        }
        let n = values.len();
        let bin = n.div_ceil(1usize << q).max(1);
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]).then(a.cmp(&b)));
        let mut codebook = Vec::with_capacity(n.div_ceil(bin));
        let mut index = vec![0u64; n];
        for (b, chunk) in order.chunks(bin).enumerate() {
            let sum: f64 = chunk.iter().map(|&i| values[i as usize]).sum();
            codebook.push((sum / chunk.len() as f64) as f32);
            for &i in chunk {
                index[i as usize] = b as u64;
            }
        }
        Ok((Self { codebook }, index))
    }

    pub fn bits(&self) -> u32 {
        bit_width(self.codebook.len().saturating_sub(1) as u64)
    }
}

/// A float stream stored either as raw f32 or as quantized indexes.
#[derive(Clone, Debug, PartialEq)]
pub enum FloatColumn {
    Plain(Vec<f32>),
    Quantized { codebook: Vec<f32>, indexes: IntVector },
}

impl FloatColumn {
    pub fn plain(values: &[f64]) -> Self {
        Self::Plain(values.iter().map(|&v| v as f32).collect())
    }

    pub fn quantized(values: &[f64], q: u32) -> Result<Self> {
        if values.is_empty() {
            return Ok(Self::Plain(Vec::new()));
        }
        let (quant, idx) = Quantizer::fit(values, q)?;
        let indexes = IntVector::from_slice_with_width(&idx, quant.bits());
        Ok(Self::Quantized {
            codebook: quant.codebook,
            indexes,
        })
    }

    #[inline]
    pub fn get(&self, i: usize) -> f32 {
        match self {
            Self::Plain(v) => v[i],
            Self::Quantized { codebook, indexes } => codebook[indexes.get(i) as usize],
        }
    }

    pub fn payload_bits(&self) -> usize {
        match self {
            Self::Plain(v) => v.len() * 32,
            Self::Quantized { codebook, indexes } => indexes.payload_bits() + codebook.len() * 32,
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        match self {
            Self::Plain(v) => {
                w.write_u8(0)?;
                w.write_u64::<LE>(v.len() as u64)?;
                for &x in v {
                    w.write_f32::<LE>(x)?;
                }
            }
            Self::Quantized { codebook, indexes } => {
                w.write_u8(1)?;
                w.write_u64::<LE>(codebook.len() as u64)?;
                for &x in codebook {
                    w.write_f32::<LE>(x)?;
                }
                indexes.write_to(w)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let tag = r.read_u8()?;
        let n = succinct::io::read_len(r)?;
        let mut v = vec![0f32; n];
        r.read_f32_into::<LE>(&mut v)?;
        match tag {
            0 => Ok(Self::Plain(v)),
            1 => {
                let indexes = IntVector::read_from(r)?;
                if indexes.iter().any(|i| i as usize >= v.len()) {
                    return Err(Error::Corrupt("quantized index outside codebook".into()));
                }
                Ok(Self::Quantized { codebook: v, indexes })
            }
            _ => Err(Error::Corrupt("unknown float column tag".into())),
        }
    }
}
