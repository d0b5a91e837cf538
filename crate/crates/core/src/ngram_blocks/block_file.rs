//! On-disk record blocks, raw or front coded.
//!
//! Layout: header `{"NGBK", version u16, N u8, records u64, encoding u8,
//! window bytes u32, order u8}` followed by the payload. Raw payloads are
//! `N` little-endian u32 ids plus a u64 count per record. Front-coded
//! payloads are windows of at most `window / (4N + 8)` records:
//!
//! ```text
//! {records u32, id width u8, count width u8, payload bytes u32}
//! first record: key ids, count
//! each next record: l, key ids [l..N), count
//! ```
//!
//! `l` is the length of the key prefix shared with the previous record, where
//! the key is the word tuple in the block's declared order. The byte variant
//! stores `l` in one byte and ids and counts in whole bytes; the bit variant
//! packs `l` in 4 bits and ids and counts in the minimal bit widths.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use succinct::io::{ReadBytesExt, WriteBytesExt, LE};
use succinct::{bit_width, BitVector};

use super::{NGramRecord, RecordBlock, RecordOrder};
use crate::{Error, Result, WordId, MAX_ORDER};

const MAGIC: &[u8; 4] = b"NGBK";
const VERSION: u16 = 1;
const COUNT_OFFSET: u64 = 7;
const RAW_CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    Raw = 0,
    FcByte = 1,
    FcBit = 2,
}

impl Encoding {
    pub fn from_u8(x: u8) -> Option<Self> {
        match x {
            0 => Some(Self::Raw),
            1 => Some(Self::FcByte),
            2 => Some(Self::FcBit),
            _ => None,
        }
    }
}

/// Summary of a finished block file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockInfo {
    pub path: PathBuf,
    pub n: usize,
    pub records: u64,
    pub bytes: u64,
    pub encoding: Encoding,
    pub order: RecordOrder,
}

fn records_per_window(n: usize, window_bytes: u32) -> usize {
    (window_bytes as usize / RecordBlock::record_bytes(n)).max(1)
}

fn bytes_for(x: u64) -> u32 {
    bit_width(x).div_ceil(8).max(1)
}

pub struct BlockWriter {
    out: BufWriter<File>,
    path: PathBuf,
    n: usize,
    encoding: Encoding,
    order: RecordOrder,
    window_records: usize,
    pending: Vec<NGramRecord>,
    records: u64,
    last: Option<NGramRecord>,
    scratch: Vec<u8>,
}

impl BlockWriter {
    pub fn create(path: &Path, n: usize, encoding: Encoding, window_bytes: u32, order: RecordOrder) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&n) {
            return Err(Error::InvalidArgument(format!("order {n} outside 1..=8")));
        }
        let file = File::create(path).map_err(Error::io_at(path))?;
        let mut out = BufWriter::with_capacity(1 << 20, file);
        out.write_all(MAGIC)?;
        out.write_u16::<LE>(VERSION)?;
        out.write_u8(n as u8)?;
        out.write_u64::<LE>(0)?;
        out.write_u8(encoding as u8)?;
        out.write_u32::<LE>(window_bytes)?;
        out.write_u8(order as u8)?;
        Ok(Self {
            out,
            path: path.to_path_buf(),
            n,
            encoding,
            order,
            window_records: records_per_window(n, window_bytes),
            pending: Vec::new(),
            records: 0,
            last: None,
            scratch: Vec::new(),
        })
    }

    pub fn push(&mut self, rec: &NGramRecord) -> Result<()> {
        if rec.order() != self.n {
            return Err(Error::InvalidArgument(format!(
                "record of order {} written to a block of order {}",
                rec.order(),
                self.n
            )));
        }
        if let Some(last) = &self.last {
            if self.order.cmp(last.words(), rec.words()).is_gt() {
                return Err(Error::InvalidArgument(format!(
                    "record {:?} out of {:?} order in {}",
                    rec.words(),
                    self.order,
                    self.path.display()
                )));
            }
        }
        if self.order != RecordOrder::Unsorted {
            self.last = Some(*rec);
        }
        self.records += 1;
        match self.encoding {
            Encoding::Raw => {
                for &w in rec.words() {
                    self.out.write_u32::<LE>(w)?;
                }
                self.out.write_u64::<LE>(rec.count)?;
            }
            _ => {
                self.pending.push(*rec);
                if self.pending.len() == self.window_records {
                    self.flush_window()?;
                }
            }
        }
        Ok(())
    }

    pub fn push_block(&mut self, block: &RecordBlock) -> Result<()> {
        for i in 0..block.len() {
            self.push(&block.record(i))?;
        }
        Ok(())
    }

    fn flush_window(&mut self) -> Result<()> {
        if self.pending.is_empty() {
            return Ok(());
        }
        self.scratch.clear();
        let (id_w, count_w) = match self.encoding {
            Encoding::FcByte => encode_fc_byte(&self.pending, self.order, &mut self.scratch),
            Encoding::FcBit => encode_fc_bit(&self.pending, self.order, &mut self.scratch),
            Encoding::Raw => unreachable!(),
        };
        self.out.write_u32::<LE>(self.pending.len() as u32)?;
        self.out.write_u8(id_w as u8)?;
        self.out.write_u8(count_w as u8)?;
        self.out.write_u32::<LE>(self.scratch.len() as u32)?;
        self.out.write_all(&self.scratch)?;
        self.pending.clear();
        Ok(())
    }

    pub fn finish(mut self) -> Result<BlockInfo> {
        if self.encoding != Encoding::Raw {
            self.flush_window()?;
        }
        self.out.flush()?;
        let mut file = self.out.into_inner().map_err(|e| e.into_error())?;
        file.seek(SeekFrom::Start(COUNT_OFFSET))?;
        file.write_u64::<LE>(self.records)?;
        let bytes = file.seek(SeekFrom::End(0))?;
        Ok(BlockInfo {
            path: self.path,
            n: self.n,
            records: self.records,
            bytes,
            encoding: self.encoding,
            order: self.order,
        })
    }
}

/// Writes `block` to `path` in one go.
pub fn write_block(path: &Path, block: &RecordBlock, encoding: Encoding, window_bytes: u32, order: RecordOrder) -> Result<BlockInfo> {
    let mut w = BlockWriter::create(path, block.order(), encoding, window_bytes, order)?;
    w.push_block(block)?;
    w.finish()
}

fn key_of(rec: &NGramRecord, order: RecordOrder, key: &mut [WordId]) {
    let n = rec.order();
    for (j, k) in key.iter_mut().enumerate() {
        *k = rec.words()[order.key_word(n, j)];
    }
}

fn shared_prefix(a: &[WordId], b: &[WordId]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

fn put_uint(out: &mut Vec<u8>, x: u64, bytes: u32) {
    out.extend_from_slice(&x.to_le_bytes()[..bytes as usize]);
}

fn encode_fc_byte(recs: &[NGramRecord], order: RecordOrder, out: &mut Vec<u8>) -> (u32, u32) {
    let n = recs[0].order();
    let max_id = recs.iter().flat_map(|r| r.words().iter().copied()).max().unwrap_or(0);
    let max_count = recs.iter().map(|r| r.count).max().unwrap_or(0);
    let (bpi, bpc) = (bytes_for(max_id as u64), bytes_for(max_count));
    let mut prev = [0; MAX_ORDER];
    let mut key = [0; MAX_ORDER];
    for (i, r) in recs.iter().enumerate() {
        key_of(r, order, &mut key[..n]);
        let l = if i == 0 {
            0
        } else {
            let l = shared_prefix(&prev[..n], &key[..n]);
            out.push(l as u8);
            l
        };
        for &w in &key[l..n] {
            put_uint(out, w as u64, bpi);
        }
        put_uint(out, r.count, bpc);
        prev = key;
    }
    (bpi, bpc)
}

fn encode_fc_bit(recs: &[NGramRecord], order: RecordOrder, out: &mut Vec<u8>) -> (u32, u32) {
    let n = recs[0].order();
    let max_id = recs.iter().flat_map(|r| r.words().iter().copied()).max().unwrap_or(0);
    let max_count = recs.iter().map(|r| r.count).max().unwrap_or(0);
    let (bpi, bpc) = (bit_width(max_id as u64).max(1), bit_width(max_count).max(1));
    let mut bits = BitVector::new();
    let mut prev = [0; MAX_ORDER];
    let mut key = [0; MAX_ORDER];
    for (i, r) in recs.iter().enumerate() {
        key_of(r, order, &mut key[..n]);
        let l = if i == 0 {
            0
        } else {
            let l = shared_prefix(&prev[..n], &key[..n]);
            bits.push_bits(l as u64, 4);
            l
        };
        for &w in &key[l..n] {
            bits.push_bits(w as u64, bpi);
        }
        bits.push_bits(r.count, bpc);
        prev = key;
    }
    for w in bits.words() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out.truncate(bits.len().div_ceil(8));
    (bpi, bpc)
}

/// Streaming reader; decodes one window at a time.
pub struct BlockReader {
    input: BufReader<File>,
    path: PathBuf,
    n: usize,
    encoding: Encoding,
    order: RecordOrder,
    window_bytes: u32,
    records: u64,
    decoded: u64,
    buf: Vec<NGramRecord>,
    pos: usize,
    last: Option<NGramRecord>,
    payload: Vec<u8>,
    failed: bool,
}

impl BlockReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(Error::io_at(path))?;
        let mut input = BufReader::with_capacity(1 << 20, file);
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(Error::io_at(path))?;
        if &magic != MAGIC {
            return Err(Error::Corrupt(format!("{} is not a block file", path.display())));
        }
        let version = input.read_u16::<LE>()?;
        if version != VERSION {
            return Err(Error::Corrupt(format!("unsupported block version {version}")));
        }
        let n = input.read_u8()? as usize;
        let records = input.read_u64::<LE>()?;
        let encoding = Encoding::from_u8(input.read_u8()?).ok_or_else(|| Error::Corrupt("unknown block encoding".into()))?;
        let window_bytes = input.read_u32::<LE>()?;
        let order = RecordOrder::from_u8(input.read_u8()?).ok_or_else(|| Error::Corrupt("unknown block order".into()))?;
        if !(1..=MAX_ORDER).contains(&n) {
            return Err(Error::Corrupt(format!("block order {n} outside 1..=8")));
        }
        Ok(Self {
            input,
            path: path.to_path_buf(),
            n,
            encoding,
            order,
            window_bytes,
            records,
            decoded: 0,
            buf: Vec::new(),
            pos: 0,
            last: None,
            payload: Vec::new(),
            failed: false,
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn record_order(&self) -> RecordOrder {
        self.order
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn window_bytes(&self) -> u32 {
        self.window_bytes
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Decodes the next window (or raw chunk) into the buffer.
    fn fill(&mut self) -> Result<()> {
        self.buf.clear();
        self.pos = 0;
        let n = self.n;
        match self.encoding {
            Encoding::Raw => {
                let take = (self.records - self.decoded).min(RAW_CHUNK as u64) as usize;
                let mut words = [0u32; MAX_ORDER];
                for _ in 0..take {
                    for w in words.iter_mut().take(n) {
                        *w = self.input.read_u32::<LE>()?;
                    }
                    let c = self.input.read_u64::<LE>()?;
                    self.buf.push(NGramRecord::new(&words[..n], c));
                }
            }
            enc => {
                let count = self.input.read_u32::<LE>()? as usize;
                let id_w = self.input.read_u8()? as u32;
                let count_w = self.input.read_u8()? as u32;
                let len = self.input.read_u32::<LE>()? as usize;
                if count == 0 || self.decoded + count as u64 > self.records {
                    return Err(Error::Corrupt(format!("bad window size in {}", self.path.display())));
                }
                self.payload.resize(len, 0);
                self.input.read_exact(&mut self.payload)?;
                let ok = match enc {
                    Encoding::FcByte => decode_fc_byte(&self.payload, n, count, id_w, count_w, self.order, &mut self.buf),
                    _ => decode_fc_bit(&self.payload, n, count, id_w, count_w, self.order, &mut self.buf),
                };
                if !ok {
                    return Err(Error::Corrupt(format!("truncated window in {}", self.path.display())));
                }
            }
        }
        self.decoded += self.buf.len() as u64;
        Ok(())
    }

    pub fn read_all(path: &Path) -> Result<RecordBlock> {
        let r = Self::open(path)?;
        let mut b = RecordBlock::with_capacity(r.n, r.records as usize);
        for rec in r {
            let rec = rec?;
            b.push(rec.words(), rec.count);
        }
        Ok(b)
    }
}

impl Iterator for BlockReader {
    type Item = Result<NGramRecord>;

    fn next(&mut self) -> Option<Result<NGramRecord>> {
        if self.failed {
            return None;
        }
        if self.pos == self.buf.len() {
            if self.decoded == self.records {
                return None;
            }
            if let Err(e) = self.fill() {
                self.failed = true;
                return Some(Err(e));
            }
        }
        let rec = self.buf[self.pos];
        self.pos += 1;
        if self.order != RecordOrder::Unsorted {
            if let Some(last) = &self.last {
                if self.order.cmp(last.words(), rec.words()).is_gt() {
                    self.failed = true;
                    return Some(Err(Error::Corrupt(format!(
                        "{} declares {:?} order but {:?} follows {:?}",
                        self.path.display(),
                        self.order,
                        rec.words(),
                        last.words()
                    ))));
                }
            }
            self.last = Some(rec);
        }
        Some(Ok(rec))
    }
}

fn from_key(key: &[WordId], order: RecordOrder, count: u64) -> NGramRecord {
    let n = key.len();
    let mut words = [0; MAX_ORDER];
    for (j, &k) in key.iter().enumerate() {
        words[order.key_word(n, j)] = k;
    }
    NGramRecord::new(&words[..n], count)
}

fn decode_fc_byte(p: &[u8], n: usize, count: usize, bpi: u32, bpc: u32, order: RecordOrder, out: &mut Vec<NGramRecord>) -> bool {
    if !(1..=4).contains(&bpi) || !(1..=8).contains(&bpc) {
        return false;
    }
    let get = |pos: &mut usize, bytes: u32| -> Option<u64> {
        let end = *pos + bytes as usize;
        let s = p.get(*pos..end)?;
        let mut b = [0u8; 8];
        b[..s.len()].copy_from_slice(s);
        *pos = end;
        Some(u64::from_le_bytes(b))
    };
    let mut pos = 0;
    let mut key = [0; MAX_ORDER];
    for i in 0..count {
        let l = if i == 0 {
            0
        } else {
            let Some(&l) = p.get(pos) else { return false };
            pos += 1;
            l as usize
        };
        if l > n {
            return false;
        }
        for k in key.iter_mut().take(n).skip(l) {
            let Some(w) = get(&mut pos, bpi) else { return false };
            *k = w as WordId;
        }
        let Some(c) = get(&mut pos, bpc) else { return false };
        out.push(from_key(&key[..n], order, c));
    }
    pos == p.len()
}

fn decode_fc_bit(p: &[u8], n: usize, count: usize, bpi: u32, bpc: u32, order: RecordOrder, out: &mut Vec<NGramRecord>) -> bool {
    if !(1..=32).contains(&bpi) || !(1..=64).contains(&bpc) {
        return false;
    }
    let mut bits = BitVector::new();
    for chunk in p.chunks(8) {
        let mut b = [0u8; 8];
        b[..chunk.len()].copy_from_slice(chunk);
        bits.push_bits(u64::from_le_bytes(b), 8 * chunk.len() as u32);
    }
    let mut pos = 0usize;
    let mut take = |w: u32| -> Option<u64> {
        if pos + w as usize > bits.len() {
            return None;
        }
        let v = bits.get_bits(pos, w);
        pos += w as usize;
        Some(v)
    };
    let mut key = [0; MAX_ORDER];
    for i in 0..count {
        let l = if i == 0 {
            0
        } else {
            match take(4) {
                Some(l) => l as usize,
                None => return false,
            }
        };
        if l > n {
            return false;
        }
        for k in key.iter_mut().take(n).skip(l) {
            let Some(w) = take(bpi) else { return false };
            *k = w as WordId;
        }
        let Some(c) = take(bpc) else { return false };
        out.push(from_key(&key[..n], order, c));
    }
    true
}

#[cfg(test)]
mod tests {
    use super::super::radix_sort_context;
    use super::*;
    use proptest::prelude::*;

    fn round_trip(block: &RecordBlock, enc: Encoding, window: u32, order: RecordOrder) -> (RecordBlock, BlockInfo) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.ngbk");
        let info = write_block(&path, block, enc, window, order).unwrap();
        (BlockReader::read_all(&path).unwrap(), info)
    }

    #[test]
    fn single_record_window() {
        let mut b = RecordBlock::new(3);
        b.push(&[5, 6, 7], 9);
        let mut out = Vec::new();
        encode_fc_byte(&[b.record(0)], RecordOrder::Context, &mut out);
        // three one-byte ids and a one-byte count, no prefix length
        assert_eq!(out, vec![6, 5, 7, 9]);
        for enc in [Encoding::Raw, Encoding::FcByte, Encoding::FcBit] {
            assert_eq!(round_trip(&b, enc, 1024, RecordOrder::Context).0, b);
        }
    }

    #[test]
    fn same_context_pair_shares_all_but_last() {
        let recs = [NGramRecord::new(&[1, 2, 3], 4), NGramRecord::new(&[1, 2, 8], 1)];
        let mut out = Vec::new();
        encode_fc_byte(&recs, RecordOrder::Context, &mut out);
        // first: key (2,1,3) count 4; second: l = N-1 = 2, suffix id 8, count 1
        assert_eq!(out, vec![2, 1, 3, 4, 2, 8, 1]);
    }

    #[test]
    fn reader_rejects_misordered_raw_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ngbk");
        let mut w = BlockWriter::create(&path, 2, Encoding::Raw, 1024, RecordOrder::Unsorted).unwrap();
        w.push(&NGramRecord::new(&[1, 0], 1)).unwrap();
        w.push(&NGramRecord::new(&[0, 0], 1)).unwrap();
        w.finish().unwrap();
        // flip the declared order byte to context
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[20] = RecordOrder::Context as u8;
        std::fs::write(&path, &bytes).unwrap();
        let res: Result<Vec<_>> = BlockReader::open(&path).unwrap().collect();
        assert!(matches!(res, Err(Error::Corrupt(_))));
    }

    #[test]
    fn writer_rejects_misordered_input() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = BlockWriter::create(&dir.path().join("y"), 2, Encoding::FcByte, 1024, RecordOrder::Context).unwrap();
        w.push(&NGramRecord::new(&[1, 0], 1)).unwrap();
        assert!(w.push(&NGramRecord::new(&[0, 0], 1)).is_err());
    }

    #[test]
    fn header_fields() {
        let mut b = RecordBlock::new(2);
        b.push(&[0, 1], 1);
        b.push(&[0, 2], 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h");
        let info = write_block(&path, &b, Encoding::FcBit, 4096, RecordOrder::Context).unwrap();
        assert_eq!(info.records, 2);
        let r = BlockReader::open(&path).unwrap();
        assert_eq!((r.order(), r.records(), r.encoding(), r.window_bytes(), r.record_order()), (2, 2, Encoding::FcBit, 4096, RecordOrder::Context));
    }

    proptest! {
        #[test]
        fn round_trips(n in 1usize..=5, seed in any::<u64>(), window in 1u32..400, enc in 0u8..3) {
            let mut x = seed | 1;
            let mut b = RecordBlock::new(n);
            for _ in 0..(seed % 500) {
                x ^= x << 13; x ^= x >> 7; x ^= x << 17;
                let w: Vec<u32> = (0..n).map(|i| ((x >> (7 * i)) % 40) as u32 * ((x % 3) as u32 * 1000 + 1)).collect();
                b.push(&w, (x >> 50) + 1);
            }
            radix_sort_context(&mut b, 1);
            let enc = Encoding::from_u8(enc).unwrap();
            let (back, info) = round_trip(&b, enc, window, RecordOrder::Context);
            prop_assert_eq!(info.records as usize, b.len());
            prop_assert_eq!(back, b);
        }
    }
}
