//! One minimal perfect hash table per order.
//!
//! A gram's key is the little-endian concatenation of its 4-byte ids. Slot
//! `h_n(key)` holds a 64-bit fingerprint of the key and an index into the
//! order's array of distinct counts.

use std::io::{Read, Write};
use std::path::Path;

use succinct::io::{read_magic, read_u32s, read_u64s, write_magic, write_u32s, write_u64s, ReadBytesExt, WriteBytesExt, LE};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::trie_index::{LevelInput, LevelValues};
use crate::vocabulary::{MinimalPerfectHash, Vocabulary};
use crate::{Error, Result, WordId, MAX_ORDER};

const MAGIC: &[u8; 4] = b"MPHT";
const VERSION: u16 = 1;
const MPH_SEED: u64 = 0x0DD5_EED5;
const FINGERPRINT_SEED: u64 = 0xF00D_CAFE_1234_5678;

#[derive(Clone, Debug, PartialEq, Eq)]
struct OrderTable {
    mph: MinimalPerfectHash,
    fingerprints: Vec<u64>,
    value_index: Vec<u32>,
    values: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashIndex {
    order: usize,
    fingerprint_seed: u64,
    vocab: Vocabulary,
    tables: Vec<OrderTable>,
}

#[inline]
fn key_bytes(gram: &[WordId], buf: &mut [u8; 4 * MAX_ORDER]) -> usize {
    for (i, w) in gram.iter().enumerate() {
        buf[4 * i..4 * i + 4].copy_from_slice(&w.to_le_bytes());
    }
    4 * gram.len()
}

fn duplicate_gram(paths: &[WordId], n: usize) -> Error {
    let mut grams: Vec<&[WordId]> = paths.chunks_exact(n).collect();
    grams.sort_unstable();
    let dup = grams.windows(2).find(|w| w[0] == w[1]).map_or(&[][..], |w| w[0]);
    Error::DuplicateKey(format!("order-{n} gram {dup:?}"))
}

impl HashIndex {
    /// Builds from count levels in text order (level `n` holds `n` ids per
    /// gram). Grams must be distinct within a level.
    pub fn build(vocab: Vocabulary, levels: &[LevelInput]) -> Result<Self> {
        if levels.is_empty() || levels.len() > MAX_ORDER {
            return Err(Error::Build(format!("unsupported order {}", levels.len())));
        }
        let mut tables = Vec::with_capacity(levels.len());
        for (i, level) in levels.iter().enumerate() {
            let n = i + 1;
            let LevelValues::Counts(counts) = &level.values else {
                return Err(Error::Build("hash index stores counts only".into()));
            };
            if level.paths.len() != n * counts.len() {
                return Err(Error::Build(format!("level {n}: {} ids for {} counts", level.paths.len(), counts.len())));
            }
            if counts.is_empty() {
                return Err(Error::Build(format!("level {n} is empty")));
            }
            let keys: Vec<Vec<u8>> = level
                .paths
                .chunks_exact(n)
                .map(|g| g.iter().flat_map(|w| w.to_le_bytes()).collect())
                .collect();
            let mph = MinimalPerfectHash::new(&keys, MPH_SEED ^ n as u64).map_err(|e| match e {
                Error::DuplicateKey(_) => duplicate_gram(&level.paths, n),
                e => e,
            })?;
            let mut values = counts.clone();
            values.sort_unstable();
            values.dedup();
            let mut fingerprints = vec![0u64; keys.len()];
            let mut value_index = vec![0u32; keys.len()];
            for (key, &c) in keys.iter().zip(counts) {
                let s = mph.hash(key);
                fingerprints[s] = xxh3_64_with_seed(key, FINGERPRINT_SEED);
                value_index[s] = values.binary_search(&c).unwrap() as u32;
            }
            tables.push(OrderTable {
                mph,
                fingerprints,
                value_index,
                values,
            });
        }
        Ok(Self {
            order: levels.len(),
            fingerprint_seed: FINGERPRINT_SEED,
            vocab,
            tables,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Number of slots of order `n`, equal to its number of grams.
    pub fn len(&self, n: usize) -> usize {
        self.tables[n - 1].fingerprints.len()
    }

    /// Count of the gram with ids `gram`, or `None`.
    #[inline]
    pub fn get(&self, gram: &[WordId]) -> Option<u64> {
        let n = gram.len();
        if n == 0 || n > self.order {
            return None;
        }
        let mut buf = [0u8; 4 * MAX_ORDER];
        let len = key_bytes(gram, &mut buf);
        let key = &buf[..len];
        let t = &self.tables[n - 1];
        let s = t.mph.hash(key);
        (t.fingerprints[s] == xxh3_64_with_seed(key, self.fingerprint_seed)).then(|| t.values[t.value_index[s] as usize])
    }

    /// Count of the gram spelled by `tokens`; out-of-vocabulary tokens miss
    /// without touching the tables.
    pub fn lookup(&self, tokens: &[&str]) -> Option<u64> {
        if tokens.is_empty() || tokens.len() > self.order {
            return None;
        }
        let mut ids = [0; MAX_ORDER];
        for (id, t) in ids.iter_mut().zip(tokens) {
            *id = self.vocab.lookup(t)?;
        }
        self.get(&ids[..tokens.len()])
    }

    /// Bytes of order `n`: hash function, fingerprints, value indexes and values.
    pub fn order_bytes(&self, n: usize) -> usize {
        let t = &self.tables[n - 1];
        t.mph.size_in_bytes() + t.fingerprints.len() * 8 + t.value_index.len() * 4 + t.values.len() * 8
    }

    pub fn size_in_bytes(&self) -> usize {
        self.vocab.size_in_bytes() + (1..=self.order).map(|n| self.order_bytes(n)).sum::<usize>()
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_magic(w, MAGIC, VERSION)?;
        w.write_u8(self.order as u8)?;
        w.write_u64::<LE>(self.fingerprint_seed)?;
        self.vocab.write_to(w)?;
        for t in &self.tables {
            t.mph.write_to(w)?;
            write_u64s(w, &t.fingerprints)?;
            write_u32s(w, &t.value_index)?;
            write_u64s(w, &t.values)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        read_magic(r, MAGIC, VERSION)?;
        let order = r.read_u8()? as usize;
        if order == 0 || order > MAX_ORDER {
            return Err(Error::Corrupt(format!("hash index order {order}")));
        }
        let fingerprint_seed = r.read_u64::<LE>()?;
        let vocab = Vocabulary::read_from(r)?;
        let mut tables = Vec::with_capacity(order);
        for _ in 0..order {
            let mph = MinimalPerfectHash::read_from(r)?;
            let fingerprints = read_u64s(r)?;
            let value_index = read_u32s(r)?;
            let values = read_u64s(r)?;
            if fingerprints.len() != mph.len() || value_index.len() != mph.len() || value_index.iter().any(|&i| i as usize >= values.len()) {
                return Err(Error::Corrupt("hash table arrays disagree".into()));
            }
            tables.push(OrderTable {
                mph,
                fingerprints,
                value_index,
                values,
            });
        }
        Ok(Self {
            order,
            fingerprint_seed,
            vocab,
            tables,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(Error::io_at(path))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush().map_err(Error::io_at(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(Error::io_at(path))?;
        Self::read_from(&mut std::io::BufReader::new(f))
    }
}
