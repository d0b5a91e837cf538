//! Token to identifier mapping.
//!
//! Ids are assigned by decreasing occurrence, ties broken by byte order of
//! the token. Lookup goes through a minimal perfect hash and a per-slot
//! fingerprint, so unknown tokens are rejected without storing a hash table.

pub mod mph;

use std::io::{Read, Write};

use succinct::io::{read_bytes, read_len, read_magic, read_u64s, write_bytes, write_magic, write_u64s, ReadBytesExt, WriteBytesExt, LE};
use succinct::IntVector;
use xxhash_rust::xxh3::xxh3_64_with_seed;

pub use mph::MinimalPerfectHash;

use crate::{Error, Result, WordId};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

const MAGIC: &[u8; 4] = b"VOCB";
const VERSION: u16 = 1;
const DEFAULT_SEED: u64 = 0x5EED_0F_1D5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    mph: MinimalPerfectHash,
    slot_to_id: IntVector,
    fingerprints: Vec<u64>,
    fingerprint_seed: u64,
    unk: Option<WordId>,
}

impl Vocabulary {
    /// Builds from `(token, occurrences)` pairs. With `with_unk`, `<unk>` is
    /// added with occurrence 0 unless already present.
    pub fn build<S: AsRef<str>>(entries: &[(S, u64)], with_unk: bool) -> Result<Self> {
        if entries.is_empty() && !with_unk {
            return Err(Error::Empty("vocabulary without tokens".into()));
        }
        let mut sorted: Vec<(&str, u64)> = entries.iter().map(|(t, c)| (t.as_ref(), *c)).collect();
        if with_unk && !sorted.iter().any(|(t, _)| *t == UNK) {
            sorted.push((UNK, 0));
        }
        sorted.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let tokens: Vec<String> = sorted.iter().map(|(t, _)| t.to_string()).collect();
        Self::from_ordered(tokens, DEFAULT_SEED)
    }

    /// Builds with ids given by position in `tokens`.
    pub fn from_ordered(tokens: Vec<String>, seed: u64) -> Result<Self> {
        if tokens.len() >= u32::MAX as usize {
            return Err(Error::InvalidArgument("vocabulary too large".into()));
        }
        let mph = MinimalPerfectHash::new(&tokens.iter().map(|t| t.as_bytes()).collect::<Vec<_>>(), seed)?;
        let v = tokens.len();
        let fingerprint_seed = seed ^ 0xF1A6_E7F1_A6E7;
        let mut slot_ids = vec![0u64; v];
        let mut fingerprints = vec![0u64; v];
        for (id, t) in tokens.iter().enumerate() {
            let s = mph.hash(t.as_bytes());
            slot_ids[s] = id as u64;
            fingerprints[s] = xxh3_64_with_seed(t.as_bytes(), fingerprint_seed);
        }
        let unk = tokens.iter().position(|t| t == UNK).map(|i| i as WordId);
        Ok(Self {
            tokens,
            mph,
            slot_to_id: IntVector::from_slice(&slot_ids),
            fingerprints,
            fingerprint_seed,
            unk,
        })
    }

    /// Number of ids, including `<unk>` when present.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    #[inline]
    pub fn lookup(&self, token: &str) -> Option<WordId> {
        let s = self.mph.hash(token.as_bytes());
        (self.fingerprints[s] == xxh3_64_with_seed(token.as_bytes(), self.fingerprint_seed))
            .then(|| self.slot_to_id.get(s) as WordId)
    }

    /// Id of `token`, or of `<unk>` when unknown.
    pub fn lookup_or_unk(&self, token: &str) -> Option<WordId> {
        self.lookup(token).or(self.unk)
    }

    pub fn token(&self, id: WordId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn unk(&self) -> Option<WordId> {
        self.unk
    }

    pub fn size_in_bytes(&self) -> usize {
        self.mph.size_in_bytes()
            + self.slot_to_id.size_in_bytes()
            + self.fingerprints.len() * 8
            + self.tokens.iter().map(|t| t.len() + 8).sum::<usize>()
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_magic(w, MAGIC, VERSION)?;
        w.write_u64::<LE>(self.tokens.len() as u64)?;
        w.write_u64::<LE>(self.fingerprint_seed)?;
        self.mph.write_to(w)?;
        self.slot_to_id.write_to(w)?;
        write_u64s(w, &self.fingerprints)?;
        for t in &self.tokens {
            write_bytes(w, t.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        read_magic(r, MAGIC, VERSION)?;
        let v = read_len(r)?;
        let fingerprint_seed = r.read_u64::<LE>()?;
        let mph = MinimalPerfectHash::read_from(r)?;
        let slot_to_id = IntVector::read_from(r)?;
        let fingerprints = read_u64s(r)?;
        let mut tokens = Vec::with_capacity(v);
        for _ in 0..v {
            let b = read_bytes(r)?;
            tokens.push(String::from_utf8(b).map_err(|e| Error::Corrupt(format!("token is not UTF-8: {e}")))?);
        }
        if mph.len() != v || slot_to_id.len() != v || fingerprints.len() != v {
            return Err(Error::Corrupt("vocabulary tables do not match its size".into()));
        }
        let unk = tokens.iter().position(|t| t == UNK).map(|i| i as WordId);
        Ok(Self {
            tokens,
            mph,
            slot_to_id,
            fingerprints,
            fingerprint_seed,
            unk,
        })
    }
}
