//! Elias-Fano trie over sorted n-gram paths.
//!
//! Level `n` stores one node per n-gram. Nodes are sorted by path, where the
//! path of a gram is its word tuple (forward tries) or the reversed tuple
//! (reversed tries). A node's children form one contiguous range of the next
//! level, delimited by the parent's pointer pair. Within a range, child ids
//! are strictly increasing; adding the last stored value of the previous
//! range (range-wise prefix sums) makes the whole level one monotone sequence
//! for Elias-Fano.
//!
//! With remapping order `k > 0`, the id of a node at level `n >= k + 2` is
//! replaced by its position among the children of its last `k` path
//! symbols, which shrinks the universe of deep levels.
//!
//! ```
//! use efgram::trie_index::{LevelInput, LevelValues, TrieConfig, TrieIndex};
//! use efgram::vocabulary::Vocabulary;
//!
//! let vocab = Vocabulary::build(&[("a", 2), ("b", 1)], false).unwrap();
//! let levels = vec![
//!     LevelInput { paths: vec![0, 1], values: LevelValues::Counts(vec![2, 1]) },
//!     LevelInput { paths: vec![0, 1], values: LevelValues::Counts(vec![1]) },
//! ];
//! let trie = TrieIndex::from_grams(vocab, levels, &TrieConfig::default()).unwrap();
//! assert_eq!(trie.lookup_count(&["a", "b"]), Some(1));
//! assert_eq!(trie.lookup_count(&["b", "a"]), None);
//! ```

pub mod payload;

use std::io::{Read, Write};

use succinct::io::{read_len, read_magic, write_magic, ReadBytesExt, WriteBytesExt, LE};
use succinct::{EliasFano, MonotoneSequence, PartitionedEliasFano};

use crate::vocabulary::Vocabulary;
use crate::{Error, Result, WordId, MAX_ORDER};
pub use payload::{CountPayload, FloatColumn, IndexEncoding, IndexStore, Quantizer};

const MAGIC: &[u8; 4] = b"TRIE";
const VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward = 0,
    Reversed = 1,
}

#[derive(Clone, Debug)]
pub struct TrieConfig {
    pub remap: usize,
    pub direction: Direction,
    pub block_size_l2: usize,
    pub block_size_rest: usize,
    pub index_encoding: IndexEncoding,
    /// Bits per quantized probability or backoff; 32 stores plain f32.
    pub quant_bits: u32,
}

impl Default for TrieConfig {
    fn default() -> Self {
        Self {
            remap: 0,
            direction: Direction::Forward,
            block_size_l2: 64,
            block_size_rest: 128,
            index_encoding: IndexEncoding::Codewords,
            quant_bits: 8,
        }
    }
}

/// Values attached to the grams of one level.
#[derive(Clone, Debug, PartialEq)]
pub enum LevelValues {
    Counts(Vec<u64>),
    Probs { prob: Vec<f64>, backoff: Option<Vec<f64>> },
}

impl LevelValues {
    fn len(&self) -> usize {
        match self {
            Self::Counts(c) => c.len(),
            Self::Probs { prob, .. } => prob.len(),
        }
    }

    fn permute(&self, perm: &[usize]) -> Self {
        match self {
            Self::Counts(c) => Self::Counts(perm.iter().map(|&i| c[i]).collect()),
            Self::Probs { prob, backoff } => Self::Probs {
                prob: perm.iter().map(|&i| prob[i]).collect(),
                backoff: backoff.as_ref().map(|b| perm.iter().map(|&i| b[i]).collect()),
            },
        }
    }
}

/// One level of build input: `paths` holds `n` ids per gram, back to back.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelInput {
    pub paths: Vec<WordId>,
    pub values: LevelValues,
}

#[derive(Clone, Debug, PartialEq)]
enum LevelPayload {
    Counts(CountPayload),
    Probs { prob: FloatColumn, backoff: Option<FloatColumn> },
}

#[derive(Clone, Debug, PartialEq)]
struct Level {
    len: usize,
    ids: Option<PartitionedEliasFano>,
    pointers: Option<EliasFano>,
    payload: LevelPayload,
}

/// One level as node symbols plus the number of children of every node of
/// the level above (empty for level 1).
#[derive(Clone, Debug, PartialEq)]
pub struct LevelLayout {
    pub symbols: Vec<WordId>,
    pub children: Vec<u64>,
    pub values: LevelValues,
}

/// Value stored for a gram.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Payload {
    Count(u64),
    Prob { prob: f32, backoff: Option<f32> },
}

/// Per-level space accounting.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LevelStats {
    pub entries: usize,
    pub id_bits: usize,
    pub pointer_bits: usize,
    pub value_bits: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrieIndex {
    order: usize,
    remap: usize,
    direction: Direction,
    quant_bits: u32,
    vocab: Vocabulary,
    levels: Vec<Level>,
}

fn fmt_path(path: &[WordId], vocab: &Vocabulary) -> String {
    path.iter()
        .map(|&w| if (w as usize) < vocab.len() { vocab.token(w).to_string() } else { format!("#{w}") })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Walks already-mapped symbols from level 1; returns the final position and
/// the start of the range it was found in.
#[inline]
fn walk(levels: &[Level], syms: &[u64]) -> Option<(usize, usize)> {
    let mut pos = syms[0] as usize;
    if pos >= levels.first()?.len {
        return None;
    }
    let mut b = 0;
    for (n, &sym) in syms.iter().enumerate().skip(1) {
        let (lo, hi) = range(levels, n - 1, pos)?;
        b = lo;
        pos = find_child(levels, n, lo, hi, sym)?;
    }
    Some((pos, b))
}

#[inline]
fn range(levels: &[Level], level: usize, pos: usize) -> Option<(usize, usize)> {
    let p = levels[level].pointers.as_ref()?;
    Some((p.get(pos) as usize, p.get(pos + 1) as usize))
}

#[inline]
fn find_child(levels: &[Level], level: usize, lo: usize, hi: usize, sym: u64) -> Option<usize> {
    if lo == hi {
        return None;
    }
    let ids = levels.get(level)?.ids.as_ref()?;
    let base = if lo == 0 { 0 } else { ids.get(lo - 1) };
    ids.find(lo, hi, base + sym)
}

fn check_path_ids(path: &[WordId], v: usize, vocab: &Vocabulary) -> Result<()> {
    if let Some(&w) = path.iter().find(|&&w| w as usize >= v) {
        return Err(Error::Build(format!("id {w} >= V = {v} in gram [{}]", fmt_path(path, vocab))));
    }
    Ok(())
}

impl TrieIndex {
    /// Builds from levels whose paths are already strictly increasing.
    pub fn build(vocab: Vocabulary, levels: Vec<LevelInput>, config: &TrieConfig) -> Result<Self> {
        let order = levels.len();
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::InvalidArgument(format!("order {order} outside 1..=8")));
        }
        let v = vocab.len();
        let mut layouts = Vec::with_capacity(order);
        let mut levels = levels.into_iter();
        let first = levels.next().unwrap();
        layouts.push(LevelLayout {
            symbols: first.paths,
            children: Vec::new(),
            values: first.values,
        });
        let mut prev: Vec<WordId> = layouts[0].symbols.clone();
        for (i, input) in levels.enumerate() {
            let n = i + 2;
            let prev_len = prev.len() / (n - 1);
            if input.paths.len() % n != 0 {
                return Err(Error::Build(format!("level {n} path array is not a multiple of {n}")));
            }
            let m = input.paths.len() / n;
            let mut children = vec![0u64; prev_len];
            let mut symbols = Vec::with_capacity(m);
            let mut p = 0;
            for i in 0..m {
                let path = &input.paths[i * n..(i + 1) * n];
                check_path_ids(path, v, &vocab)?;
                if i > 0 && input.paths[(i - 1) * n..i * n] >= *path {
                    return Err(Error::Build(format!(
                        "level {n} is not strictly sorted at [{}]",
                        fmt_path(path, &vocab)
                    )));
                }
                let parent = &path[..n - 1];
                while p < prev_len && prev[p * (n - 1)..(p + 1) * (n - 1)] < *parent {
                    p += 1;
                }
                if p == prev_len || prev[p * (n - 1)..(p + 1) * (n - 1)] != *parent {
                    return Err(Error::Build(format!(
                        "missing parent [{}] of [{}]",
                        fmt_path(parent, &vocab),
                        fmt_path(path, &vocab)
                    )));
                }
                children[p] += 1;
                symbols.push(path[n - 1]);
            }
            prev = input.paths;
            layouts.push(LevelLayout {
                symbols,
                children,
                values: input.values,
            });
        }
        Self::from_layout(vocab, layouts, config)
    }

    /// Builds from per-level node symbols and child counts, the layout a
    /// counting sort produces directly. Level 1 must hold `0..V`.
    pub fn from_layout(vocab: Vocabulary, layouts: Vec<LevelLayout>, config: &TrieConfig) -> Result<Self> {
        let order = layouts.len();
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::InvalidArgument(format!("order {order} outside 1..=8")));
        }
        if config.remap > order.saturating_sub(2) {
            return Err(Error::InvalidArgument(format!(
                "remap order {} outside 0..={}",
                config.remap,
                order.saturating_sub(2)
            )));
        }
        let v = vocab.len();
        let first = &layouts[0];
        if first.symbols.len() != v || first.symbols.iter().enumerate().any(|(i, &w)| w as usize != i) {
            return Err(Error::Build(format!(
                "level 1 must hold every vocabulary id once, in order ({} entries for V = {v})",
                first.symbols.len()
            )));
        }
        let mut built: Vec<Level> = Vec::with_capacity(order);
        built.push(Level {
            len: v,
            ids: None,
            pointers: None,
            payload: make_payload(&first.values, 1, order, v, config)?,
        });
        // parent position of every node, per level; used to collect remap sub-paths
        let mut parents: Vec<Vec<u32>> = vec![Vec::new()];
        let mut symbols_of: Vec<&[WordId]> = vec![&first.symbols];

        for n in 2..=order {
            let layout = &layouts[n - 1];
            let prev_len = built[n - 2].len;
            let m = layout.symbols.len();
            if layout.children.len() != prev_len {
                return Err(Error::Build(format!("level {n}: {} child counts for {prev_len} parents", layout.children.len())));
            }
            let mut pointers = Vec::with_capacity(prev_len + 1);
            let mut acc = 0u64;
            pointers.push(0);
            for &c in &layout.children {
                acc += c;
                pointers.push(acc);
            }
            if acc != m as u64 {
                return Err(Error::Build(format!("level {n}: child counts sum to {acc}, expected {m}")));
            }
            let mut parent_of = Vec::with_capacity(m);
            for (p, w) in pointers.windows(2).enumerate() {
                let (lo, hi) = (w[0] as usize, w[1] as usize);
                for i in lo..hi {
                    let s = layout.symbols[i];
                    if s as usize >= v || (i > lo && layout.symbols[i - 1] >= s) {
                        return Err(Error::Build(format!("level {n}: symbol {s} at {i} is out of range or out of order")));
                    }
                    parent_of.push(p as u32);
                }
            }
            built[n - 2].pointers = Some(EliasFano::new(&pointers, m as u64 + 1)?);

            let k = config.remap;
            let mut sub = [0u64; MAX_ORDER];
            let mut stored = Vec::with_capacity(m);
            for (i, &parent) in parent_of.iter().enumerate() {
                let sym = if k > 0 && n >= k + 2 {
                    // last k + 1 path symbols, deepest last
                    sub[k] = layout.symbols[i] as u64;
                    let mut node_parent = parent as usize;
                    for j in (0..k).rev() {
                        let level = n - 1 - (k - j);
                        let node = node_parent;
                        sub[j] = symbols_of[level][node] as u64;
                        if level > 0 {
                            node_parent = parents[level][node] as usize;
                        }
                    }
                    let (pos, b) = walk(&built, &sub[..k + 1]).ok_or_else(|| {
                        let path: Vec<WordId> = sub[..k + 1].iter().map(|&x| x as WordId).collect();
                        Error::Build(format!("remapping needs missing path [{}]", fmt_path(&path, &vocab)))
                    })?;
                    (pos - b) as u64
                } else {
                    layout.symbols[i] as u64
                };
                let lo = pointers[parent as usize] as usize;
                let base = if lo == 0 { 0 } else { stored[lo - 1] };
                stored.push(sym + base);
            }
            let universe = stored.last().map_or(0, |&x| x + 1);
            let block = if n == 2 { config.block_size_l2 } else { config.block_size_rest };
            built.push(Level {
                len: m,
                ids: Some(PartitionedEliasFano::new(&stored, universe, block)?),
                pointers: None,
                payload: make_payload(&layout.values, n, order, m, config)?,
            });
            parents.push(parent_of);
            symbols_of.push(&layout.symbols);
        }
        let quant_bits = match layouts[0].values {
            LevelValues::Counts(_) => 0,
            LevelValues::Probs { .. } => config.quant_bits,
        };
        Ok(Self {
            order,
            remap: config.remap,
            direction: config.direction,
            quant_bits,
            vocab,
            levels: built,
        })
    }

    /// Builds from grams in text order, in any order; reverses them for
    /// reversed tries and sorts every level by path.
    pub fn from_grams(vocab: Vocabulary, levels: Vec<LevelInput>, config: &TrieConfig) -> Result<Self> {
        let mut sorted = Vec::with_capacity(levels.len());
        for (i, level) in levels.into_iter().enumerate() {
            let n = i + 1;
            if level.paths.len() % n != 0 {
                return Err(Error::Build(format!("level {n} gram array is not a multiple of {n}")));
            }
            let m = level.paths.len() / n;
            let mut paths = level.paths;
            if config.direction == Direction::Reversed {
                for g in paths.chunks_exact_mut(n) {
                    g.reverse();
                }
            }
            let mut perm: Vec<usize> = (0..m).collect();
            perm.sort_unstable_by(|&a, &b| paths[a * n..(a + 1) * n].cmp(&paths[b * n..(b + 1) * n]));
            let mut out = Vec::with_capacity(paths.len());
            for &p in &perm {
                out.extend_from_slice(&paths[p * n..(p + 1) * n]);
            }
            sorted.push(LevelInput {
                paths: out,
                values: level.values.permute(&perm),
            });
        }
        Self::build(vocab, sorted, config)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn remap_order(&self) -> usize {
        self.remap
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn quant_bits(&self) -> u32 {
        self.quant_bits
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn has_probabilities(&self) -> bool {
        matches!(self.levels[0].payload, LevelPayload::Probs { .. })
    }

    /// Number of grams of order `n`.
    pub fn len(&self, n: usize) -> usize {
        self.levels[n - 1].len
    }

    /// Walks `syms` from level 1. Symbols at remapped levels must already be
    /// mapped. With `sibling`, returns the position within the final range.
    pub fn trie_search(&self, syms: &[u64], sibling: bool) -> Option<usize> {
        if syms.is_empty() || syms.len() > self.order {
            return None;
        }
        let (pos, b) = walk(&self.levels, syms)?;
        Some(if sibling { pos - b } else { pos })
    }

    /// Mapped symbol of the last element of `path`.
    #[inline]
    fn map_last(&self, path: &[WordId]) -> Option<u64> {
        let n = path.len();
        let k = self.remap;
        if k == 0 || n < k + 2 {
            return Some(path[n - 1] as u64);
        }
        let mut sub = [0u64; MAX_ORDER];
        for (s, &w) in sub.iter_mut().zip(&path[n - 1 - k..]) {
            *s = w as u64;
        }
        let (pos, b) = walk(&self.levels, &sub[..k + 1])?;
        Some((pos - b) as u64)
    }

    /// Position of `path` at level `path.len()`, remapping as needed.
    pub fn search(&self, path: &[WordId]) -> Option<usize> {
        let n = path.len();
        if n == 0 || n > self.order {
            return None;
        }
        let mut syms = [0u64; MAX_ORDER];
        for i in 0..n {
            syms[i] = self.map_last(&path[..=i])?;
        }
        walk(&self.levels, &syms[..n]).map(|(p, _)| p)
    }

    /// Position of the node for `path` given the position of its parent
    /// (the node for `path[..len-1]`).
    #[inline]
    pub fn child(&self, path: &[WordId], parent_pos: usize) -> Option<usize> {
        let n = path.len();
        if n < 2 || n > self.order {
            return None;
        }
        let sym = self.map_last(path)?;
        let (lo, hi) = range(&self.levels, n - 2, parent_pos)?;
        find_child(&self.levels, n - 1, lo, hi, sym)
    }

    /// Position of the gram (ids in text order) at level `gram.len()`.
    pub fn find_gram(&self, gram: &[WordId]) -> Option<usize> {
        match self.direction {
            Direction::Forward => self.search(gram),
            Direction::Reversed => {
                let mut path = [0; MAX_ORDER];
                let n = gram.len().min(MAX_ORDER);
                for (p, &w) in path.iter_mut().zip(gram.iter().rev()) {
                    *p = w;
                }
                self.search(&path[..n])
            }
        }
    }

    pub fn payload(&self, n: usize, pos: usize) -> Payload {
        match &self.levels[n - 1].payload {
            LevelPayload::Counts(c) => Payload::Count(c.get(pos)),
            LevelPayload::Probs { prob, backoff } => Payload::Prob {
                prob: prob.get(pos),
                backoff: backoff.as_ref().map(|b| b.get(pos)),
            },
        }
    }

    #[inline]
    pub fn prob(&self, n: usize, pos: usize) -> f32 {
        match &self.levels[n - 1].payload {
            LevelPayload::Probs { prob, .. } => prob.get(pos),
            LevelPayload::Counts(_) => panic!("count trie has no probabilities"),
        }
    }

    /// Backoff of the context stored at `(n, pos)`; 1 at the top level.
    #[inline]
    pub fn backoff(&self, n: usize, pos: usize) -> f32 {
        match &self.levels[n - 1].payload {
            LevelPayload::Probs { backoff: Some(b), .. } => b.get(pos),
            LevelPayload::Probs { backoff: None, .. } => 1.0,
            LevelPayload::Counts(_) => panic!("count trie has no backoffs"),
        }
    }

    pub fn count(&self, n: usize, pos: usize) -> u64 {
        match &self.levels[n - 1].payload {
            LevelPayload::Counts(c) => c.get(pos),
            LevelPayload::Probs { .. } => panic!("probability trie has no counts"),
        }
    }

    /// Maps tokens to ids; `None` if any is out of vocabulary.
    pub fn ids_of(&self, tokens: &[&str]) -> Option<Vec<WordId>> {
        tokens.iter().map(|t| self.vocab.lookup(t)).collect()
    }

    pub fn lookup(&self, tokens: &[&str]) -> Option<Payload> {
        if tokens.is_empty() || tokens.len() > self.order {
            return None;
        }
        let ids = self.ids_of(tokens)?;
        let pos = self.find_gram(&ids)?;
        Some(self.payload(ids.len(), pos))
    }

    pub fn lookup_count(&self, tokens: &[&str]) -> Option<u64> {
        match self.lookup(tokens)? {
            Payload::Count(c) => Some(c),
            Payload::Prob { .. } => None,
        }
    }

    /// Stored ids of level `n` (prefix-summed, possibly remapped).
    pub fn stored_ids(&self, n: usize) -> Option<Vec<u64>> {
        self.levels[n - 1].ids.as_ref().map(|s| s.to_vec())
    }

    pub fn pointers(&self, n: usize) -> Option<Vec<u64>> {
        self.levels[n - 1].pointers.as_ref().map(|s| s.to_vec())
    }

    pub fn level_stats(&self) -> Vec<LevelStats> {
        self.levels
            .iter()
            .map(|l| LevelStats {
                entries: l.len,
                id_bits: l.ids.as_ref().map_or(0, |s| s.payload_bits()),
                pointer_bits: l.pointers.as_ref().map_or(0, |s| s.payload_bits()),
                value_bits: match &l.payload {
                    LevelPayload::Counts(c) => c.ranks.payload_bits() + c.values.len() * 64,
                    LevelPayload::Probs { prob, backoff } => {
                        prob.payload_bits() + backoff.as_ref().map_or(0, |b| b.payload_bits())
                    }
                },
            })
            .collect()
    }

    /// Total bits of all id sequences.
    pub fn id_bits(&self) -> usize {
        self.level_stats().iter().map(|s| s.id_bits).sum()
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_magic(w, MAGIC, VERSION)?;
        w.write_u8(self.order as u8)?;
        w.write_u8(self.remap as u8)?;
        w.write_u8(self.direction as u8)?;
        w.write_u8(self.has_probabilities() as u8)?;
        w.write_u8(self.quant_bits as u8)?;
        self.vocab.write_to(w)?;
        for l in &self.levels {
            w.write_u64::<LE>(l.len as u64)?;
            match &l.ids {
                Some(s) => {
                    w.write_u8(1)?;
                    s.write_to(w)?;
                }
                None => w.write_u8(0)?,
            }
            match &l.pointers {
                Some(s) => {
                    w.write_u8(1)?;
                    s.write_to(w)?;
                }
                None => w.write_u8(0)?,
            }
            match &l.payload {
                LevelPayload::Counts(c) => {
                    w.write_u8(0)?;
                    c.write_to(w)?;
                }
                LevelPayload::Probs { prob, backoff } => {
                    w.write_u8(1)?;
                    prob.write_to(w)?;
                    match backoff {
                        Some(b) => {
                            w.write_u8(1)?;
                            b.write_to(w)?;
                        }
                        None => w.write_u8(0)?,
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        read_magic(r, MAGIC, VERSION)?;
        let order = r.read_u8()? as usize;
        let remap = r.read_u8()? as usize;
        let direction = match r.read_u8()? {
            0 => Direction::Forward,
            1 => Direction::Reversed,
            d => return Err(Error::Corrupt(format!("unknown direction {d}"))),
        };
        let _probs = r.read_u8()?;
        let quant_bits = r.read_u8()? as u32;
        if !(1..=MAX_ORDER).contains(&order) || remap > order.saturating_sub(2) {
            return Err(Error::Corrupt("bad trie header".into()));
        }
        let vocab = Vocabulary::read_from(r)?;
        let mut levels = Vec::with_capacity(order);
        for n in 1..=order {
            let len = read_len(r)?;
            let ids = match r.read_u8()? {
                1 => Some(PartitionedEliasFano::read_from(r)?),
                _ => None,
            };
            let pointers = match r.read_u8()? {
                1 => Some(EliasFano::read_from(r)?),
                _ => None,
            };
            let payload = match r.read_u8()? {
                0 => LevelPayload::Counts(CountPayload::read_from(r)?),
                _ => {
                    let prob = FloatColumn::read_from(r)?;
                    let backoff = match r.read_u8()? {
                        1 => Some(FloatColumn::read_from(r)?),
                        _ => None,
                    };
                    LevelPayload::Probs { prob, backoff }
                }
            };
            let ok = (n == 1 || ids.as_ref().is_some_and(|s| s.len() == len))
                && (n == order || pointers.as_ref().is_some_and(|p| p.len() == len + 1));
            if !ok {
                return Err(Error::Corrupt(format!("level {n} sequences do not match its size")));
            }
            levels.push(Level {
                len,
                ids,
                pointers,
                payload,
            });
        }
        if levels[0].len != vocab.len() {
            return Err(Error::Corrupt("level 1 does not match the vocabulary".into()));
        }
        Ok(Self {
            order,
            remap,
            direction,
            quant_bits,
            vocab,
            levels,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(Error::io_at(path))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(Error::io_at(path))?;
        Self::read_from(&mut std::io::BufReader::new(f))
    }
}

fn make_payload(values: &LevelValues, n: usize, order: usize, len: usize, config: &TrieConfig) -> Result<LevelPayload> {
    if values.len() != len {
        return Err(Error::Build(format!("level {n} has {len} grams but {} values", values.len())));
    }
    let block = if n <= 2 { config.block_size_l2 } else { config.block_size_rest };
    Ok(match values {
        LevelValues::Counts(c) => LevelPayload::Counts(CountPayload::new(c, config.index_encoding, block)?),
        LevelValues::Probs { prob, backoff } => {
            let column = |v: &[f64]| -> Result<FloatColumn> {
                if n == 1 || config.quant_bits >= 32 {
                    Ok(FloatColumn::plain(v))
                } else {
                    FloatColumn::quantized(v, config.quant_bits)
                }
            };
            let backoff = match backoff {
                Some(b) if n < order => {
                    if b.len() != len {
                        return Err(Error::Build(format!("level {n} backoff count mismatch")));
                    }
                    Some(column(b)?)
                }
                _ => None,
            };
            LevelPayload::Probs {
                prob: column(prob)?,
                backoff,
            }
        }
    })
}
