//! Minimal perfect hashing by 3-uniform hypergraph peeling.
//!
//! Each key becomes an edge over three vertices, one per segment of a vertex
//! array of about `1.23 n` cells. When the hypergraph peels completely every
//! edge owns one vertex, and a 2-bit value per vertex selects which of the
//! three it is. Ranking the owned vertices makes the map minimal.

use std::io::{Read, Write};

use succinct::io::{read_len, read_magic, read_u32s, write_magic, write_u32s, ReadBytesExt, WriteBytesExt, LE};
use xxhash_rust::xxh3::xxh3_128_with_seed;

use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"MPHF";
const VERSION: u16 = 1;
const GAMMA: f64 = 1.23;
const MAX_ATTEMPTS: usize = 100;
const UNUSED: u8 = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimalPerfectHash {
    seed: u64,
    n: usize,
    segment: usize,
    /// 2-bit values, 32 per word.
    g: Vec<u64>,
    /// Number of used vertices before each word of `g`.
    ranks: Vec<u32>,
}

#[inline]
fn fastrange(x: u64, n: usize) -> usize {
    ((x as u128 * n as u128) >> 64) as usize
}

#[inline]
fn edge(key: &[u8], seed: u64, segment: usize) -> ([usize; 3], u128) {
    let h = xxh3_128_with_seed(key, seed);
    let lo = h as u64;
    let hi = (h >> 64) as u64;
    let third = lo.rotate_left(32) ^ hi.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    (
        [
            fastrange(lo, segment),
            segment + fastrange(hi, segment),
            2 * segment + fastrange(third, segment),
        ],
        h,
    )
}

impl MinimalPerfectHash {
    /// Builds a bijection from `keys` onto `[0, keys.len())`.
    pub fn new<K: AsRef<[u8]>>(keys: &[K], seed: u64) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::Empty("minimal perfect hash over zero keys".into()));
        }
        if keys.len() > u32::MAX as usize {
            return Err(Error::InvalidArgument("too many keys".into()));
        }
        let n = keys.len();
        let segment = ((GAMMA * n as f64 / 3.0).ceil() as usize).max(1) + 2;
        let mut rng = seed;
        for _ in 0..MAX_ATTEMPTS {
            let s = splitmix(&mut rng);
            let edges: Vec<([usize; 3], u128)> = keys.iter().map(|k| edge(k.as_ref(), s, segment)).collect();
            if let Some(dup) = find_duplicate(keys, &edges)? {
                // a 128-bit collision between distinct keys: try another seed
                let _ = dup;
                continue;
            }
            if let Some(g) = peel(&edges, 3 * segment) {
                let (g, ranks) = pack(&g);
                return Ok(Self {
                    seed: s,
                    n,
                    segment,
                    g,
                    ranks,
                });
            }
        }
        Err(Error::SeedFailure(MAX_ATTEMPTS))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    fn g_at(&self, v: usize) -> u8 {
        ((self.g[v / 32] >> (2 * (v % 32))) & 3) as u8
    }

    #[inline]
    fn rank(&self, v: usize) -> usize {
        let w = v / 32;
        let word = self.g[w];
        let r = v % 32;
        let masked = if r == 0 { 0 } else { word & ((1u64 << (2 * r)) - 1) };
        let unused = (masked & (masked >> 1) & 0x5555_5555_5555_5555).count_ones() as usize;
        // vertices below v in this word, minus the unused ones; the mask keeps
        // the zero padding from counting as unused
        self.ranks[w] as usize + r - unused
    }

    /// Slot of `key` in `[0, n)`. Total: alien keys also land in range.
    #[inline]
    pub fn hash(&self, key: &[u8]) -> usize {
        let (vs, _) = edge(key, self.seed, self.segment);
        let j = (self.g_at(vs[0]) + self.g_at(vs[1]) + self.g_at(vs[2])) % 3;
        let slot = self.rank(vs[j as usize]);
        // only alien keys can hit an unused vertex past the last used one
        slot.min(self.n - 1)
    }

    pub fn size_in_bytes(&self) -> usize {
        self.g.len() * 8 + self.ranks.len() * 4 + 32
    }

    pub fn bits_per_key(&self) -> f64 {
        (self.g.len() * 64 + self.ranks.len() * 32) as f64 / self.n as f64
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_magic(w, MAGIC, VERSION)?;
        w.write_u64::<LE>(self.seed)?;
        w.write_u64::<LE>(self.n as u64)?;
        w.write_u64::<LE>(self.segment as u64)?;
        succinct::io::write_u64s(w, &self.g)?;
        write_u32s(w, &self.ranks)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        read_magic(r, MAGIC, VERSION)?;
        let seed = r.read_u64::<LE>()?;
        let n = read_len(r)?;
        let segment = read_len(r)?;
        let g = succinct::io::read_u64s(r)?;
        let ranks = read_u32s(r)?;
        if n == 0 || g.len() != (3 * segment).div_ceil(32) || ranks.len() != g.len() {
            return Err(Error::Corrupt("minimal perfect hash tables do not match header".into()));
        }
        Ok(Self {
            seed,
            n,
            segment,
            g,
            ranks,
        })
    }
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Errors on a true duplicate key; returns `Some` on a mere hash collision.
fn find_duplicate<K: AsRef<[u8]>>(keys: &[K], edges: &[([usize; 3], u128)]) -> Result<Option<usize>> {
    let mut order: Vec<u32> = (0..edges.len() as u32).collect();
    order.sort_unstable_by_key(|&i| edges[i as usize].1);
    let mut collision = None;
    for w in order.windows(2) {
        let (a, b) = (w[0] as usize, w[1] as usize);
        if edges[a].1 == edges[b].1 {
            if keys[a].as_ref() == keys[b].as_ref() {
                return Err(Error::DuplicateKey(String::from_utf8_lossy(keys[a].as_ref()).into_owned()));
            }
            collision = Some(a);
        }
    }
    Ok(collision)
}

/// Peels the hypergraph; returns per-vertex values or `None` if a 2-core remains.
fn peel(edges: &[([usize; 3], u128)], vertices: usize) -> Option<Vec<u8>> {
    let mut degree = vec![0u32; vertices];
    let mut xor_edges = vec![0u32; vertices];
    for (e, (vs, _)) in edges.iter().enumerate() {
        for &v in vs {
            degree[v] += 1;
            xor_edges[v] ^= e as u32;
        }
    }
    let mut stack: Vec<(u32, usize)> = Vec::with_capacity(edges.len());
    let mut queue: Vec<usize> = (0..vertices).filter(|&v| degree[v] == 1).collect();
    while let Some(v) = queue.pop() {
        if degree[v] != 1 {
            continue;
        }
        let e = xor_edges[v];
        stack.push((e, v));
        for &u in &edges[e as usize].0 {
            degree[u] -= 1;
            xor_edges[u] ^= e;
            if degree[u] == 1 {
                queue.push(u);
            }
        }
    }
    if stack.len() != edges.len() {
        return None;
    }
    let mut g = vec![UNUSED; vertices];
    for &(e, v) in stack.iter().rev() {
        let vs = edges[e as usize].0;
        let j = vs.iter().position(|&x| x == v).unwrap() as u32;
        let others: u32 = vs.iter().filter(|&&x| x != v).map(|&x| g[x] as u32).sum();
        g[v] = ((j + 6 - others % 3) % 3) as u8;
    }
    Some(g)
}

fn pack(g: &[u8]) -> (Vec<u64>, Vec<u32>) {
    let mut words = vec![0u64; g.len().div_ceil(32)];
    for (v, &x) in g.iter().enumerate() {
        words[v / 32] |= (x as u64) << (2 * (v % 32));
    }
    // padding cells are zero, not UNUSED, and rank() never reaches them
    let mut ranks = Vec::with_capacity(words.len());
    let mut used = 0u32;
    for (w, chunk) in g.chunks(32).enumerate() {
        ranks.push(used);
        used += chunk.iter().filter(|&&x| x != UNUSED).count() as u32;
        let _ = w;
    }
    (words, ranks)
}
