//! Small corpora and brute-force n-gram tables for unit tests.

use std::collections::{BTreeMap, HashMap};

use rand::{rngs::StdRng, Rng, SeedableRng};

use crate::trie_index::{LevelInput, LevelValues};
use crate::vocabulary::Vocabulary;
use crate::WordId;

/// Lines of tokens `w0..w{v-1}` with skewed frequencies.
pub fn random_lines(lines: usize, v: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..lines)
        .map(|_| {
            let len = rng.random_range(1..12);
            (0..len)
                .map(|_| {
                    let r: f64 = rng.random();
                    format!("w{}", ((r * r * r) * v as f64) as usize)
                })
                .collect()
        })
        .collect()
}

/// Lines from a sparse Markov chain over `w0..w{v-1}`: each word is mostly
/// followed by one of a few successors, so longer grams repeat. One step in
/// ten jumps to a skewed random word.
pub fn markov_lines(lines: usize, v: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..lines)
        .map(|_| {
            let len = rng.random_range(2..16);
            let r: f64 = rng.random();
            let mut w = ((r * r) * v as f64) as usize;
            (0..len)
                .map(|_| {
                    let cur = w;
                    let r: f64 = rng.random();
                    w = if r < 0.1 {
                        let u: f64 = rng.random();
                        ((u * u * u) * v as f64) as usize
                    } else {
                        let k = (r.powi(4) * 8.0) as u64;
                        let h = (w as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ k.wrapping_mul(0xBF58_476D_1CE4_E5B9);
                        (h.wrapping_mul(0x94D0_49BB_1331_11EB) >> 33) as usize % v
                    };
                    format!("w{cur}")
                })
                .collect()
        })
        .collect()
}

/// Counts of every substring of length `1..=n`, keyed by tokens.
pub fn substring_counts(lines: &[Vec<String>], n: usize) -> Vec<BTreeMap<Vec<String>, u64>> {
    let mut out = vec![BTreeMap::new(); n];
    for line in lines {
        for len in 1..=n {
            for w in line.windows(len) {
                *out[len - 1].entry(w.to_vec()).or_insert(0) += 1;
            }
        }
    }
    out
}

/// Vocabulary by unigram counts (no `<unk>`) and trie input in text order.
pub fn count_levels(tables: &[BTreeMap<Vec<String>, u64>]) -> (Vocabulary, Vec<LevelInput>) {
    let entries: Vec<(String, u64)> = tables[0].iter().map(|(g, &c)| (g[0].clone(), c)).collect();
    let vocab = Vocabulary::build(&entries, false).unwrap();
    let ids: HashMap<&str, WordId> = vocab.tokens().iter().enumerate().map(|(i, t)| (t.as_str(), i as WordId)).collect();
    let levels = tables
        .iter()
        .map(|t| {
            let mut paths = Vec::new();
            let mut counts = Vec::new();
            for (g, &c) in t {
                paths.extend(g.iter().map(|w| ids[w.as_str()]));
                counts.push(c);
            }
            LevelInput {
                paths,
                values: LevelValues::Counts(counts),
            }
        })
        .collect();
    (vocab, levels)
}
