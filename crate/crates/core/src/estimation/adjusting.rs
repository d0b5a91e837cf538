//! Adjusting: one merge of the counting blocks into `B_N`, with modified
//! counts and smoothing statistics computed on the fly in context order.

use std::path::Path;

use crate::ngram_blocks::{merge_blocks, prefetch, BlockInfo, BlockWriter, Encoding, NGramRecord, RecordOrder};
use crate::{Error, Result, WordId, MAX_ORDER};

const INVALID: u32 = u32::MAX;

/// Per right word: last left word seen, distinct lefts so far, and the run
/// the entry was last touched in.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Entry {
    pub left: WordId,
    pub count: u32,
    pub range: u32,
}

impl Default for Entry {
    fn default() -> Self {
        Self {
            left: INVALID,
            count: 0,
            range: INVALID,
        }
    }
}

/// `t[n-1][k]`: number of order-`n` grams with modified count `k`, `k` in 1..=4.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SmoothingStats {
    pub t: Vec<[u64; 5]>,
}

/// `D_n(k)` for `k` in 0..=3; larger `k` use `D_n(3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Discounts {
    pub d: Vec<[f64; 4]>,
}

impl Discounts {
    #[inline]
    pub fn get(&self, n: usize, k: u64) -> f64 {
        self.d[n - 1][k.min(3) as usize]
    }
}

/// Closed-form discounts of one order from `t[1..=4]`.
pub fn order_discounts(n: usize, t: &[u64; 5]) -> Result<[f64; 4]> {
    let t1 = t[1] as f64;
    let y = t1 + 2.0 * t[2] as f64;
    let mut d = [0.0; 4];
    for k in 1..=3 {
        let den = y * t[k] as f64;
        if t[1] == 0 || den == 0.0 {
            return Err(Error::DegenerateStatistics {
                n,
                k,
                reason: format!("zero denominator with t = {:?}", &t[1..]),
            });
        }
        let dk = k as f64 - (k + 1) as f64 * t1 * t[k + 1] as f64 / den;
        if !(0.0..=k as f64).contains(&dk) {
            return Err(Error::DegenerateStatistics {
                n,
                k,
                reason: format!("discount {dk} outside [0, {k}] with t = {:?}", &t[1..]),
            });
        }
        d[k] = dk;
    }
    Ok(d)
}

/// Discounts of every order. With `fallback`, an order whose statistics are
/// degenerate gets `D(1..=3) = fallback` instead of an error.
pub fn compute_discounts(stats: &SmoothingStats, fallback: Option<[f64; 3]>) -> Result<Discounts> {
    let mut d = Vec::with_capacity(stats.t.len());
    for (i, t) in stats.t.iter().enumerate() {
        match (order_discounts(i + 1, t), fallback) {
            (Ok(x), _) => d.push(x),
            (Err(Error::DegenerateStatistics { .. }), Some(f)) => d.push([0.0, f[0], f[1], f[2]]),
            (Err(e), _) => return Err(e),
        }
    }
    Ok(Discounts { d })
}

/// Results of a left-extension scan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjustedCounts {
    pub stats: SmoothingStats,
    /// Modified count of every unigram.
    pub unigram: Vec<u64>,
    /// Number of grams of each order; order 1 holds all `V` words.
    pub sizes: Vec<u64>,
    /// `last_word[n-1][w]`: order-`n` grams ending with `w`, for `n >= 2`.
    pub last_word: Vec<Vec<u64>>,
}

/// Streaming computation of modified counts over context-sorted `N`-wide
/// records. Records whose leading words equal `pad` are head windows.
pub struct LeftExtensions {
    n: usize,
    pad: WordId,
    stats: Vec<Vec<Entry>>,
    ranges: Vec<u32>,
    r: Vec<[i64; 6]>,
    t: Vec<[u64; 5]>,
    prev: Option<[WordId; MAX_ORDER]>,
    sizes: Vec<u64>,
    last_word: Vec<Vec<u64>>,
}

impl LeftExtensions {
    /// `v` is the vocabulary size; it is also the pad id.
    pub fn new(n: usize, v: usize) -> Self {
        assert!((2..=MAX_ORDER).contains(&n));
        Self {
            n,
            pad: v as WordId,
            stats: vec![vec![Entry::default(); v]; n - 1],
            ranges: vec![0; n],
            r: vec![[0; 6]; n],
            t: vec![[0; 5]; n],
            prev: None,
            sizes: vec![0; n],
            last_word: (0..n).map(|i| if i == 0 { Vec::new() } else { vec![0; v] }).collect(),
        }
    }

    fn fold(&mut self, n: usize) {
        let (r, t) = (&mut self.r[n - 1], &mut self.t[n - 1]);
        for k in 1..=4 {
            t[k] = (t[k] as i64 + r[k]) as u64;
        }
        *r = [0; 6];
    }

    #[inline]
    fn update(&mut self, n: usize, left: WordId, right: WordId) {
        let e = &mut self.stats[n - 1][right as usize];
        if e.range != self.ranges[n - 1] {
            *e = Entry {
                left: INVALID,
                count: 0,
                range: self.ranges[n - 1],
            };
            self.sizes[n - 1] += 1;
            if n >= 2 {
                self.last_word[n - 1][right as usize] += 1;
            }
        }
        if left != self.pad && e.left != left {
            e.left = left;
            e.count += 1;
            let k = e.count as usize;
            let r = &mut self.r[n - 1];
            if k == 1 {
                r[1] += 1;
            } else if k <= 5 {
                r[k] += 1;
                r[k - 1] -= 1;
            }
        }
    }

    pub fn push(&mut self, w: &[WordId], count: u64) {
        let big_n = self.n;
        debug_assert_eq!(w.len(), big_n);
        // number of trailing context words shared with the previous record
        let shared = match &self.prev {
            Some(p) => (0..big_n - 1).take_while(|&j| w[big_n - 2 - j] == p[big_n - 2 - j]).count(),
            None => 0,
        };
        for n in 1..big_n {
            if n > 1 && shared < n - 1 {
                self.ranges[n - 1] += 1;
                self.fold(n);
            }
            if n >= 2 && w[big_n - n] == self.pad {
                continue;
            }
            self.update(n, w[big_n - n - 1], w[big_n - 1]);
        }
        if w[0] != self.pad {
            self.sizes[big_n - 1] += 1;
            self.last_word[big_n - 1][w[big_n - 1] as usize] += 1;
            if count <= 4 {
                self.t[big_n - 1][count as usize] += 1;
            }
        }
        let mut p = [0; MAX_ORDER];
        p[..big_n].copy_from_slice(w);
        self.prev = Some(p);
    }

    pub fn finish(mut self) -> AdjustedCounts {
        for n in 1..=self.n {
            self.fold(n);
        }
        let v = self.pad as usize;
        self.sizes[0] = v as u64;
        AdjustedCounts {
            stats: SmoothingStats { t: self.t },
            unigram: self.stats[0].iter().map(|e| e.count as u64).collect(),
            sizes: self.sizes,
            last_word: self.last_word,
        }
    }
}

/// Exclusive prefix sums: the first position of every word's group.
pub fn initial_positions(counts: &[u64]) -> Vec<u64> {
    let mut acc = 0;
    counts
        .iter()
        .map(|&c| {
            let p = acc;
            acc += c;
            p
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct AdjustingConfig {
    pub order: usize,
    pub ram_budget: usize,
    pub encoding: Encoding,
    pub window_bytes: u32,
}

#[derive(Debug)]
pub struct AdjustingOutput {
    pub merged: BlockInfo,
    pub counts: AdjustedCounts,
    /// Files written by hierarchical merging, if any.
    pub scratch: Vec<BlockInfo>,
    /// Raw size of the merged records, `records * (4N + 8)`.
    pub raw_bytes: u64,
}

/// Merges the counting blocks once, summing duplicates, into the
/// front-coded `B_N` file `dir/merged.ngbk`, computing modified counts and
/// smoothing statistics on every buffered chunk. Consumes the input files.
pub fn adjusting_pass(blocks: &[BlockInfo], v: usize, config: &AdjustingConfig, dir: &Path) -> Result<AdjustingOutput> {
    let n = config.order;
    if blocks.is_empty() {
        return Err(Error::Empty("no n-grams: every line is shorter than the order".into()));
    }
    if let Some(b) = blocks.iter().find(|b| b.n != n || b.order != RecordOrder::Context) {
        return Err(Error::Corrupt(format!("{} is not a context-sorted order-{n} block", b.path.display())));
    }
    let paths: Vec<_> = blocks.iter().map(|b| b.path.clone()).collect();
    let merger = merge_blocks(&paths, RecordOrder::Context, true, dir, config.encoding, config.window_bytes)?;
    let scratch = merger.scratch_files().to_vec();
    let chunk = (config.ram_budget / std::mem::size_of::<NGramRecord>()).clamp(1024, 1 << 20);
    let out_path = dir.join("merged.ngbk");
    let mut writer = BlockWriter::create(&out_path, n, config.encoding, config.window_bytes, RecordOrder::Context)?;
    let mut ext = LeftExtensions::new(n, v);
    for block in prefetch(merger, chunk) {
        let block = block?;
        for rec in &block {
            ext.push(rec.words(), rec.count);
        }
        for rec in &block {
            writer.push(rec)?;
        }
    }
    let merged = writer.finish()?;
    for p in paths.iter().chain(scratch.iter().map(|s| &s.path)) {
        let _ = std::fs::remove_file(p);
    }
    Ok(AdjustingOutput {
        raw_bytes: merged.records * crate::ngram_blocks::RecordBlock::record_bytes(n) as u64,
        merged,
        counts: ext.finish(),
        scratch,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    #[test]
    fn discount_fixture() {
        let d = order_discounts(2, &[0, 4, 2, 1, 1]).unwrap();
        // D(1) = 1 - 2*4*2/(8*4), D(2) = 2 - 3*4*1/(8*2), D(3) = 3 - 4*4*1/(8*1)
        let want = [0.0, 1.0 - 16.0 / 32.0, 2.0 - 12.0 / 16.0, 3.0 - 16.0 / 8.0];
        for k in 0..4 {
            assert!((d[k] - want[k]).abs() < 1e-12);
        }
        assert!((d[1] - 0.5).abs() < 1e-12 && (d[2] - 1.25).abs() < 1e-12 && (d[3] - 1.0).abs() < 1e-12);
        let d = order_discounts(1, &[0, 1, 1, 1, 1]).unwrap();
        assert!((d[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_statistics() {
        let err = order_discounts(3, &[0, 5, 2, 0, 1]).unwrap_err();
        assert!(matches!(err, Error::DegenerateStatistics { n: 3, k: 3, .. }), "{err}");
        let stats = SmoothingStats {
            t: vec![[0, 4, 2, 1, 1], [0, 0, 0, 0, 0]],
        };
        assert!(compute_discounts(&stats, None).is_err());
        let d = compute_discounts(&stats, Some([0.5, 1.0, 1.5])).unwrap();
        assert_eq!(d.get(2, 7), 1.5);
        assert_eq!(d.get(1, 0), 0.0);
    }

    fn ids(s: &str) -> Vec<WordId> {
        s.bytes()
            .map(|b| match b {
                b'X' => 3,
                b => (b - b'A') as WordId,
            })
            .collect()
    }

    /// The 12 context-sorted 5-grams of the cyclic text XXXXABAACBACXXXX.
    pub(crate) const BLOCK12: [&str; 12] = [
        "ABAAC", "XABAA", "ACBAC", "XXXAB", "XXABA", "AACBA", "BAACB", "CBACX", "BACXX", "ACXXX", "CXXXX", "XXXXA",
    ];

    #[test]
    fn block12_is_context_sorted() {
        let recs: Vec<Vec<WordId>> = BLOCK12.iter().map(|g| ids(g)).collect();
        assert!(recs.windows(2).all(|w| crate::ngram_blocks::cmp_context(&w[0], &w[1]).is_lt()));
    }

    #[test]
    fn positions_fixture() {
        let mut ext = LeftExtensions::new(5, 4);
        for g in BLOCK12 {
            ext.push(&ids(g), 1);
        }
        let c = ext.finish();
        assert_eq!(c.last_word[4], vec![4, 2, 2, 4]);
        assert_eq!(initial_positions(&c.last_word[4]), vec![0, 4, 6, 8]);
        assert_eq!(c.last_word[1], vec![3, 2, 1, 2]);
        assert_eq!(initial_positions(&c.last_word[1]), vec![0, 3, 5, 6]);
    }

    #[test]
    fn update_traces() {
        // context "B" with lefts A, A, C: one gram, count 2
        let mut ext = LeftExtensions::new(3, 4);
        ext.push(&[0, 1, 2], 1);
        ext.push(&[0, 1, 2], 1);
        ext.push(&[2, 1, 2], 1);
        let c = ext.finish();
        assert_eq!(c.stats.t[1][1..], [0, 1, 0, 0]);
        // three distinct lefts give R[3] = 1, R[1] = R[2] = 0
        let mut ext = LeftExtensions::new(2, 4);
        for left in 0..3 {
            ext.push(&[left, 3], 1);
        }
        let c = ext.finish();
        assert_eq!(c.unigram[3], 3);
        assert_eq!(c.stats.t[0][1..], [0, 0, 1, 0]);
    }
}
