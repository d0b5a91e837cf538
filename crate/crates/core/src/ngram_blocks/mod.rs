//! Fixed-width n-gram records and their orderings.
//!
//! Words are stored left to right, `w_1 .. w_N`. Two orderings matter:
//!
//! - suffix order compares `(w_N, w_{N-1}, .., w_1)`;
//! - context order compares `(w_{N-1}, .., w_1, w_N)`.

pub mod block_file;
pub mod merge;
pub mod radix;

use std::cmp::Ordering;

use crate::{WordId, MAX_ORDER};

pub use block_file::{BlockInfo, BlockReader, BlockWriter, Encoding};
pub use merge::{merge_blocks, prefetch, Merger};
pub use radix::radix_sort_context;

/// One n-gram and its count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NGramRecord {
    words: [WordId; MAX_ORDER],
    n: u8,
    pub count: u64,
}

impl NGramRecord {
    pub fn new(words: &[WordId], count: u64) -> Self {
        assert!((1..=MAX_ORDER).contains(&words.len()), "order must be in 1..=8");
        let mut w = [0; MAX_ORDER];
        w[..words.len()].copy_from_slice(words);
        Self {
            words: w,
            n: words.len() as u8,
            count,
        }
    }

    #[inline]
    pub fn words(&self) -> &[WordId] {
        &self.words[..self.n as usize]
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.n as usize
    }
}

/// Declared order of records in a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordOrder {
    Unsorted = 0,
    Suffix = 1,
    Context = 2,
}

impl RecordOrder {
    pub fn from_u8(x: u8) -> Option<Self> {
        match x {
            0 => Some(Self::Unsorted),
            1 => Some(Self::Suffix),
            2 => Some(Self::Context),
            _ => None,
        }
    }

    /// Compares word tuples under this order; unsorted compares left to right.
    #[inline]
    pub fn cmp(self, a: &[WordId], b: &[WordId]) -> Ordering {
        match self {
            Self::Unsorted => a.cmp(b),
            Self::Suffix => cmp_suffix(a, b),
            Self::Context => cmp_context(a, b),
        }
    }

    /// Index of the word at key position `j`.
    #[inline]
    pub fn key_word(self, n: usize, j: usize) -> usize {
        match self {
            Self::Unsorted => j,
            Self::Suffix => n - 1 - j,
            Self::Context => context_key_word(n, j),
        }
    }
}

/// Lexicographic comparison of `(w_N, .., w_1)`.
#[inline]
pub fn cmp_suffix(a: &[WordId], b: &[WordId]) -> Ordering {
    debug_assert_eq!(a.len(), b.len());
    a.iter().rev().cmp(b.iter().rev())
}

/// Lexicographic comparison of `(w_{N-1}, .., w_1, w_N)`.
#[inline]
pub fn cmp_context(a: &[WordId], b: &[WordId]) -> Ordering {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    a[..n - 1]
        .iter()
        .rev()
        .cmp(b[..n - 1].iter().rev())
        .then(a[n - 1].cmp(&b[n - 1]))
}

/// Word index at position `j` of the context-order key.
#[inline]
pub fn context_key_word(n: usize, j: usize) -> usize {
    if j + 1 < n {
        n - 2 - j
    } else {
        n - 1
    }
}

/// Records packed as `n` words plus a two-word count, `4n + 8` bytes each.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecordBlock {
    n: usize,
    data: Vec<u32>,
}

impl RecordBlock {
    pub fn new(n: usize) -> Self {
        Self::with_capacity(n, 0)
    }

    pub fn with_capacity(n: usize, records: usize) -> Self {
        assert!((1..=MAX_ORDER).contains(&n));
        Self {
            n,
            data: Vec::with_capacity(records * (n + 2)),
        }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    fn stride(&self) -> usize {
        self.n + 2
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.stride()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn clear(&mut self) {
        self.data.clear();
    }

    /// Bytes per record on disk in raw form.
    pub fn record_bytes(n: usize) -> usize {
        4 * n + 8
    }

    #[inline]
    pub fn push(&mut self, words: &[WordId], count: u64) {
        debug_assert_eq!(words.len(), self.n);
        self.data.extend_from_slice(words);
        self.data.push(count as u32);
        self.data.push((count >> 32) as u32);
    }

    #[inline]
    pub fn words(&self, i: usize) -> &[WordId] {
        let s = self.stride();
        &self.data[i * s..i * s + self.n]
    }

    #[inline]
    pub fn count(&self, i: usize) -> u64 {
        let s = self.stride();
        let c = &self.data[i * s + self.n..i * s + s];
        c[0] as u64 | (c[1] as u64) << 32
    }

    #[inline]
    pub fn set_count(&mut self, i: usize, count: u64) {
        let s = self.stride();
        self.data[i * s + self.n] = count as u32;
        self.data[i * s + self.n + 1] = (count >> 32) as u32;
    }

    pub fn record(&self, i: usize) -> NGramRecord {
        NGramRecord::new(self.words(i), self.count(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = NGramRecord> + '_ {
        (0..self.len()).map(move |i| self.record(i))
    }

    pub fn sort_by_order(&mut self, order: RecordOrder) {
        let mut recs: Vec<NGramRecord> = self.iter().collect();
        recs.sort_by(|a, b| order.cmp(a.words(), b.words()));
        self.clear();
        for r in recs {
            self.push(r.words(), r.count);
        }
    }

    pub fn is_sorted(&self, order: RecordOrder) -> bool {
        (1..self.len()).all(|i| order.cmp(self.words(i - 1), self.words(i)) != Ordering::Greater)
    }

    pub(crate) fn raw_mut(&mut self) -> &mut Vec<u32> {
        &mut self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn context_order_of_bigrams() {
        // "a b a a c" with a=0, b=1, c=2
        let mut grams = vec![[0, 1], [1, 0], [0, 0], [0, 2]];
        grams.sort_by(|a, b| cmp_context(a, b));
        assert_eq!(grams, vec![[0, 0], [0, 1], [0, 2], [1, 0]]);
    }

    #[test]
    fn unigram_orders_agree() {
        assert_eq!(cmp_context(&[3], &[5]), Ordering::Less);
        assert_eq!(cmp_suffix(&[3], &[5]), Ordering::Less);
        assert_eq!(cmp_context(&[4], &[4]), Ordering::Equal);
    }

    #[test]
    fn key_positions() {
        // N = 4: key is (w3, w2, w1, w4)
        let idx: Vec<usize> = (0..4).map(|j| context_key_word(4, j)).collect();
        assert_eq!(idx, [2, 1, 0, 3]);
    }

    #[test]
    fn block_counts_use_64_bits() {
        let mut b = RecordBlock::new(2);
        b.push(&[1, 2], u64::MAX - 1);
        assert_eq!(b.count(0), u64::MAX - 1);
        b.set_count(0, 1 << 40);
        assert_eq!(b.record(0), NGramRecord::new(&[1, 2], 1 << 40));
    }

    proptest! {
        #[test]
        fn suffix_is_reversed_tuple(a in proptest::collection::vec(0u32..4, 3), b in proptest::collection::vec(0u32..4, 3)) {
            let ra: Vec<u32> = a.iter().rev().copied().collect();
            let rb: Vec<u32> = b.iter().rev().copied().collect();
            prop_assert_eq!(cmp_suffix(&a, &b), ra.cmp(&rb));
        }

        #[test]
        fn context_is_key_tuple(a in proptest::collection::vec(0u32..4, 4), b in proptest::collection::vec(0u32..4, 4)) {
            let key = |x: &[u32]| vec![x[2], x[1], x[0], x[3]];
            prop_assert_eq!(cmp_context(&a, &b), key(&a).cmp(&key(&b)));
        }
    }
}
