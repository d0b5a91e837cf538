//! Parallel LSD radix sort of record blocks into context order.
//!
//! One counting-sort pass per word column, least significant key first:
//! `w_N`, then `w_1, w_2, .., w_{N-1}`. Each pass splits the block into `K`
//! contiguous slices. Workers count their slice, the per-worker counters are
//! prefix-summed bucket-major so that every worker owns a disjoint, stable
//! range of each output bucket, and then the workers scatter in parallel.

use super::{context_key_word, RecordBlock};

/// Below this many records per worker a pass runs on one thread.
const MIN_RECORDS_PER_WORKER: usize = 1 << 14;

#[derive(Clone, Copy)]
struct SharedOut(*mut u32);
// SAFETY: workers write disjoint record ranges computed from the prefix sums.
unsafe impl Send for SharedOut {}
unsafe impl Sync for SharedOut {}

pub fn radix_sort_context(block: &mut RecordBlock, workers: usize) {
    let n = block.order();
    if block.len() <= 1 {
        return;
    }
    let stride = n + 2;
    let mut src = std::mem::take(block.raw_mut());
    let mut dst = vec![0u32; src.len()];
    for j in (0..n).rev() {
        counting_pass(&src, &mut dst, stride, context_key_word(n, j), workers);
        std::mem::swap(&mut src, &mut dst);
    }
    *block.raw_mut() = src;
}

fn counting_pass(src: &[u32], dst: &mut [u32], stride: usize, col: usize, workers: usize) {
    let len = src.len() / stride;
    let k = workers.max(1).min(len.div_ceil(MIN_RECORDS_PER_WORKER)).max(1);
    let buckets = src.chunks_exact(stride).map(|r| r[col]).max().unwrap_or(0) as usize + 1;
    let bounds: Vec<usize> = (0..=k).map(|w| w * len / k).collect();

    let count = |w: usize| {
        let mut c = vec![0usize; buckets];
        for r in src[bounds[w] * stride..bounds[w + 1] * stride].chunks_exact(stride) {
            c[r[col] as usize] += 1;
        }
        c
    };
    let mut counts: Vec<Vec<usize>> = if k == 1 {
        vec![count(0)]
    } else {
        std::thread::scope(|s| {
            let hs: Vec<_> = (0..k).map(|w| s.spawn(move || count(w))).collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        })
    };

    // bucket-major exclusive prefix sums: bucket b of worker w starts after
    // all smaller buckets and after bucket b of workers < w
    let mut running = 0;
    for b in 0..buckets {
        for c in counts.iter_mut() {
            let x = c[b];
            c[b] = running;
            running += x;
        }
    }

    let out = SharedOut(dst.as_mut_ptr());
    let scatter = |w: usize, mut offsets: Vec<usize>| {
        let out = out;
        for r in src[bounds[w] * stride..bounds[w + 1] * stride].chunks_exact(stride) {
            let slot = &mut offsets[r[col] as usize];
            // SAFETY: slot < len and no other worker owns this slot.
            unsafe {
                std::ptr::copy_nonoverlapping(r.as_ptr(), out.0.add(*slot * stride), stride);
            }
            *slot += 1;
        }
    };
    if k == 1 {
        scatter(0, counts.pop().unwrap());
    } else {
        std::thread::scope(|s| {
            for (w, offsets) in counts.into_iter().enumerate() {
                let scatter = &scatter;
                s.spawn(move || scatter(w, offsets));
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::super::{cmp_context, cmp_suffix, NGramRecord, RecordOrder};
    use super::*;
    use proptest::prelude::*;

    fn block_of(n: usize, recs: &[(Vec<u32>, u64)]) -> RecordBlock {
        let mut b = RecordBlock::new(n);
        for (w, c) in recs {
            b.push(w, *c);
        }
        b
    }

    fn records(n: usize, max_id: u32, len: usize) -> impl Strategy<Value = Vec<(Vec<u32>, u64)>> {
        proptest::collection::vec((proptest::collection::vec(0..max_id, n), 1u64..5), 0..len)
    }

    #[test]
    fn sorted_block_unchanged() {
        let mut b = block_of(2, &[(vec![0, 0], 1), (vec![0, 1], 1), (vec![0, 2], 1), (vec![1, 0], 1)]);
        let before = b.clone();
        radix_sort_context(&mut b, 4);
        assert_eq!(b, before);
    }

    #[test]
    fn parallel_large_block() {
        let mut b = RecordBlock::new(3);
        let mut x: u64 = 1;
        for _ in 0..200_000 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let w = [(x >> 40) as u32 % 1000, (x >> 20) as u32 % 50, (x >> 5) as u32 % 7];
            b.push(&w, x % 5 + 1);
        }
        let mut want: Vec<NGramRecord> = b.iter().collect();
        want.sort_by(|a, b| cmp_context(a.words(), b.words()));
        radix_sort_context(&mut b, 8);
        assert_eq!(b.iter().collect::<Vec<_>>(), want);
    }

    proptest! {
        #[test]
        fn equals_stable_comparison_sort(n in 1usize..=5, seed in any::<u64>()) {
            let mut x = seed | 1;
            let mut recs = Vec::new();
            for _ in 0..(seed % 300) {
                x ^= x << 13; x ^= x >> 7; x ^= x << 17;
                let w: Vec<u32> = (0..n).map(|i| ((x >> (8 * i)) % 6) as u32).collect();
                recs.push((w, x % 9 + 1));
            }
            let mut b = block_of(n, &recs);
            let mut want: Vec<NGramRecord> = b.iter().collect();
            want.sort_by(|a, b| cmp_context(a.words(), b.words()));
            radix_sort_context(&mut b, 3);
            // stability shows in the counts of equal keys
            prop_assert_eq!(b.iter().collect::<Vec<_>>(), want);
        }

        #[test]
        fn preserves_multiset(recs in records(3, 5, 200)) {
            let mut b = block_of(3, &recs);
            radix_sort_context(&mut b, 2);
            let mut got: Vec<(Vec<u32>, u64)> = b.iter().map(|r| (r.words().to_vec(), r.count)).collect();
            let mut want = recs.clone();
            got.sort();
            want.sort();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn stable_rekey_on_last_word_gives_suffix_order(recs in records(3, 4, 150)) {
            let mut b = block_of(3, &recs);
            radix_sort_context(&mut b, 1);
            let mut rekeyed: Vec<NGramRecord> = b.iter().collect();
            rekeyed.sort_by_key(|r| r.words()[2]);
            let mut want: Vec<NGramRecord> = b.iter().collect();
            want.sort_by(|a, b| cmp_suffix(a.words(), b.words()));
            let key = |v: &[NGramRecord]| v.iter().map(|r| r.words().to_vec()).collect::<Vec<_>>();
            prop_assert_eq!(key(&rekeyed), key(&want));
            prop_assert!(b.is_sorted(RecordOrder::Context));
        }
    }
}
