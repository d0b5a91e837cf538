//! Last pass: interpolated probabilities and backoffs for every order,
//! laid out as the levels of a reversed trie while streaming `B_N` once.
//!
//! `B_N` is cut into chunks of whole order-2 runs (records sharing
//! `w_{N-1}`). Workers process chunks independently: inside a chunk, runs of
//! order `n` are nested in runs of order `n - 1`, so the lower-order
//! probability of every member is at hand in a per-order dense array. Chunk
//! outputs are then placed in chunk order through per-word cursors seeded
//! with the exclusive prefix sums of the last-word counts.

use std::collections::BTreeMap;
use std::sync::mpsc::{channel, sync_channel};
use std::sync::Mutex;

use super::adjusting::{initial_positions, AdjustedCounts, Discounts, Entry};
use super::model::ModelLevel;
use crate::ngram_blocks::{cmp_context, prefetch, NGramRecord, RecordBlock};
use crate::{Error, Result, WordId};

type Source = Box<dyn Iterator<Item = Result<NGramRecord>> + Send>;

#[derive(Clone, Copy, Debug)]
struct Item {
    last: WordId,
    first: WordId,
    a: u64,
    p: f64,
}

#[derive(Default)]
struct ChunkOut {
    /// Per order `n` (index `n - 1`), in emission order.
    items: Vec<Vec<Item>>,
    backoff1: Vec<(WordId, f64)>,
    /// Per context order `j` (index `j - 1`, `j >= 2`): reversed paths, back to back.
    ctx_paths: Vec<Vec<WordId>>,
    ctx_backoffs: Vec<Vec<f64>>,
}

/// Unigram probabilities: `(a - D_1(a)) / m2 + b(eps) / V`.
pub fn unigram_probs(unigram: &[u64], d: &Discounts) -> Result<(Vec<f64>, f64, u64)> {
    let m2: u64 = unigram.iter().sum();
    if m2 == 0 {
        return Err(Error::Empty("no bigram has a left extension".into()));
    }
    let v = unigram.len() as f64;
    let m = m2 as f64;
    let b_eps = unigram.iter().map(|&a| d.get(1, a)).sum::<f64>() / m;
    let p = unigram.iter().map(|&a| (a as f64 - d.get(1, a)) / m + b_eps / v).collect();
    Ok((p, b_eps, m2))
}

struct Worker<'a> {
    n: usize,
    pad: WordId,
    d: &'a Discounts,
    p1: &'a [f64],
    stats: Vec<Vec<Entry>>,
    runs: Vec<u32>,
    p: Vec<Vec<f64>>,
    members: Vec<Vec<(WordId, u64)>>,
}

impl<'a> Worker<'a> {
    fn new(n: usize, v: usize, d: &'a Discounts, p1: &'a [f64]) -> Self {
        let dense = |i: usize| (2..n).contains(&(i + 1));
        Self {
            n,
            pad: v as WordId,
            d,
            p1,
            stats: (0..n).map(|i| if dense(i) { vec![Entry::default(); v] } else { Vec::new() }).collect(),
            runs: vec![0; n],
            p: (0..n).map(|i| if dense(i) { vec![0.0; v] } else { Vec::new() }).collect(),
            members: vec![Vec::new(); n],
        }
    }

    fn process(&mut self, block: &RecordBlock) -> ChunkOut {
        let big = self.n;
        let mut out = ChunkOut {
            items: vec![Vec::new(); big],
            ctx_paths: vec![Vec::new(); big],
            ctx_backoffs: vec![Vec::new(); big],
            ..ChunkOut::default()
        };
        let mut i = 0;
        while i < block.len() {
            let key = block.words(i)[big - 2];
            let mut j = i + 1;
            while j < block.len() && block.words(j)[big - 2] == key {
                j += 1;
            }
            self.run(block, 2, i, j, &mut out);
            i = j;
        }
        out
    }

    /// Records `lo..hi` share the order-`n` context `w_{N-n+1} .. w_{N-1}`.
    fn run(&mut self, block: &RecordBlock, n: usize, lo: usize, hi: usize, out: &mut ChunkOut) {
        let big = self.n;
        let w0 = block.words(lo);
        let first = w0[big - n];
        if first == self.pad {
            return;
        }
        let mut members = std::mem::take(&mut self.members[n - 1]);
        members.clear();
        if n < big {
            self.runs[n - 1] += 1;
            let id = self.runs[n - 1];
            let stats = &mut self.stats[n - 1];
            let mut touched = 0;
            for i in lo..hi {
                let w = block.words(i);
                let (left, x) = (w[big - n - 1], w[big - 1]);
                let e = &mut stats[x as usize];
                if e.range != id {
                    *e = Entry { left: u32::MAX, count: 0, range: id };
                    members.push((x, 0));
                    touched += 1;
                }
                if left != self.pad && e.left != left {
                    e.left = left;
                    e.count += 1;
                }
            }
            debug_assert_eq!(touched, members.len());
            for m in members.iter_mut() {
                m.1 = stats[m.0 as usize].count as u64;
            }
        } else {
            members.extend((lo..hi).map(|i| (block.words(i)[big - 1], block.count(i))));
        }

        let mut d = 0u64;
        let mut nk = [0u64; 4];
        for &(_, a) in &members {
            d += a;
            nk[a.min(3) as usize] += 1;
        }
        let (b, denom) = if d == 0 {
            (1.0, 0.0)
        } else {
            let df = d as f64;
            let num = self.d.get(n, 1) * nk[1] as f64 + self.d.get(n, 2) * nk[2] as f64 + self.d.get(n, 3) * nk[3] as f64;
            (num / df, df)
        };
        for &(x, a) in &members {
            let u = if d == 0 { 0.0 } else { (a as f64 - self.d.get(n, a)) / denom };
            let lower = if n == 2 { self.p1[x as usize] } else { self.p[n - 2][x as usize] };
            let p = u + b * lower;
            if n < big {
                self.p[n - 1][x as usize] = p;
            }
            out.items[n - 1].push(Item { last: x, first, a, p });
        }
        if n == 2 {
            out.backoff1.push((w0[big - 2], b));
        } else {
            let ctx = &mut out.ctx_paths[n - 2];
            ctx.extend((1..n).map(|j| w0[big - 1 - j]));
            out.ctx_backoffs[n - 2].push(b);
        }
        self.members[n - 1] = members;

        if n < big {
            let mut i = lo;
            while i < hi {
                let key = block.words(i)[big - n - 1];
                let mut j = i + 1;
                while j < hi && block.words(j)[big - n - 1] == key {
                    j += 1;
                }
                self.run(block, n + 1, i, j, out);
                i = j;
            }
        }
    }
}

/// Places chunk outputs at their final level positions.
struct Placer {
    levels: Vec<ModelLevel>,
    start: Vec<Vec<u64>>,
    cursors: Vec<Vec<u64>>,
    ctx_paths: Vec<Vec<WordId>>,
    ctx_backoffs: Vec<Vec<f64>>,
}

impl Placer {
    fn new(n: usize, counts: &AdjustedCounts, p1: Vec<f64>) -> Self {
        let v = counts.unigram.len();
        let mut levels = Vec::with_capacity(n);
        levels.push(ModelLevel {
            symbols: (0..v as WordId).collect(),
            counts: counts.unigram.clone(),
            prob: p1,
            backoff: vec![1.0; v],
        });
        for i in 1..n {
            let m = counts.sizes[i] as usize;
            levels.push(ModelLevel {
                symbols: vec![0; m],
                counts: vec![0; m],
                prob: vec![0.0; m],
                backoff: if i + 1 < n { vec![1.0; m] } else { Vec::new() },
            });
        }
        let start: Vec<Vec<u64>> = counts.last_word.iter().map(|c| initial_positions(c)).collect();
        Self {
            levels,
            cursors: start.clone(),
            start,
            ctx_paths: vec![Vec::new(); n],
            ctx_backoffs: vec![Vec::new(); n],
        }
    }

    fn place(&mut self, chunk: ChunkOut) -> Result<()> {
        for (i, items) in chunk.items.iter().enumerate().skip(1) {
            let level = &mut self.levels[i];
            let cursors = &mut self.cursors[i];
            for it in items {
                let pos = cursors[it.last as usize] as usize;
                if pos >= level.symbols.len() {
                    return Err(Error::Corrupt(format!("order-{} placement past the level end", i + 1)));
                }
                cursors[it.last as usize] += 1;
                level.symbols[pos] = it.first;
                level.counts[pos] = it.a;
                level.prob[pos] = it.p;
            }
        }
        for (w, b) in chunk.backoff1 {
            self.levels[0].backoff[w as usize] = b;
        }
        for (i, (paths, bs)) in chunk.ctx_paths.into_iter().zip(chunk.ctx_backoffs).enumerate() {
            self.ctx_paths[i].extend(paths);
            self.ctx_backoffs[i].extend(bs);
        }
        Ok(())
    }

    /// Checks every cursor reached the end of its word's group, then writes
    /// the buffered context backoffs into their nodes.
    fn finish(mut self, counts: &AdjustedCounts) -> Result<Vec<ModelLevel>> {
        for (i, cur) in self.cursors.iter().enumerate().skip(1) {
            let ok = cur.iter().zip(&self.start[i]).zip(&counts.last_word[i]).all(|((&c, &s), &k)| c == s + k);
            if !ok {
                return Err(Error::Corrupt(format!("order-{} grams disagree with the adjusting counts", i + 1)));
            }
        }
        let pointers: Vec<Vec<u64>> = self.levels.iter().map(|l| prefix_sums(&l.counts)).collect();
        for j in 2..self.levels.len() {
            let paths = std::mem::take(&mut self.ctx_paths[j - 1]);
            let bs = std::mem::take(&mut self.ctx_backoffs[j - 1]);
            for (path, b) in paths.chunks_exact(j).zip(bs) {
                let pos = find(&self.levels, &pointers, path)
                    .ok_or_else(|| Error::Corrupt(format!("context {path:?} of order {j} is not in the model")))?;
                self.levels[j - 1].backoff[pos] = b;
            }
        }
        Ok(self.levels)
    }
}

pub(crate) fn prefix_sums(counts: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(counts.len() + 1);
    let mut acc = 0;
    out.push(0);
    for &c in counts {
        acc += c;
        out.push(acc);
    }
    out
}

/// Position of a reversed path; `pointers[l]` delimits children of level `l + 1`.
pub(crate) fn find(levels: &[ModelLevel], pointers: &[Vec<u64>], path: &[WordId]) -> Option<usize> {
    let mut pos = *path.first()? as usize;
    if pos >= levels.first()?.symbols.len() || path.len() > levels.len() {
        return None;
    }
    for (l, &sym) in path.iter().enumerate().skip(1) {
        let (lo, hi) = (pointers[l - 1][pos] as usize, pointers[l - 1][pos + 1] as usize);
        let syms = &levels[l].symbols[lo..hi];
        pos = lo + syms.binary_search(&sym).ok()?;
    }
    Some(pos)
}

pub struct LastPassConfig {
    pub order: usize,
    pub workers: usize,
    pub chunk_records: usize,
}

pub struct LastPassOutput {
    pub levels: Vec<ModelLevel>,
    pub b_eps: f64,
    pub m2: u64,
}

/// Streams the context-sorted `B_N` records once and returns the model levels.
pub fn last_pass(records: Source, counts: &AdjustedCounts, d: &Discounts, config: &LastPassConfig) -> Result<LastPassOutput> {
    let big = config.order;
    let v = counts.unigram.len();
    let (p1, b_eps, m2) = unigram_probs(&counts.unigram, d)?;
    let workers = config.workers.max(1);
    let target = config.chunk_records.max(1);
    let mut placer = Placer::new(big, counts, p1.clone());

    let (job_tx, job_rx) = sync_channel::<(usize, RecordBlock)>(workers);
    let job_rx = Mutex::new(job_rx);
    let (res_tx, res_rx) = channel::<(usize, ChunkOut)>();
    let p1 = &p1;
    let job_rx = &job_rx;

    std::thread::scope(|s| -> Result<()> {
        for _ in 0..workers {
            let res_tx = res_tx.clone();
            s.spawn(move || {
                let mut worker = Worker::new(big, v, d, p1);
                loop {
                    let job = job_rx.lock().unwrap().recv();
                    let Ok((seq, block)) = job else { break };
                    if res_tx.send((seq, worker.process(&block))).is_err() {
                        break;
                    }
                }
            });
        }
        drop(res_tx);

        let mut pending: BTreeMap<usize, ChunkOut> = BTreeMap::new();
        let mut next = 0usize;
        let mut sent = 0usize;
        let drain = |pending: &mut BTreeMap<usize, ChunkOut>, next: &mut usize, placer: &mut Placer| -> Result<()> {
            while let Some(out) = pending.remove(next) {
                placer.place(out)?;
                *next += 1;
            }
            Ok(())
        };

        let read = || -> Result<()> {
            let mut chunk = RecordBlock::with_capacity(big, target);
            let mut prev: Option<NGramRecord> = None;
            for batch in prefetch(records, 8192) {
                for rec in batch? {
                    if rec.order() != big {
                        return Err(Error::Corrupt(format!("order-{} record in an order-{big} stream", rec.order())));
                    }
                    if let Some(p) = &prev {
                        if !cmp_context(p.words(), rec.words()).is_lt() {
                            return Err(Error::Corrupt(format!("records not in strict context order at {:?}", rec.words())));
                        }
                        if chunk.len() >= target && p.words()[big - 2] != rec.words()[big - 2] {
                            let full = std::mem::replace(&mut chunk, RecordBlock::with_capacity(big, target));
                            job_tx.send((sent, full)).map_err(|_| Error::Corrupt("last-pass workers stopped".into()))?;
                            sent += 1;
                            while let Ok((seq, out)) = res_rx.try_recv() {
                                pending.insert(seq, out);
                            }
                            drain(&mut pending, &mut next, &mut placer)?;
                        }
                    }
                    if rec.words().iter().any(|&w| w as usize > v) {
                        return Err(Error::Corrupt(format!("word id beyond the vocabulary in {:?}", rec.words())));
                    }
                    chunk.push(rec.words(), rec.count);
                    prev = Some(rec);
                }
            }
            if !chunk.is_empty() {
                job_tx.send((sent, chunk)).map_err(|_| Error::Corrupt("last-pass workers stopped".into()))?;
                sent += 1;
            }
            Ok(())
        };
        let result = read();
        drop(job_tx);
        result?;
        while next < sent {
            let (seq, out) = res_rx.recv().map_err(|_| Error::Corrupt("last-pass worker panicked".into()))?;
            pending.insert(seq, out);
            drain(&mut pending, &mut next, &mut placer)?;
        }
        Ok(())
    })?;

    Ok(LastPassOutput {
        levels: placer.finish(counts)?,
        b_eps,
        m2,
    })
}
