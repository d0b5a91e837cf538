//! Counting: distinct N-gram windows into context-sorted block files.

use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread::JoinHandle;

use xxhash_rust::xxh3::xxh3_64;

use crate::ngram_blocks::block_file::write_block;
use crate::ngram_blocks::{radix_sort_context, BlockInfo, Encoding, RecordBlock, RecordOrder};
use crate::text::{for_each_line, tokens};
use crate::vocabulary::Vocabulary;
use crate::{Error, Result, WordId, MAX_ORDER};

const EMPTY: u32 = u32::MAX;
/// Smallest block the budget is rounded up to.
pub const MIN_BLOCK_RECORDS: usize = 8;

/// Records one in-memory block holds under `ram_budget` bytes: two blocks
/// (one filling, one being flushed) plus a hash set at load factor 1/2.
pub fn block_records(n: usize, ram_budget: usize) -> usize {
    let per_record = 2 * RecordBlock::record_bytes(n) + 2 * 4;
    (ram_budget / per_record).max(MIN_BLOCK_RECORDS)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountingStats {
    pub lines: u64,
    pub tokens: u64,
    /// Window occurrences, including head windows.
    pub windows: u64,
    pub flushes: usize,
    pub block_records: usize,
}

#[derive(Debug)]
pub struct CountingOutput {
    pub blocks: Vec<BlockInfo>,
    pub stats: CountingStats,
}

#[derive(Clone, Debug)]
pub struct CountingConfig {
    pub order: usize,
    pub ram_budget: usize,
    pub encoding: Encoding,
    pub window_bytes: u32,
    pub sort_workers: usize,
    pub bos_eos: bool,
}

/// Open-addressing set over the records of a block, linear probing.
struct WindowSet {
    slots: Vec<u32>,
    mask: usize,
}

impl WindowSet {
    fn new(records: usize) -> Self {
        let size = (2 * records).next_power_of_two().max(16);
        Self {
            slots: vec![EMPTY; size],
            mask: size - 1,
        }
    }

    fn clear(&mut self) {
        self.slots.fill(EMPTY);
    }

    #[inline]
    fn hash(words: &[WordId]) -> usize {
        let mut buf = [0u8; 4 * MAX_ORDER];
        for (i, w) in words.iter().enumerate() {
            buf[4 * i..4 * i + 4].copy_from_slice(&w.to_le_bytes());
        }
        xxh3_64(&buf[..4 * words.len()]) as usize
    }

    /// Counts `words` in `block`; returns false if a new record would not fit.
    #[inline]
    fn insert(&mut self, block: &mut RecordBlock, cap: usize, words: &[WordId]) -> bool {
        let mut s = Self::hash(words) & self.mask;
        loop {
            let id = self.slots[s];
            if id == EMPTY {
                if block.len() == cap {
                    return false;
                }
                self.slots[s] = block.len() as u32;
                block.push(words, 1);
                return true;
            }
            let id = id as usize;
            if block.words(id) == words {
                block.set_count(id, block.count(id) + 1);
                return true;
            }
            s = (s + 1) & self.mask;
        }
    }
}

/// Sorts and writes full blocks on its own thread, handing emptied blocks back.
struct Flusher {
    tx: Option<SyncSender<RecordBlock>>,
    empty: Receiver<RecordBlock>,
    handle: Option<JoinHandle<Result<Vec<BlockInfo>>>>,
    sent: usize,
}

impl Flusher {
    fn spawn(dir: PathBuf, config: &CountingConfig) -> Self {
        let (tx, rx) = sync_channel::<RecordBlock>(0);
        let (back_tx, back_rx) = sync_channel::<RecordBlock>(2);
        let encoding = config.encoding;
        let window = config.window_bytes;
        let workers = config.sort_workers;
        let handle = std::thread::spawn(move || {
            let mut infos = Vec::new();
            for mut block in rx {
                radix_sort_context(&mut block, workers);
                let path = dir.join(format!("count-{}.ngbk", infos.len()));
                infos.push(write_block(&path, &block, encoding, window, RecordOrder::Context)?);
                block.clear();
                let _ = back_tx.send(block);
            }
            Ok(infos)
        });
        Self {
            tx: Some(tx),
            empty: back_rx,
            handle: Some(handle),
            sent: 0,
        }
    }

    /// Queues `block` and returns a block to keep filling.
    fn flush(&mut self, block: RecordBlock, n: usize, cap: usize) -> Result<RecordBlock> {
        let tx = self.tx.as_ref().unwrap();
        if tx.send(block).is_err() {
            return Err(self.join().err().unwrap_or_else(|| Error::Corrupt("block writer stopped".into())));
        }
        self.sent += 1;
        // the first two flushes allocate; later ones reuse written blocks
        if self.sent < 2 {
            return Ok(RecordBlock::with_capacity(n, cap));
        }
        match self.empty.recv() {
            Ok(b) => Ok(b),
            Err(_) => Err(self.join().err().unwrap_or_else(|| Error::Corrupt("block writer stopped".into()))),
        }
    }

    fn join(&mut self) -> Result<Vec<BlockInfo>> {
        self.tx.take();
        match self.handle.take() {
            Some(h) => h.join().map_err(|_| Error::Corrupt("block writer panicked".into()))?,
            None => Ok(Vec::new()),
        }
    }
}

/// Pads the first `N - 1` windows of a line on the left with `pad`.
#[inline]
fn for_each_window(ids: &[WordId], n: usize, pad: WordId, mut f: impl FnMut(&[WordId]) -> Result<()>) -> Result<()> {
    if ids.len() < n {
        return Ok(());
    }
    let mut w = [pad; MAX_ORDER];
    for j in 0..n - 1 {
        w[n - 1 - j..n].copy_from_slice(&ids[..=j]);
        f(&w[..n])?;
    }
    for win in ids.windows(n) {
        f(win)?;
    }
    Ok(())
}

/// Slides an `N`-word window over every line of `input` and writes the
/// distinct windows with their counts as context-sorted blocks into `dir`.
///
/// Lines shorter than `N` tokens yield nothing. Lines of at least `N` tokens
/// also yield `N - 1` head windows padded on the left with id `V`, so that
/// every n-gram occurrence (n < N) ends exactly one window.
pub fn counting_pass(input: &Path, vocab: &Vocabulary, config: &CountingConfig, dir: &Path) -> Result<CountingOutput> {
    let n = config.order;
    if !(2..=MAX_ORDER).contains(&n) {
        return Err(Error::InvalidArgument(format!("estimation order {n} outside 2..=8")));
    }
    let pad = vocab.len() as WordId;
    let cap = block_records(n, config.ram_budget);
    let mut set = WindowSet::new(cap);
    let mut block = RecordBlock::with_capacity(n, cap);
    let mut flusher = Flusher::spawn(dir.to_path_buf(), config);
    let mut stats = CountingStats {
        block_records: cap,
        ..CountingStats::default()
    };
    let mut ids: Vec<WordId> = Vec::new();
    let scan = for_each_line(input, |line| {
        if line.split_whitespace().next().is_none() {
            return Ok(());
        }
        ids.clear();
        for t in tokens(line, config.bos_eos) {
            let id = vocab
                .lookup(t)
                .ok_or_else(|| Error::Corrupt(format!("token {t:?} missing from the vocabulary")))?;
            ids.push(id);
        }
        stats.lines += 1;
        stats.tokens += ids.len() as u64;
        for_each_window(&ids, n, pad, |w| {
            stats.windows += 1;
            if !set.insert(&mut block, cap, w) {
                let full = std::mem::replace(&mut block, RecordBlock::new(n));
                block = flusher.flush(full, n, cap)?;
                stats.flushes += 1;
                set.clear();
                set.insert(&mut block, cap, w);
            }
            Ok(())
        })
    });
    if let Err(e) = scan {
        let _ = flusher.join();
        return Err(e);
    }
    if !block.is_empty() {
        flusher.flush(block, n, cap)?;
        stats.flushes += 1;
    }
    let blocks = flusher.join()?;
    Ok(CountingOutput { blocks, stats })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::io::Write;

    use super::*;
    use crate::ngram_blocks::{merge_blocks, BlockReader};
    use crate::text::vocabulary_of;

    fn config(n: usize, ram: usize) -> CountingConfig {
        CountingConfig {
            order: n,
            ram_budget: ram,
            encoding: Encoding::FcByte,
            window_bytes: 4096,
            sort_workers: 2,
            bos_eos: false,
        }
    }

    fn corpus(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("corpus.txt");
        std::fs::File::create(&p).unwrap().write_all(text.as_bytes()).unwrap();
        p
    }

    fn words_of(vocab: &Vocabulary, w: &[WordId]) -> String {
        w.iter()
            .map(|&x| if (x as usize) < vocab.len() { vocab.token(x) } else { "_" })
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn bigram_example() {
        let dir = tempfile::tempdir().unwrap();
        let input = corpus(dir.path(), "a b a a c\n");
        let vocab = vocabulary_of(&input, false).unwrap();
        let out = counting_pass(&input, &vocab, &config(2, 1 << 20), dir.path()).unwrap();
        assert_eq!(out.stats.flushes, 1);
        let recs: Vec<(String, u64)> = BlockReader::open(&out.blocks[0].path)
            .unwrap()
            .map(|r| r.unwrap())
            .map(|r| (words_of(&vocab, r.words()), r.count))
            .collect();
        // context order: by first word, then by second; the head window "_ a" sorts last
        let want = [("a a", 1), ("a b", 1), ("a c", 1), ("b a", 1), ("_ a", 1)];
        assert_eq!(recs, want.map(|(g, c)| (g.to_string(), c)));
    }

    #[test]
    fn short_lines_yield_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let input = corpus(dir.path(), "a b\nc\n\n");
        let vocab = vocabulary_of(&input, false).unwrap();
        let out = counting_pass(&input, &vocab, &config(3, 1 << 20), dir.path()).unwrap();
        assert!(out.blocks.is_empty());
        assert_eq!(out.stats.windows, 0);
    }

    fn brute_force(lines: &[&str], n: usize, vocab: &Vocabulary) -> BTreeMap<Vec<WordId>, u64> {
        let pad = vocab.len() as WordId;
        let mut m = BTreeMap::new();
        for line in lines {
            let ids: Vec<WordId> = line.split_whitespace().map(|t| vocab.lookup(t).unwrap()).collect();
            if ids.len() < n {
                continue;
            }
            let mut padded = vec![pad; n - 1];
            padded.extend(&ids);
            for w in padded.windows(n) {
                *m.entry(w.to_vec()).or_insert(0) += 1;
            }
        }
        m
    }

    #[test]
    fn budgets_give_same_multiset() {
        let dir = tempfile::tempdir().unwrap();
        let lines = crate::testutil::random_lines(300, 20, 8);
        let text: Vec<String> = lines.iter().map(|l| l.join(" ")).collect();
        let input = corpus(dir.path(), &(text.join("\n") + "\n"));
        let vocab = vocabulary_of(&input, false).unwrap();
        let refs: Vec<&str> = text.iter().map(|s| s.as_str()).collect();
        let want = brute_force(&refs, 3, &vocab);
        for ram in [1 << 24, 4000, 700] {
            let sub = dir.path().join(format!("r{ram}"));
            std::fs::create_dir(&sub).unwrap();
            let out = counting_pass(&input, &vocab, &config(3, ram), &sub).unwrap();
            if ram == 700 {
                assert!(out.stats.flushes >= 4, "{}", out.stats.flushes);
            }
            assert_eq!(out.blocks.len(), out.stats.flushes);
            for b in &out.blocks {
                assert!(BlockReader::read_all(&b.path).unwrap().is_sorted(RecordOrder::Context));
            }
            let paths: Vec<PathBuf> = out.blocks.iter().map(|b| b.path.clone()).collect();
            let got: BTreeMap<Vec<WordId>, u64> = merge_blocks(&paths, RecordOrder::Context, true, &sub, Encoding::Raw, 0)
                .unwrap()
                .map(|r| r.unwrap())
                .map(|r| (r.words().to_vec(), r.count))
                .collect();
            assert_eq!(got, want);
        }
    }
}
