//! K-way merge of sorted record streams.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver};
use std::thread::JoinHandle;

use super::{BlockInfo, BlockReader, BlockWriter, Encoding, NGramRecord, RecordOrder};
use crate::{Error, Result};

/// Most streams merged at once; more inputs are merged hierarchically.
pub const MAX_FAN_IN: usize = 256;

type Source = Box<dyn Iterator<Item = Result<NGramRecord>> + Send>;

struct Head {
    rec: NGramRecord,
    src: usize,
    order: RecordOrder,
}

impl PartialEq for Head {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Head {}
impl PartialOrd for Head {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Head {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        self.order
            .cmp(other.rec.words(), self.rec.words())
            .then(other.src.cmp(&self.src))
    }
}

/// Globally sorted stream over sorted sources, optionally summing duplicates.
pub struct Merger {
    sources: Vec<Source>,
    heap: BinaryHeap<Head>,
    last: Vec<Option<NGramRecord>>,
    order: RecordOrder,
    combine: bool,
    started: bool,
    failed: bool,
    scratch: Vec<BlockInfo>,
}

impl Merger {
    pub fn new(sources: Vec<Source>, order: RecordOrder, combine: bool) -> Self {
        let k = sources.len();
        Self {
            sources,
            heap: BinaryHeap::with_capacity(k),
            last: vec![None; k],
            order,
            combine,
            started: false,
            failed: false,
            scratch: Vec::new(),
        }
    }

    /// Intermediate files written by a hierarchical merge.
    pub fn scratch_files(&self) -> &[BlockInfo] {
        &self.scratch
    }

    fn pull(&mut self, src: usize) -> Result<()> {
        match self.sources[src].next() {
            None => Ok(()),
            Some(Err(e)) => Err(e),
            Some(Ok(rec)) => {
                if let Some(prev) = &self.last[src] {
                    if self.order.cmp(prev.words(), rec.words()).is_gt() {
                        return Err(Error::Corrupt(format!(
                            "merge input {src} is not sorted: {:?} after {:?}",
                            rec.words(),
                            prev.words()
                        )));
                    }
                }
                self.last[src] = Some(rec);
                self.heap.push(Head {
                    rec,
                    src,
                    order: self.order,
                });
                Ok(())
            }
        }
    }

    fn step(&mut self) -> Result<Option<NGramRecord>> {
        if !self.started {
            self.started = true;
            for s in 0..self.sources.len() {
                self.pull(s)?;
            }
        }
        let Some(top) = self.heap.pop() else { return Ok(None) };
        self.pull(top.src)?;
        let mut rec = top.rec;
        if self.combine {
            while let Some(next) = self.heap.peek() {
                if next.rec.words() != rec.words() {
                    break;
                }
                let next = self.heap.pop().unwrap();
                rec.count += next.rec.count;
                self.pull(next.src)?;
            }
        }
        Ok(Some(rec))
    }
}

impl Iterator for Merger {
    type Item = Result<NGramRecord>;

    fn next(&mut self) -> Option<Result<NGramRecord>> {
        if self.failed {
            return None;
        }
        match self.step() {
            Ok(r) => r.map(Ok),
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// Merges sorted block files, first reducing more than [`MAX_FAN_IN`] inputs
/// to intermediate files in `tmp`.
pub fn merge_blocks(paths: &[PathBuf], order: RecordOrder, combine: bool, tmp: &Path, encoding: Encoding, window_bytes: u32) -> Result<Merger> {
    let mut paths = paths.to_vec();
    let mut round = 0;
    let mut scratch = Vec::new();
    while paths.len() > MAX_FAN_IN {
        let mut next = Vec::new();
        for (g, group) in paths.chunks(MAX_FAN_IN).enumerate() {
            let out = tmp.join(format!("merge-{round}-{g}.ngbk"));
            let info = merge_to_file(group, order, combine, &out, encoding, window_bytes)?;
            next.push(info.path.clone());
            scratch.push(info);
        }
        for p in &paths {
            let _ = std::fs::remove_file(p);
        }
        paths = next;
        round += 1;
    }
    let sources = paths
        .iter()
        .map(|p| BlockReader::open(p).map(|r| Box::new(r) as Source))
        .collect::<Result<Vec<_>>>()?;
    let mut merger = Merger::new(sources, order, combine);
    merger.scratch = scratch;
    Ok(merger)
}

fn merge_to_file(paths: &[PathBuf], order: RecordOrder, combine: bool, out: &Path, encoding: Encoding, window_bytes: u32) -> Result<BlockInfo> {
    let readers = paths.iter().map(|p| BlockReader::open(p)).collect::<Result<Vec<_>>>()?;
    let n = readers.first().map_or(1, |r| r.order());
    let sources = readers.into_iter().map(|r| Box::new(r) as Source).collect();
    let mut w = BlockWriter::create(out, n, encoding, window_bytes, order)?;
    for rec in Merger::new(sources, order, combine) {
        w.push(&rec?)?;
    }
    w.finish()
}

/// Runs `iter` on a producer thread, handing over chunks of `chunk` items.
pub fn prefetch<T, I>(iter: I, chunk: usize) -> Prefetch<T>
where
    T: Send + 'static,
    I: Iterator<Item = Result<T>> + Send + 'static,
{
    let (tx, rx) = sync_channel::<Result<Vec<T>>>(2);
    let handle = std::thread::spawn(move || {
        let mut buf = Vec::with_capacity(chunk);
        for item in iter {
            match item {
                Ok(x) => {
                    buf.push(x);
                    if buf.len() == chunk && tx.send(Ok(std::mem::replace(&mut buf, Vec::with_capacity(chunk)))).is_err() {
                        return;
                    }
                }
                Err(e) => {
                    let _ = tx.send(Err(e));
                    return;
                }
            }
        }
        if !buf.is_empty() {
            let _ = tx.send(Ok(buf));
        }
    });
    Prefetch {
        rx,
        handle: Some(handle),
    }
}

pub struct Prefetch<T> {
    rx: Receiver<Result<Vec<T>>>,
    handle: Option<JoinHandle<()>>,
}

impl<T> Iterator for Prefetch<T> {
    type Item = Result<Vec<T>>;

    fn next(&mut self) -> Option<Result<Vec<T>>> {
        match self.rx.recv() {
            Ok(x) => Some(x),
            Err(_) => {
                if let Some(h) = self.handle.take() {
                    if h.join().is_err() {
                        return Some(Err(Error::Corrupt("prefetch thread panicked".into())));
                    }
                }
                None
            }
        }
    }
}
