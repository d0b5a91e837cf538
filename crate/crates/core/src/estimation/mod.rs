//! Modified Kneser-Ney estimation with a single sort of N-gram records.
//!
//! 1. counting: sliding windows of N words are counted in RAM blocks,
//!    radix-sorted in context order and flushed to disk.
//! 2. adjusting: the blocks are merged once into `B_N`; modified counts,
//!    smoothing statistics and per-word counters are computed on the way.
//! 3. last pass: `B_N` is streamed once more to compute probabilities and
//!    backoffs of every order directly in reversed-trie layout.

pub mod adjusting;
pub mod counting;
pub mod last;
pub mod model;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use adjusting::{
    adjusting_pass, compute_discounts, initial_positions, order_discounts, AdjustedCounts, AdjustingConfig, AdjustingOutput, Discounts,
    LeftExtensions, SmoothingStats,
};
pub use counting::{block_records, counting_pass, CountingConfig, CountingOutput, CountingStats};
pub use last::{last_pass, unigram_probs, LastPassConfig, LastPassOutput};
pub use model::{EstimatedModel, ModelLevel};

use crate::ngram_blocks::{BlockInfo, BlockReader, Encoding};
use crate::text::vocabulary_of;
use crate::{Error, Result, MAX_ORDER};

#[derive(Clone, Debug)]
pub struct EstimateConfig {
    pub order: usize,
    /// Bytes of RAM for one counting block and the merge buffers.
    pub ram_budget: usize,
    pub tmp_dir: PathBuf,
    pub threads: usize,
    pub encoding: Encoding,
    pub window_bytes: u32,
    pub bos_eos: bool,
    /// `D_n(1..=3)` used when the statistics of an order are degenerate.
    pub discount_fallback: Option<[f64; 3]>,
    /// Records per last-pass chunk, rounded up to whole order-2 runs.
    pub chunk_records: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            order: 5,
            ram_budget: 1 << 30,
            tmp_dir: std::env::temp_dir(),
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            encoding: Encoding::FcByte,
            window_bytes: 1 << 16,
            bos_eos: false,
            discount_fallback: None,
            chunk_records: 1 << 16,
        }
    }
}

/// One file written under the work directory.
#[derive(Clone, Debug)]
pub struct TmpFile {
    pub name: String,
    pub kind: &'static str,
    pub n: usize,
    pub records: u64,
    pub bytes: u64,
}

impl TmpFile {
    fn of(info: &BlockInfo, kind: &'static str) -> Self {
        Self {
            name: info.path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            kind,
            n: info.n,
            records: info.records,
            bytes: info.bytes,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub counting: CountingStats,
    pub tmp_files: Vec<TmpFile>,
    /// Sorted merges of N-gram blocks.
    pub merges: usize,
    pub merged_records: u64,
    pub merged_bytes: u64,
    pub merged_raw_bytes: u64,
    pub stats: SmoothingStats,
    pub sizes: Vec<u64>,
    /// Seconds spent in counting, adjusting and the last pass.
    pub seconds: [f64; 3],
}

impl EstimateReport {
    /// Records of order below N written to disk.
    pub fn lower_order_records_on_disk(&self, order: usize) -> u64 {
        self.tmp_files.iter().filter(|f| f.n < order).map(|f| f.records).sum()
    }
}

/// Estimates an order-N model from a one-sentence-per-line text file.
pub fn estimate(input: &Path, config: &EstimateConfig) -> Result<(EstimatedModel, EstimateReport)> {
    let n = config.order;
    if !(2..=MAX_ORDER).contains(&n) {
        return Err(Error::InvalidArgument(format!("order {n} outside 2..={MAX_ORDER}")));
    }
    std::fs::create_dir_all(&config.tmp_dir).map_err(Error::io_at(&config.tmp_dir))?;
    let work = tempfile::Builder::new()
        .prefix("efgram-")
        .tempdir_in(&config.tmp_dir)
        .map_err(Error::io_at(&config.tmp_dir))?;
    let vocab = vocabulary_of(input, config.bos_eos)?;
    let v = vocab.len();

    let t0 = Instant::now();
    let counted = counting_pass(
        input,
        &vocab,
        &CountingConfig {
            order: n,
            ram_budget: config.ram_budget,
            encoding: config.encoding,
            window_bytes: config.window_bytes,
            sort_workers: config.threads.max(1),
            bos_eos: config.bos_eos,
        },
        work.path(),
    )?;
    let t1 = Instant::now();
    let adjusted = adjusting_pass(
        &counted.blocks,
        v,
        &AdjustingConfig {
            order: n,
            ram_budget: config.ram_budget,
            encoding: config.encoding,
            window_bytes: config.window_bytes,
        },
        work.path(),
    )?;
    let discounts = compute_discounts(&adjusted.counts.stats, config.discount_fallback)?;
    let t2 = Instant::now();
    let reader = BlockReader::open(&adjusted.merged.path)?;
    let last = last_pass(
        Box::new(reader),
        &adjusted.counts,
        &discounts,
        &LastPassConfig {
            order: n,
            workers: config.threads.saturating_sub(1).max(1),
            chunk_records: config.chunk_records,
        },
    )?;
    let t3 = Instant::now();

    let mut tmp_files: Vec<TmpFile> = counted.blocks.iter().map(|b| TmpFile::of(b, "count")).collect();
    tmp_files.extend(adjusted.scratch.iter().map(|b| TmpFile::of(b, "merge-scratch")));
    tmp_files.push(TmpFile::of(&adjusted.merged, "merged"));
    let report = EstimateReport {
        counting: counted.stats,
        tmp_files,
        merges: 1,
        merged_records: adjusted.merged.records,
        merged_bytes: adjusted.merged.bytes,
        merged_raw_bytes: adjusted.raw_bytes,
        stats: adjusted.counts.stats.clone(),
        sizes: adjusted.counts.sizes.clone(),
        seconds: [(t1 - t0).as_secs_f64(), (t2 - t1).as_secs_f64(), (t3 - t2).as_secs_f64()],
    };
    let model = EstimatedModel {
        order: n,
        vocab,
        levels: last.levels,
        discounts,
        b_eps: last.b_eps,
        m2: last.m2,
    };
    work.close().map_err(Error::io_at(&config.tmp_dir))?;
    Ok((model, report))
}
