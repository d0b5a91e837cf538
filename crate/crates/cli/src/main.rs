mod grams;

use std::io::{BufRead, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use efgram::estimation::{counting_pass, estimate, CountingConfig, EstimateConfig};
use efgram::hash_index::HashIndex;
use efgram::ngram_blocks::Encoding;
use efgram::scoring::{OovMode, Scorer};
use efgram::text::vocabulary_of;
use efgram::trie_index::{Direction, Payload, TrieConfig, TrieIndex};
use serde_json::json;

#[derive(Parser)]
#[command(name = "efgram", version, about = "Compressed n-gram indexes and Kneser-Ney estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count N-gram windows into context-sorted block files.
    Count {
        input: PathBuf,
        /// Directory for the block files and the vocabulary.
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        pipe: PipelineArgs,
    },
    /// Estimate a modified Kneser-Ney model and store it as a reversed trie.
    Estimate {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        pipe: PipelineArgs,
        #[command(flatten)]
        trie: TrieArgs,
        /// Bits per quantized probability or backoff (32 stores f32).
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(2..=32))]
        quant_bits: u32,
        /// Also write the model as ARPA text.
        #[arg(long)]
        arpa: Option<PathBuf>,
        /// D(1),D(2),D(3) for orders whose count statistics are degenerate.
        #[arg(long, value_parser = parse_discounts)]
        discount_fallback: Option<Discounts3>,
    },
    /// Build a count trie from per-order "gram<TAB>count" files, order 1 first.
    BuildTrie {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        trie: TrieArgs,
        /// Store grams right to left.
        #[arg(long)]
        reversed: bool,
    },
    /// Build a hash index from per-order "gram<TAB>count" files, order 1 first.
    BuildHash {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the payload of every gram read from stdin.
    Lookup {
        #[arg(long)]
        index: PathBuf,
    },
    /// Perplexity of a text file under an estimated model.
    Perplexity {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        bos_eos: bool,
        #[arg(long, value_enum, default_value_t = Oov::Include)]
        oov: Oov,
    },
    /// Size breakdown of an index.
    Stats {
        #[arg(long)]
        index: PathBuf,
    },
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u8).range(1..=8))]
    order: u8,
    /// RAM budget in bytes; K, M and G suffixes are accepted.
    #[arg(long, default_value = "1G", value_parser = parse_size)]
    ram: usize,
    /// Directory for temporary files.
    #[arg(long, env = "NGRAM_TMPDIR")]
    tmp: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Encoding of on-disk blocks.
    #[arg(long, value_enum, default_value_t = Fc::Byte)]
    fc: Fc,
    /// Wrap every line in <s> and </s>.
    #[arg(long)]
    bos_eos: bool,
}

#[derive(Args)]
struct TrieArgs {
    /// Context length k used for identifier remapping.
    #[arg(long, default_value_t = 0)]
    remap: usize,
    #[arg(long, default_value_t = 64)]
    block_size_l2: usize,
    #[arg(long, default_value_t = 128)]
    block_size_rest: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fc {
    None,
    Byte,
    Bit,
}

#[derive(Clone, Copy, ValueEnum)]
enum Oov {
    Include,
    Skip,
}

type Discounts3 = [f64; 3];

fn parse_size(s: &str) -> Result<usize, String> {
    let s = s.trim();
    let (digits, shift) = match s.chars().last().map(|c| c.to_ascii_uppercase()) {
        Some('K') => (&s[..s.len() - 1], 10),
        Some('M') => (&s[..s.len() - 1], 20),
        Some('G') => (&s[..s.len() - 1], 30),
        _ => (s, 0),
    };
    let x: usize = digits.parse().map_err(|_| format!("bad size {s:?}"))?;
    x.checked_mul(1 << shift).ok_or_else(|| format!("size {s:?} overflows"))
}

fn parse_discounts(s: &str) -> Result<Discounts3, String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [a, b, c] => Ok([a, b, c]),
        _ => Err("expected three comma-separated discounts".into()),
    }
}

fn usage_error(msg: String) -> ! {
    Cli::command().error(ErrorKind::ValueValidation, msg).exit()
}

impl PipelineArgs {
    fn encoding(&self) -> Encoding {
        match self.fc {
            Fc::None => Encoding::Raw,
            Fc::Byte => Encoding::FcByte,
            Fc::Bit => Encoding::FcBit,
        }
    }

    fn tmp_dir(&self) -> PathBuf {
        self.tmp.clone().unwrap_or_else(std::env::temp_dir)
    }

    fn threads(&self) -> usize {
        self.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1)
    }
}

impl TrieArgs {
    fn config(&self, direction: Direction, quant_bits: u32) -> TrieConfig {
        TrieConfig {
            remap: self.remap,
            direction,
            block_size_l2: self.block_size_l2,
            block_size_rest: self.block_size_rest,
            quant_bits,
            ..TrieConfig::default()
        }
    }
}

enum Index {
    Trie(TrieIndex),
    Hash(HashIndex),
}

fn load_index(path: &Path) -> anyhow::Result<Index> {
    let mut magic = [0u8; 4];
    std::fs::File::open(path)
        .and_then(|mut f| f.read_exact(&mut magic))
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(match &magic {
        b"TRIE" => Index::Trie(TrieIndex::load(path)?),
        b"MPHT" => Index::Hash(HashIndex::load(path)?),
        _ => bail!("{} is not an index file", path.display()),
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Count { input, output, pipe } => {
            if pipe.order < 2 {
                usage_error("count needs --order of at least 2".into());
            }
            std::fs::create_dir_all(&output).with_context(|| format!("creating {}", output.display()))?;
            let vocab = vocabulary_of(&input, pipe.bos_eos)?;
            let config = CountingConfig {
                order: pipe.order as usize,
                ram_budget: pipe.ram,
                encoding: pipe.encoding(),
                window_bytes: 1 << 16,
                sort_workers: pipe.threads(),
                bos_eos: pipe.bos_eos,
            };
            let counted = counting_pass(&input, &vocab, &config, &output)?;
            let vpath = output.join("vocab.bin");
            let mut w = BufWriter::new(std::fs::File::create(&vpath).with_context(|| format!("creating {}", vpath.display()))?);
            vocab.write_to(&mut w)?;
            w.flush()?;
            let s = &counted.stats;
            let files: Vec<_> = counted
                .blocks
                .iter()
                .map(|b| json!({"path": b.path, "records": b.records, "bytes": b.bytes}))
                .collect();
            let report = json!({
                "lines": s.lines, "tokens": s.tokens, "windows": s.windows, "flushes": s.flushes,
                "block_records": s.block_records, "vocabulary": vocab.len(), "files": files,
            });
            writeln!(out, "{report}")?;
        }
        Command::Estimate {
            input,
            output,
            pipe,
            trie,
            quant_bits,
            arpa,
            discount_fallback,
        } => {
            let n = pipe.order as usize;
            if n < 2 {
                usage_error("estimation needs --order of at least 2".into());
            }
            if trie.remap > n - 2 {
                usage_error(format!("--remap {} must be at most order - 2 = {}", trie.remap, n - 2));
            }
            let config = EstimateConfig {
                order: n,
                ram_budget: pipe.ram,
                tmp_dir: pipe.tmp_dir(),
                threads: pipe.threads(),
                encoding: pipe.encoding(),
                bos_eos: pipe.bos_eos,
                discount_fallback,
                ..EstimateConfig::default()
            };
            let (model, report) = estimate(&input, &config)?;
            let index = model.to_trie(&trie.config(Direction::Reversed, quant_bits))?;
            index.save(&output)?;
            if let Some(path) = arpa {
                model.save_arpa(&path)?;
            }
            let r = json!({
                "order": n,
                "vocabulary": model.vocab.len(),
                "grams": report.sizes,
                "flushes": report.counting.flushes,
                "merged_records": report.merged_records,
                "merged_bytes": report.merged_bytes,
                "merged_raw_bytes": report.merged_raw_bytes,
                "seconds": report.seconds,
                "index_bytes": std::fs::metadata(&output)?.len(),
            });
            writeln!(out, "{r}")?;
        }
        Command::BuildTrie { files, output, trie, reversed } => {
            let (vocab, levels) = grams::read_count_files(&files)?;
            let direction = if reversed { Direction::Reversed } else { Direction::Forward };
            let index = TrieIndex::from_grams(vocab, levels, &trie.config(direction, 8))?;
            index.save(&output)?;
        }
        Command::BuildHash { files, output } => {
            let (vocab, levels) = grams::read_count_files(&files)?;
            HashIndex::build(vocab, &levels)?.save(&output)?;
        }
        Command::Lookup { index } => {
            let index = load_index(&index)?;
            for line in std::io::stdin().lock().lines() {
                let line = line?;
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.is_empty() {
                    continue;
                }
                let gram = toks.join(" ");
                match &index {
                    Index::Trie(t) => match t.lookup(&toks) {
                        Some(Payload::Count(c)) => writeln!(out, "{gram}\t{c}")?,
                        Some(Payload::Prob { prob, backoff: Some(b) }) => writeln!(out, "{gram}\t{prob}\t{b}")?,
                        Some(Payload::Prob { prob, backoff: None }) => writeln!(out, "{gram}\t{prob}")?,
                        None => writeln!(out, "{gram}\t-")?,
                    },
                    Index::Hash(h) => match h.lookup(&toks) {
                        Some(c) => writeln!(out, "{gram}\t{c}")?,
                        None => writeln!(out, "{gram}\t-")?,
                    },
                }
            }
        }
        Command::Perplexity { index, input, bos_eos, oov } => {
            let Index::Trie(trie) = load_index(&index)? else {
                bail!("perplexity needs a trie built by estimate");
            };
            let mode = match oov {
                Oov::Include => OovMode::Include,
                Oov::Skip => OovMode::Skip,
            };
            let p = Scorer::new(&trie)?.perplexity(&input, bos_eos, mode)?;
            writeln!(out, "{}", json!({"perplexity": p.perplexity, "M": p.words, "OOV": p.oov}))?;
        }
        Command::Stats { index: path } => {
            let bytes = std::fs::metadata(&path)?.len();
            let report = match load_index(&path)? {
                Index::Trie(t) => {
                    let grams: usize = (1..=t.order()).map(|n| t.len(n)).sum();
                    let levels: Vec<_> = t
                        .level_stats()
                        .iter()
                        .enumerate()
                        .map(|(i, s)| {
                            let per = |bits: usize| if s.entries == 0 { 0.0 } else { bits as f64 / s.entries as f64 };
                            json!({
                                "n": i + 1, "grams": s.entries,
                                "id_bits": s.id_bits, "pointer_bits": s.pointer_bits, "value_bits": s.value_bits,
                                "id_bits_per_gram": per(s.id_bits), "value_bits_per_gram": per(s.value_bits),
                            })
                        })
                        .collect();
                    json!({
                        "kind": "trie", "order": t.order(), "remap": t.remap_order(),
                        "direction": if t.direction() == Direction::Reversed { "reversed" } else { "forward" },
                        "probabilities": t.has_probabilities(), "quant_bits": t.quant_bits(),
                        "grams": grams, "bytes": bytes, "bytes_per_gram": bytes as f64 / grams as f64,
                        "vocabulary_bytes": t.vocabulary().size_in_bytes(),
                        "total_id_bits": t.id_bits(), "levels": levels,
                    })
                }
                Index::Hash(h) => {
                    let grams: usize = (1..=h.order()).map(|n| h.len(n)).sum();
                    let orders: Vec<_> = (1..=h.order())
                        .map(|n| json!({"n": n, "grams": h.len(n), "bytes": h.order_bytes(n)}))
                        .collect();
                    json!({
                        "kind": "hash", "order": h.order(), "grams": grams, "bytes": bytes,
                        "bytes_per_gram": bytes as f64 / grams as f64,
                        "vocabulary_bytes": h.vocabulary().size_in_bytes(), "orders": orders,
                    })
                }
            };
            writeln!(out, "{report}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("efgram: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parse_size("1G"), Ok(1 << 30));
        assert_eq!(parse_size("512m"), Ok(512 << 20));
        assert_eq!(parse_size("4K"), Ok(4096));
        assert_eq!(parse_size("1000"), Ok(1000));
        assert!(parse_size("G").is_err());
        assert!(parse_size("1.5G").is_err());
    }

    #[test]
    fn discount_list() {
        assert_eq!(parse_discounts("0.5,1,1.5"), Ok([0.5, 1.0, 1.5]));
        assert!(parse_discounts("0.5,1").is_err());
    }

    #[test]
    fn command_definition() {
        Cli::command().debug_assert();
    }
}
