//! Per-order "gram<TAB>count" files.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::PathBuf;

use anyhow::{bail, Context};
use efgram::trie_index::{LevelInput, LevelValues};
use efgram::vocabulary::Vocabulary;

/// Reads the files of orders 1..=N. The vocabulary comes from the unigram
/// file; every token of a higher order must appear there.
pub fn read_count_files(files: &[PathBuf]) -> anyhow::Result<(Vocabulary, Vec<LevelInput>)> {
    let mut raw: Vec<Vec<(Vec<String>, u64)>> = Vec::with_capacity(files.len());
    for (i, path) in files.iter().enumerate() {
        let n = i + 1;
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let mut grams = Vec::new();
        let mut seen = HashSet::new();
        for (lineno, line) in BufReader::new(f).lines().enumerate() {
            let line = line.with_context(|| format!("reading {}", path.display()))?;
            if line.trim().is_empty() {
                continue;
            }
            let at = || format!("{}:{}", path.display(), lineno + 1);
            let Some((gram, count)) = line.rsplit_once('\t') else {
                bail!("{}: expected gram<TAB>count", at());
            };
            let count: u64 = count.trim().parse().with_context(|| format!("{}: bad count", at()))?;
            let toks: Vec<String> = gram.split_whitespace().map(str::to_string).collect();
            if toks.len() != n {
                bail!("{}: {}-gram in the order-{n} file", at(), toks.len());
            }
            if !seen.insert(toks.clone()) {
                bail!("{}: duplicate gram {gram:?}", at());
            }
            grams.push((toks, count));
        }
        raw.push(grams);
    }
    let Some(unigrams) = raw.first() else {
        bail!("no count files");
    };
    let entries: Vec<(String, u64)> = unigrams.iter().map(|(g, c)| (g[0].clone(), *c)).collect();
    let vocab = Vocabulary::build(&entries, false)?;
    let mut levels = Vec::with_capacity(raw.len());
    for (i, grams) in raw.into_iter().enumerate() {
        let mut paths = Vec::with_capacity(grams.len() * (i + 1));
        let mut counts = Vec::with_capacity(grams.len());
        for (g, c) in grams {
            for t in &g {
                match vocab.lookup(t) {
                    Some(id) => paths.push(id),
                    None => bail!("token {t:?} of order-{} gram {:?} is missing from the unigram file", i + 1, g.join(" ")),
                }
            }
            counts.push(c);
        }
        levels.push(LevelInput {
            paths,
            values: LevelValues::Counts(counts),
        });
    }
    Ok((vocab, levels))
}
