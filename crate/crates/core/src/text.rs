//! Whitespace tokenization of one-sentence-per-line text.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::vocabulary::{Vocabulary, BOS, EOS};
use crate::{Error, Result};

/// Splits a line into tokens, optionally wrapped in sentence markers.
pub fn tokens(line: &str, bos_eos: bool) -> impl Iterator<Item = &str> {
    let (head, tail) = if bos_eos { (Some(BOS), Some(EOS)) } else { (None, None) };
    head.into_iter().chain(line.split_whitespace()).chain(tail)
}

/// Calls `f` with every line of a UTF-8 file.
pub fn for_each_line(path: &Path, mut f: impl FnMut(&str) -> Result<()>) -> Result<()> {
    let file = File::open(path).map_err(Error::io_at(path))?;
    let mut reader = BufReader::with_capacity(1 << 20, file);
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(Error::io_at(path))?;
        if n == 0 {
            return Ok(());
        }
        f(&line)?;
    }
}

/// Token frequencies of a text file.
pub fn token_counts(path: &Path, bos_eos: bool) -> Result<HashMap<String, u64>> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for_each_line(path, |line| {
        if line.split_whitespace().next().is_none() {
            return Ok(());
        }
        for t in tokens(line, bos_eos) {
            if let Some(c) = counts.get_mut(t) {
                *c += 1;
            } else {
                counts.insert(t.to_string(), 1);
            }
        }
        Ok(())
    })?;
    Ok(counts)
}

/// Vocabulary of a text file ordered by token frequency, with `<unk>`.
pub fn vocabulary_of(path: &Path, bos_eos: bool) -> Result<Vocabulary> {
    let counts = token_counts(path, bos_eos)?;
    let entries: Vec<(String, u64)> = counts.into_iter().collect();
    Vocabulary::build(&entries, true)
}
