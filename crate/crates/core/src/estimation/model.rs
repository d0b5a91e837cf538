//! Estimated model held as the levels of a reversed trie.

use std::io::Write;
use std::path::Path;

use super::adjusting::Discounts;
use super::last::{find, prefix_sums};
use crate::trie_index::{Direction, LevelLayout, LevelValues, TrieConfig, TrieIndex};
use crate::vocabulary::Vocabulary;
use crate::{Error, Result, WordId};

/// One level: node symbols in trie order with per-node values.
///
/// A level-`n` node stands for the gram whose reversed path leads to it, so
/// its symbol is the first word of the gram. `counts` holds the modified
/// counts, which double as child counts, except at the top order where they
/// are raw counts.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelLevel {
    pub symbols: Vec<WordId>,
    pub counts: Vec<u64>,
    pub prob: Vec<f64>,
    /// Empty at the top order.
    pub backoff: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatedModel {
    pub order: usize,
    pub vocab: Vocabulary,
    pub levels: Vec<ModelLevel>,
    pub discounts: Discounts,
    pub b_eps: f64,
    pub m2: u64,
}

impl EstimatedModel {
    pub fn len(&self, n: usize) -> usize {
        self.levels[n - 1].symbols.len()
    }

    fn pointers(&self) -> Vec<Vec<u64>> {
        self.levels[..self.order - 1].iter().map(|l| prefix_sums(&l.counts)).collect()
    }

    /// Position of a gram given left to right.
    pub fn find(&self, gram: &[WordId]) -> Option<usize> {
        let path: Vec<WordId> = gram.iter().rev().copied().collect();
        find(&self.levels, &self.pointers(), &path)
    }

    pub fn prob(&self, gram: &[WordId]) -> Option<f64> {
        self.find(gram).map(|p| self.levels[gram.len() - 1].prob[p])
    }

    pub fn backoff(&self, gram: &[WordId]) -> Option<f64> {
        let lev = &self.levels[gram.len() - 1];
        self.find(gram).and_then(|p| lev.backoff.get(p).copied())
    }

    /// Modified count below the top order, raw count at it.
    pub fn count(&self, gram: &[WordId]) -> Option<u64> {
        self.find(gram).map(|p| self.levels[gram.len() - 1].counts[p])
    }

    /// Grams of order `n` left to right, in level order.
    pub fn grams(&self, n: usize) -> Vec<Vec<WordId>> {
        let pointers = self.pointers();
        // parent position of every node, level by level
        let mut paths: Vec<Vec<WordId>> = self.levels[0].symbols.iter().map(|&s| vec![s]).collect();
        for l in 1..n {
            let level = &self.levels[l];
            let mut next = Vec::with_capacity(level.symbols.len());
            for (parent, path) in paths.iter().enumerate() {
                let (lo, hi) = (pointers[l - 1][parent] as usize, pointers[l - 1][parent + 1] as usize);
                for &s in &level.symbols[lo..hi] {
                    let mut p = path.clone();
                    p.push(s);
                    next.push(p);
                }
            }
            paths = next;
        }
        paths.into_iter().map(|mut p| {
            p.reverse();
            p
        }).collect()
    }

    /// Reversed trie of probabilities and backoffs.
    pub fn to_trie(&self, config: &TrieConfig) -> Result<TrieIndex> {
        let mut config = config.clone();
        config.direction = Direction::Reversed;
        let layouts = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, l)| LevelLayout {
                symbols: l.symbols.clone(),
                children: if i == 0 { Vec::new() } else { self.levels[i - 1].counts.clone() },
                values: LevelValues::Probs {
                    prob: l.prob.clone(),
                    backoff: (i + 1 < self.order).then(|| l.backoff.clone()),
                },
            })
            .collect();
        TrieIndex::from_layout(self.vocab.clone(), layouts, &config)
    }

    /// ARPA text with log10 values; grams are written left to right.
    pub fn write_arpa<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "\n\\data\\")?;
        for n in 1..=self.order {
            writeln!(w, "ngram {}={}", n, self.len(n))?;
        }
        for n in 1..=self.order {
            writeln!(w, "\n\\{n}-grams:")?;
            let level = &self.levels[n - 1];
            let grams = self.grams(n);
            let mut order: Vec<usize> = (0..grams.len()).collect();
            order.sort_by(|&a, &b| grams[a].cmp(&grams[b]));
            for i in order {
                let text: Vec<&str> = grams[i].iter().map(|&id| self.vocab.token(id)).collect();
                write!(w, "{}\t{}", level.prob[i].log10(), text.join(" "))?;
                if n < self.order {
                    write!(w, "\t{}", level.backoff[i].log10())?;
                }
                writeln!(w)?;
            }
        }
        writeln!(w, "\n\\end\\")?;
        Ok(())
    }

    pub fn save_arpa(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(Error::io_at(path))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_arpa(&mut w)?;
        w.flush().map_err(Error::io_at(path))
    }
}
