//! Backoff scoring over a reversed probability trie.
//!
//! The state after a word is the longest stored gram ending at that word,
//! kept as its reversed path (most recent word first) with the node position
//! of every prefix, so the next word walks from level 1 without searching
//! the context again.

use std::path::Path;

use crate::text::{for_each_line, tokens};
use crate::trie_index::{Direction, TrieIndex};
use crate::{Error, Result, WordId, MAX_ORDER};

/// Reversed context: `words[0]` is the previous word; `pos[j]` is the node
/// of `words[..=j]` at level `j + 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScorerState {
    words: [WordId; MAX_ORDER],
    pos: [usize; MAX_ORDER],
    len: usize,
}

impl ScorerState {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Context words, most recent first.
    pub fn words(&self) -> &[WordId] {
        &self.words[..self.len]
    }
}

/// What perplexity does with out-of-vocabulary words.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OovMode {
    /// Score them as `<unk>`.
    #[default]
    Include,
    /// Leave them out of the sum and of M.
    Skip,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perplexity {
    pub perplexity: f64,
    pub log10_sum: f64,
    /// Words that entered the sum.
    pub words: u64,
    pub oov: u64,
}

pub struct Scorer<'a> {
    index: &'a TrieIndex,
    unk: Option<WordId>,
}

impl<'a> Scorer<'a> {
    pub fn new(index: &'a TrieIndex) -> Result<Self> {
        if !index.has_probabilities() || index.direction() != Direction::Reversed {
            return Err(Error::InvalidArgument("scoring needs a reversed trie of probabilities".into()));
        }
        Ok(Self {
            index,
            unk: index.vocabulary().unk(),
        })
    }

    /// Word id, falling back to `<unk>`; the flag tells whether it was OOV.
    pub fn id(&self, token: &str) -> Option<(WordId, bool)> {
        match self.index.vocabulary().lookup(token) {
            Some(id) => Some((id, false)),
            None => self.unk.map(|u| (u, true)),
        }
    }

    /// log10 P(word | state) and the state after `word`.
    pub fn score_id(&self, state: &ScorerState, word: WordId) -> (f64, ScorerState) {
        let t = self.index;
        let order = t.order();
        let mut next = ScorerState::default();
        next.words[0] = word;
        next.pos[0] = word as usize;
        let mut len = 1;
        let mut path = [0; MAX_ORDER];
        path[0] = word;
        while len < order && len <= state.len {
            path[len] = state.words[len - 1];
            match t.child(&path[..=len], next.pos[len - 1]) {
                Some(p) => {
                    next.words[len] = path[len];
                    next.pos[len] = p;
                    len += 1;
                }
                None => break,
            }
        }
        let mut lp = (t.prob(len, next.pos[len - 1]) as f64).log10();
        // contexts longer than the match back off
        for m in len..=state.len {
            lp += (t.backoff(m, state.pos[m - 1]) as f64).log10();
        }
        next.len = len.min(order - 1);
        (lp, next)
    }

    /// Scores a token; OOV tokens map to `<unk>`. Without `<unk>` an OOV
    /// token scores `-inf` and empties the state.
    pub fn score(&self, state: &ScorerState, token: &str) -> (f64, ScorerState, bool) {
        match self.id(token) {
            Some((id, oov)) => {
                let (lp, s) = self.score_id(state, id);
                (lp, s, oov)
            }
            None => (f64::NEG_INFINITY, ScorerState::default(), true),
        }
    }

    /// log10 of every word of a sentence given as ids, from an empty state.
    pub fn sentence(&self, ids: &[WordId]) -> Vec<f64> {
        let mut state = ScorerState::default();
        ids.iter()
            .map(|&w| {
                let (lp, s) = self.score_id(&state, w);
                state = s;
                lp
            })
            .collect()
    }

    /// Recursive backoff from the full history, without state.
    pub fn stateless(&self, history: &[WordId], word: WordId) -> f64 {
        let t = self.index;
        let keep = history.len().min(t.order() - 1);
        let ctx = &history[history.len() - keep..];
        self.backoff_rec(ctx, word)
    }

    fn backoff_rec(&self, ctx: &[WordId], word: WordId) -> f64 {
        let t = self.index;
        let mut gram = ctx.to_vec();
        gram.push(word);
        if let Some(p) = t.find_gram(&gram) {
            return (t.prob(gram.len(), p) as f64).log10();
        }
        let lower = self.backoff_rec(&ctx[1..], word);
        match t.find_gram(ctx) {
            Some(p) => lower + (t.backoff(ctx.len(), p) as f64).log10(),
            None => lower,
        }
    }

    /// Perplexity `10^(-sum / M)` of a text file, one sentence per line.
    pub fn perplexity(&self, input: &Path, bos_eos: bool, oov: OovMode) -> Result<Perplexity> {
        let mut acc = Perplexity {
            perplexity: 0.0,
            log10_sum: 0.0,
            words: 0,
            oov: 0,
        };
        // Neumaier compensation for the log sum
        let mut comp = 0.0f64;
        let bos = bos_eos.then(|| self.index.vocabulary().lookup(crate::vocabulary::BOS)).flatten();
        for_each_line(input, |line| {
            if line.split_whitespace().next().is_none() {
                return Ok(());
            }
            let mut state = ScorerState::default();
            let mut toks = tokens(line, bos_eos);
            if bos_eos {
                toks.next();
                if let Some(b) = bos {
                    state = self.score_id(&state, b).1;
                }
            }
            for tok in toks {
                let (lp, s, is_oov) = self.score(&state, tok);
                state = s;
                if is_oov {
                    acc.oov += 1;
                    if oov == OovMode::Skip {
                        continue;
                    }
                }
                let t = acc.log10_sum + lp;
                comp += if !t.is_finite() {
                    0.0
                } else if acc.log10_sum.abs() >= lp.abs() {
                    (acc.log10_sum - t) + lp
                } else {
                    (lp - t) + acc.log10_sum
                };
                acc.log10_sum = t;
                acc.words += 1;
            }
            Ok(())
        })?;
        if acc.words == 0 {
            return Err(Error::Empty("no words to score".into()));
        }
        if acc.log10_sum.is_finite() {
            acc.log10_sum += comp;
        }
        acc.perplexity = 10f64.powf(-acc.log10_sum / acc.words as f64);
        Ok(acc)
    }
}
