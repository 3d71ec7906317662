//! Backoff n-gram language models in ARPA format.

mod arpa;
mod prune;

use std::collections::HashMap;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

pub use arpa::{parse_arpa, parse_arpa_str, write_arpa};
pub use prune::prune_model;

pub const SENTENCE_START: &str = "<s>";
pub const SENTENCE_END: &str = "</s>";
pub const UNKNOWN: &str = "<unk>";

/// log10 probability for out-of-vocabulary words when the model has no `<unk>`.
pub const DEFAULT_OOV_FLOOR: f64 = -8.0;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("header declares {declared} {order}-grams, found {found}")]
    CountMismatch { order: usize, declared: usize, found: usize },
    #[error("missing {0}")]
    MissingSection(String),
    #[error("inconsistent model: {0}")]
    Inconsistent(String),
    #[error("cannot prune to {max} n-grams: the model has {unigrams} unigrams")]
    PruneBelowUnigrams { max: usize, unigrams: usize },
    #[error("perplexity of an empty sequence is undefined")]
    EmptySequence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub log10_prob: f32,
    /// Absent for the highest order; treated as 0 when missing.
    pub backoff: Option<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LmScore {
    pub log10_total: f64,
    pub oov_count: usize,
    /// Number of scored positions (includes `</s>` when markers are on).
    pub tokens: usize,
}

/// Interned n-gram tables. Immutable once built.
#[derive(Debug, Clone)]
pub struct NgramModel {
    words: Vec<String>,
    ids: HashMap<String, u32>,
    /// `tables[k]` holds the (k+1)-grams.
    tables: Vec<HashMap<Box<[u32]>, Entry>>,
    unk: Option<u32>,
    oov_floor: f64,
}

impl PartialEq for NgramModel {
    fn eq(&self, other: &Self) -> bool {
        self.order() == other.order() && (1..=self.order()).all(|k| self.sorted_entries(k) == other.sorted_entries(k))
    }
}

impl NgramModel {
    /// Builds a model from per-order entry lists and validates it.
    pub fn from_entries(orders: Vec<Vec<(Vec<String>, Entry)>>) -> Result<Self, LmError> {
        if orders.is_empty() {
            return Err(LmError::MissingSection("1-grams".into()));
        }
        let mut model = NgramModel {
            words: Vec::new(),
            ids: HashMap::new(),
            tables: Vec::with_capacity(orders.len()),
            unk: None,
            oov_floor: DEFAULT_OOV_FLOOR,
        };
        for (k, entries) in orders.into_iter().enumerate() {
            let mut table = HashMap::with_capacity(entries.len());
            for (tokens, entry) in entries {
                if tokens.len() != k + 1 {
                    return Err(LmError::Inconsistent(format!(
                        "{:?} listed among the {}-grams",
                        tokens.join(" "),
                        k + 1
                    )));
                }
                let key: Box<[u32]> = if k == 0 {
                    Box::new([model.intern(&tokens[0])])
                } else {
                    tokens
                        .iter()
                        .map(|t| {
                            model.ids.get(t.as_str()).copied().ok_or_else(|| {
                                LmError::Inconsistent(format!("{:?} uses {t:?}, which has no unigram", tokens.join(" ")))
                            })
                        })
                        .collect::<Result<_, _>>()?
                };
                if table.insert(key, entry).is_some() {
                    return Err(LmError::Inconsistent(format!("duplicate n-gram {:?}", tokens.join(" "))));
                }
            }
            model.tables.push(table);
        }
        model.unk = model.ids.get(UNKNOWN).copied();
        model.validate()?;
        Ok(model)
    }

    fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(word.to_string());
        self.ids.insert(word.to_string(), id);
        id
    }

    fn validate(&self) -> Result<(), LmError> {
        for (k, table) in self.tables.iter().enumerate() {
            for (key, entry) in table {
                if !(entry.log10_prob <= 0.0) {
                    return Err(LmError::Inconsistent(format!(
                        "{:?} has log10 probability {} > 0",
                        self.render(key),
                        entry.log10_prob
                    )));
                }
                if k > 0 && !self.tables[k - 1].contains_key(&key[..k]) {
                    return Err(LmError::Inconsistent(format!(
                        "{:?} has no prefix {:?}",
                        self.render(key),
                        self.render(&key[..k])
                    )));
                }
            }
        }
        Ok(())
    }

    fn render(&self, key: &[u32]) -> String {
        key.iter().map(|&i| self.words[i as usize].as_str()).collect::<Vec<_>>().join(" ")
    }

    pub fn with_oov_floor(mut self, floor: f64) -> Self {
        self.oov_floor = floor;
        self
    }

    pub fn oov_floor(&self) -> f64 {
        self.oov_floor
    }

    pub fn order(&self) -> usize {
        self.tables.len()
    }

    /// Entries per order, lowest first.
    pub fn counts(&self) -> Vec<usize> {
        self.tables.iter().map(HashMap::len).collect()
    }

    pub fn total_entries(&self) -> usize {
        self.tables.iter().map(HashMap::len).sum()
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn has_unk(&self) -> bool {
        self.unk.is_some()
    }

    pub fn word_id(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn entry(&self, tokens: &[&str]) -> Option<Entry> {
        let key: Vec<u32> = tokens.iter().map(|t| self.word_id(t)).collect::<Option<_>>()?;
        self.entry_ids(&key)
    }

    pub fn entry_ids(&self, key: &[u32]) -> Option<Entry> {
        self.tables.get(key.len().checked_sub(1)?)?.get(key).copied()
    }

    /// Entries of order `k` sorted by their token strings.
    pub fn sorted_entries(&self, k: usize) -> Vec<(Vec<&str>, Entry)> {
        let mut out: Vec<(Vec<&str>, Entry)> = self.tables[k - 1]
            .iter()
            .map(|(key, e)| (key.iter().map(|&i| self.word(i)).collect(), *e))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Maps a token to its id, routing OOV words to `<unk>` when present.
    pub fn lookup(&self, word: &str) -> Option<u32> {
        self.word_id(word).or(self.unk)
    }

    /// Katz backoff over interned ids. `history` may be longer than N-1;
    /// only the tail is used.
    pub fn score_ids(&self, history: &[u32], word: u32) -> f64 {
        let keep = history.len().min(self.order() - 1);
        let history = &history[history.len() - keep..];
        let mut key = Vec::with_capacity(keep + 1);
        let mut backoff = 0.0;
        for start in 0..=keep {
            let ctx = &history[start..];
            key.clear();
            key.extend_from_slice(ctx);
            key.push(word);
            if let Some(e) = self.tables[ctx.len()].get(&key[..]) {
                return backoff + e.log10_prob as f64;
            }
            if !ctx.is_empty() {
                if let Some(b) = self.tables[ctx.len() - 1].get(ctx).and_then(|e| e.backoff) {
                    backoff += b as f64;
                }
            }
        }
        // only reachable for ids outside the unigram table
        self.oov_floor
    }

    /// Truncates `history` at its last unknown token (mapped to `<unk>` when
    /// the model has one).
    fn history_ids(&self, history: &[&str]) -> Vec<u32> {
        let mut ids = Vec::with_capacity(history.len());
        for w in history {
            match self.lookup(w) {
                Some(id) => ids.push(id),
                None => ids.clear(),
            }
        }
        ids
    }

    /// log10 P(word | history). OOV words score as `<unk>` or the floor.
    pub fn score_word(&self, history: &[&str], word: &str) -> f64 {
        match self.lookup(word) {
            Some(id) => self.score_ids(&self.history_ids(history), id),
            None => self.oov_floor,
        }
    }

    pub fn score_sequence(&self, words: &[&str], with_markers: bool) -> LmScore {
        let mut history: Vec<u32> = Vec::new();
        if with_markers {
            if let Some(id) = self.word_id(SENTENCE_START) {
                history.push(id);
            }
        }
        let mut total = 0.0;
        let mut oov = 0;
        let mut tokens = 0;
        let end = with_markers.then_some(SENTENCE_END);
        for w in words.iter().copied().chain(end) {
            tokens += 1;
            if self.word_id(w).is_none() {
                oov += 1;
            }
            match self.lookup(w) {
                Some(id) => {
                    total += self.score_ids(&history, id);
                    history.push(id);
                }
                None => {
                    total += self.oov_floor;
                    history.clear();
                }
            }
            let keep = self.order().saturating_sub(1);
            if history.len() > keep {
                history.drain(..history.len() - keep);
            }
        }
        LmScore {
            log10_total: total,
            oov_count: oov,
            tokens,
        }
    }

    /// `10^(-log10_total / tokens)`; `</s>` counts as a token with markers.
    pub fn perplexity(&self, words: &[&str], with_markers: bool) -> Result<f64, LmError> {
        if words.is_empty() {
            return Err(LmError::EmptySequence);
        }
        let s = self.score_sequence(words, with_markers);
        Ok(10f64.powf(-s.log10_total / s.tokens as f64))
    }

    pub(crate) fn tables(&self) -> &[HashMap<Box<[u32]>, Entry>] {
        &self.tables
    }

    pub(crate) fn with_tables(&self, tables: Vec<HashMap<Box<[u32]>, Entry>>) -> NgramModel {
        NgramModel {
            words: self.words.clone(),
            ids: self.ids.clone(),
            tables,
            unk: self.unk,
            oov_floor: self.oov_floor,
        }
    }
}
