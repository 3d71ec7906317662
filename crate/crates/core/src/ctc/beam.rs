use std::collections::HashMap;
use std::f64::consts::LN_10;

use serde::Serialize;

use super::{check_width, CtcError, LogitMatrix};
use crate::lm::{NgramModel, SENTENCE_START};
use crate::AlphabetSpec;

#[derive(Debug, Clone, Copy)]
pub struct DecodeParams<'a> {
    pub beam_width: usize,
    /// Weight on the natural-log LM score.
    pub alpha: f64,
    /// Bonus per word; applied only when an LM is set.
    pub beta: f64,
    pub lm: Option<&'a NgramModel>,
}

impl Default for DecodeParams<'_> {
    fn default() -> Self {
        Self {
            beam_width: 256,
            alpha: 0.8,
            beta: 1.0,
            lm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    /// Whitespace-trimmed and collapsed transcript.
    pub text: String,
    /// Collapsed label sequence.
    pub labels: Vec<usize>,
    /// ln P(labels | audio) summed over the paths kept in the beam.
    pub acoustic_log: f64,
    pub lm_log10: f64,
    pub word_count: usize,
    pub combined: f64,
}

const ROOT: u32 = u32::MAX;

#[derive(Debug, Clone, Default)]
struct Fusion {
    lm_log10: f64,
    words: usize,
    /// LM word ids of the last N-1 completed words.
    history: Vec<u32>,
}

struct Node {
    parent: u32,
    label: usize,
    children: Vec<(usize, u32)>,
    fusion: Fusion,
}

struct Trie<'a> {
    nodes: Vec<Node>,
    root_children: Vec<(usize, u32)>,
    root_fusion: Fusion,
    alphabet: &'a AlphabetSpec,
    space: Option<usize>,
    params: &'a DecodeParams<'a>,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

impl<'a> Trie<'a> {
    fn fusion(&self, node: u32) -> &Fusion {
        if node == ROOT {
            &self.root_fusion
        } else {
            &self.nodes[node as usize].fusion
        }
    }

    fn last_label(&self, node: u32) -> Option<usize> {
        (node != ROOT).then(|| self.nodes[node as usize].label)
    }

    fn labels(&self, mut node: u32) -> Vec<usize> {
        let mut out = Vec::new();
        while node != ROOT {
            out.push(self.nodes[node as usize].label);
            node = self.nodes[node as usize].parent;
        }
        out.reverse();
        out
    }

    /// Characters of the word ending at `node` (empty after a space).
    fn trailing_word(&self, mut node: u32) -> String {
        let mut chars = Vec::new();
        while node != ROOT {
            let n = &self.nodes[node as usize];
            if Some(n.label) == self.space {
                break;
            }
            chars.push(n.label);
            node = n.parent;
        }
        chars.reverse();
        self.alphabet.labels_to_text(&chars)
    }

    /// Fusion state after `word` completes on top of `base`.
    fn complete_word(&self, lm: &NgramModel, base: &Fusion, word: &str) -> Fusion {
        let mut next = base.clone();
        next.words += 1;
        match lm.lookup(word) {
            Some(id) => {
                next.lm_log10 += lm.score_ids(&base.history, id);
                next.history.push(id);
                let keep = lm.order().saturating_sub(1);
                if next.history.len() > keep {
                    next.history.drain(..next.history.len() - keep);
                }
            }
            None => {
                next.lm_log10 += lm.oov_floor();
                next.history.clear();
            }
        }
        next
    }

    fn existing_child(&self, parent: u32, label: usize) -> Option<u32> {
        let children = if parent == ROOT {
            &self.root_children
        } else {
            &self.nodes[parent as usize].children
        };
        children.iter().find(|(l, _)| *l == label).map(|&(_, id)| id)
    }

    /// Fusion state of `parent` extended by `label`.
    fn extended_fusion(&self, parent: u32, label: usize) -> Option<Fusion> {
        match self.params.lm {
            Some(lm) if Some(label) == self.space && parent != ROOT && self.last_label(parent) != self.space => {
                Some(self.complete_word(lm, self.fusion(parent), &self.trailing_word(parent)))
            }
            _ => None,
        }
    }

    fn add_child(&mut self, parent: u32, label: usize, fusion: Option<Fusion>) -> u32 {
        let fusion = fusion.unwrap_or_else(|| self.fusion(parent).clone());
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            parent,
            label,
            children: Vec::new(),
            fusion,
        });
        if parent == ROOT {
            self.root_children.push((label, id));
        } else {
            self.nodes[parent as usize].children.push((label, id));
        }
        id
    }

    fn fusion_score(&self, f: &Fusion) -> f64 {
        match self.params.lm {
            Some(_) => self.params.alpha * LN_10 * f.lm_log10 + self.params.beta * f.words as f64,
            None => 0.0,
        }
    }

    /// Fusion state with the trailing unfinished word scored.
    fn final_fusion(&self, node: u32) -> Fusion {
        let f = self.fusion(node);
        match self.params.lm {
            Some(lm) if node != ROOT && self.last_label(node) != self.space => {
                self.complete_word(lm, f, &self.trailing_word(node))
            }
            _ => f.clone(),
        }
    }
}

#[derive(Clone, Copy)]
struct Probs {
    blank: f64,
    non_blank: f64,
}

impl Probs {
    const ZERO: Probs = Probs {
        blank: f64::NEG_INFINITY,
        non_blank: f64::NEG_INFINITY,
    };

    fn total(self) -> f64 {
        log_add(self.blank, self.non_blank)
    }
}

/// Beam entry: an existing trie node or a not yet materialized extension.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Node(u32),
    Ext(u32, usize),
}

/// Prefix beam search. Returns at most `beam_width` hypotheses, best first:
/// combined score descending, then label sequence ascending.
pub fn beam_decode(
    logits: &LogitMatrix,
    alphabet: &AlphabetSpec,
    params: &DecodeParams,
) -> Result<Vec<Hypothesis>, CtcError> {
    check_width(logits, alphabet)?;
    if params.beam_width == 0 {
        return Err(CtcError::ZeroBeam);
    }
    let space = alphabet.space_index();
    if params.lm.is_some() && space.is_none() {
        return Err(CtcError::NoWordSeparator);
    }
    let mut root_fusion = Fusion::default();
    if let Some(id) = params.lm.and_then(|lm| lm.word_id(SENTENCE_START)) {
        root_fusion.history.push(id);
    }
    let mut trie = Trie {
        nodes: Vec::new(),
        root_children: Vec::new(),
        root_fusion,
        alphabet,
        space,
        params,
    };
    let blank = alphabet.blank_index();

    let mut beam: Vec<(u32, Probs)> = vec![(
        ROOT,
        Probs {
            blank: 0.0,
            non_blank: f64::NEG_INFINITY,
        },
    )];
    let mut next: HashMap<Key, Probs> = HashMap::new();
    for t in 0..logits.frames() {
        let row = logits.row(t);
        next.clear();
        for &(node, p) in &beam {
            let total = p.total();
            let mut add = |key: Key, blank_part: f64, non_blank_part: f64| {
                // unreachable prefixes (e.g. a repeat with no blank before it) never enter the beam
                if blank_part == f64::NEG_INFINITY && non_blank_part == f64::NEG_INFINITY {
                    return;
                }
                let e = next.entry(key).or_insert(Probs::ZERO);
                e.blank = log_add(e.blank, blank_part);
                e.non_blank = log_add(e.non_blank, non_blank_part);
            };
            add(Key::Node(node), total + row[blank] as f64, f64::NEG_INFINITY);
            let last = trie.last_label(node);
            for (c, &lp) in row.iter().enumerate() {
                if c == blank {
                    continue;
                }
                let lp = lp as f64;
                let child = match trie.existing_child(node, c) {
                    Some(id) => Key::Node(id),
                    None => Key::Ext(node, c),
                };
                if Some(c) == last {
                    add(Key::Node(node), f64::NEG_INFINITY, p.non_blank + lp);
                    add(child, f64::NEG_INFINITY, p.blank + lp);
                } else {
                    add(child, f64::NEG_INFINITY, total + lp);
                }
            }
        }
        let mut scored: Vec<(f64, Key, Option<Fusion>, Probs)> = next
            .iter()
            .map(|(&key, &p)| {
                let (fusion, score) = match key {
                    Key::Node(n) => (None, trie.fusion_score(trie.fusion(n))),
                    Key::Ext(parent, c) => match trie.extended_fusion(parent, c) {
                        Some(f) => {
                            let s = trie.fusion_score(&f);
                            (Some(f), s)
                        }
                        None => (None, trie.fusion_score(trie.fusion(parent))),
                    },
                };
                (p.total() + score, key, fusion, p)
            })
            .collect();
        let key_labels = |key: Key| match key {
            Key::Node(n) => trie.labels(n),
            Key::Ext(parent, c) => {
                let mut l = trie.labels(parent);
                l.push(c);
                l
            }
        };
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| key_labels(a.1).cmp(&key_labels(b.1))));
        scored.truncate(params.beam_width);
        beam = scored
            .into_iter()
            .map(|(_, key, fusion, p)| match key {
                Key::Node(n) => (n, p),
                Key::Ext(parent, c) => (trie.add_child(parent, c, fusion), p),
            })
            .collect();
    }

    let mut hyps: Vec<Hypothesis> = beam
        .into_iter()
        .map(|(node, p)| {
            let fusion = trie.final_fusion(node);
            let acoustic = p.total();
            let labels = trie.labels(node);
            let text = alphabet.labels_to_text(&labels).split_whitespace().collect::<Vec<_>>().join(" ");
            Hypothesis {
                text,
                labels,
                acoustic_log: acoustic,
                lm_log10: fusion.lm_log10,
                word_count: fusion.words,
                combined: acoustic + trie.fusion_score(&fusion),
            }
        })
        .collect();
    hyps.sort_by(|a, b| b.combined.total_cmp(&a.combined).then_with(|| a.labels.cmp(&b.labels)));
    Ok(hyps)
}
