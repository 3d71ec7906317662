//! CTC decoding: greedy, prefix beam search with word n-gram fusion, and WER.

mod beam;

use thiserror::Error;

use crate::AlphabetSpec;

pub use beam::{beam_decode, DecodeParams, Hypothesis};

#[derive(Debug, Error, PartialEq)]
pub enum CtcError {
    #[error("logit width {found} does not match alphabet output width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("language model fusion needs a space symbol in the alphabet")]
    NoWordSeparator,
    #[error("beam width must be at least 1")]
    ZeroBeam,
    #[error("reference transcript is empty")]
    EmptyReference,
}

/// Per-frame natural-log probabilities, row-major T × (V+1), blank last.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitMatrix {
    data: Vec<f32>,
    frames: usize,
    width: usize,
}

impl LogitMatrix {
    pub fn new(data: Vec<f32>, frames: usize, width: usize) -> Self {
        assert_eq!(data.len(), frames * width, "logit data does not match {frames}x{width}");
        Self { data, frames, width }
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Self {
        let width = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == width), "ragged logit rows");
        Self::new(rows.concat(), rows.len(), width)
    }

    /// Applies log-softmax to raw scores row by row.
    pub fn from_scores(mut data: Vec<f32>, frames: usize, width: usize) -> Self {
        for row in data.chunks_mut(width.max(1)) {
            log_softmax_in_place(row);
        }
        Self::new(data, frames, width)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.width..(t + 1) * self.width]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    /// Largest deviation of a row's probability mass from 1.
    pub fn max_normalization_error(&self) -> f64 {
        (0..self.frames)
            .map(|t| (self.row(t).iter().map(|&v| (v as f64).exp()).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn log_softmax_in_place(row: &mut [f32]) {
    let max = row.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
    let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f32>().ln();
    row.iter_mut().for_each(|v| *v -= lse);
}

fn check_width(logits: &LogitMatrix, alphabet: &AlphabetSpec) -> Result<(), CtcError> {
    if logits.width != alphabet.output_width() {
        return Err(CtcError::WidthMismatch {
            expected: alphabet.output_width(),
            found: logits.width,
        });
    }
    Ok(())
}

/// Merges adjacent repeats, then drops blanks.
pub fn collapse(path: &[usize], blank: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &l in path {
        if prev != Some(l) && l != blank {
            out.push(l);
        }
        prev = Some(l);
    }
    out
}

/// Per-frame argmax labels; ties go to the lower index.
pub fn best_path(logits: &LogitMatrix) -> Vec<usize> {
    (0..logits.frames)
        .map(|t| {
            let row = logits.row(t);
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

pub fn greedy_decode(logits: &LogitMatrix, alphabet: &AlphabetSpec) -> Result<String, CtcError> {
    check_width(logits, alphabet)?;
    let labels = collapse(&best_path(logits), alphabet.blank_index());
    Ok(alphabet.labels_to_text(&labels))
}

/// Concatenates chunk outputs in arrival order.
pub fn accumulate_logits(chunks: &[LogitMatrix]) -> Result<LogitMatrix, CtcError> {
    let Some(first) = chunks.first() else {
        return Ok(LogitMatrix::new(Vec::new(), 0, 0));
    };
    let mut data = Vec::with_capacity(chunks.iter().map(|c| c.data.len()).sum());
    for c in chunks {
        if c.width != first.width {
            return Err(CtcError::WidthMismatch {
                expected: first.width,
                found: c.width,
            });
        }
        data.extend_from_slice(&c.data);
    }
    let frames = chunks.iter().map(|c| c.frames).sum();
    Ok(LogitMatrix::new(data, frames, first.width))
}

/// Word-level Levenshtein distance over the reference word count.
pub fn word_error_rate(reference: &str, hypothesis: &str) -> Result<f64, CtcError> {
    let r: Vec<&str> = reference.split_whitespace().collect();
    let h: Vec<&str> = hypothesis.split_whitespace().collect();
    if r.is_empty() {
        return Err(CtcError::EmptyReference);
    }
    Ok(edit_distance(&r, &h) as f64 / r.len() as f64)
}

pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + (x != y) as usize).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> AlphabetSpec {
        AlphabetSpec::new(["a", "b"]).unwrap()
    }

    fn one_hot(path: &[usize], width: usize) -> LogitMatrix {
        let rows: Vec<Vec<f32>> = path
            .iter()
            .map(|&l| (0..width).map(|i| if i == l { 0.0 } else { -10.0 }).collect())
            .collect();
        LogitMatrix::from_rows(&rows)
    }

    #[test]
    fn collapse_rules() {
        assert_eq!(collapse(&[0, 0, 2, 1], 2), [0, 1]);
        assert_eq!(collapse(&[2, 2], 2), Vec::<usize>::new());
        assert_eq!(collapse(&[0, 2, 0], 2), [0, 0]);
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_decode(&one_hot(&[2, 2, 2], 3), &ab()).unwrap(), "");
        assert_eq!(greedy_decode(&one_hot(&[0, 0, 2, 1], 3), &ab()).unwrap(), "ab");
        let tie = LogitMatrix::from_rows(&[vec![-0.5, -0.5, -2.0]]);
        assert_eq!(greedy_decode(&tie, &ab()).unwrap(), "a");
        assert_eq!(
            greedy_decode(&one_hot(&[0], 4), &ab()),
            Err(CtcError::WidthMismatch { expected: 3, found: 4 })
        );
    }

    #[test]
    fn accumulate() {
        let a = one_hot(&[0, 1, 2], 3);
        let b = one_hot(&[2, 2, 1, 0], 3);
        let joined = accumulate_logits(&[a.clone(), b]).unwrap();
        assert_eq!(joined.frames(), 7);
        assert_eq!(accumulate_logits(&[a.clone()]).unwrap(), a);
        assert!(accumulate_logits(&[a, one_hot(&[0], 4)]).is_err());
    }

    #[test]
    fn wer_examples() {
        assert_eq!(word_error_rate("a b c", "a b c").unwrap(), 0.0);
        assert!((word_error_rate("a b c", "a x c").unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(word_error_rate("a b", "").unwrap(), 1.0);
        assert_eq!(word_error_rate("a", "x y z").unwrap(), 3.0);
        assert_eq!(word_error_rate("  ", "a"), Err(CtcError::EmptyReference));
    }

    #[test]
    fn softmax_rows_normalized() {
        let m = LogitMatrix::from_scores(vec![1.0, 2.0, 3.0, -100.0, 0.0, 100.0], 2, 3);
        assert!(m.max_normalization_error() < 1e-5);
    }
}
