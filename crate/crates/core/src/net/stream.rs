use std::ops::Range;

use crate::ctc::LogitMatrix;
use crate::features::{logmel, normalize_features, AudioClip, FeatureConfig, FeatureMatrix};

use super::forward::{check_input, scores};
use super::{NetConfig, NetError, NetworkWeights};

/// One streaming step: run the network on `input` feature frames and keep
/// the global output rows `output`, whose whole receptive field lies inside
/// the slice (or touches the clip edge, where padding matches).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkSpan {
    pub input: Range<usize>,
    pub output: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamPlan {
    pub chunks: Vec<ChunkSpan>,
    pub output_frames: usize,
}

impl StreamPlan {
    /// Covers `input_frames` with chunks emitting `rows_per_chunk` output
    /// rows each, padded on both sides by the network's half context.
    pub fn new(cfg: &NetConfig, input_frames: usize, rows_per_chunk: usize) -> Self {
        assert!(rows_per_chunk > 0);
        let stride = cfg.prologue.stride;
        let half = cfg.output_half_context();
        let prologue_half = cfg.prologue.half_width();
        let output_frames = input_frames.div_ceil(stride);
        let mut chunks = Vec::new();
        let mut a = 0;
        while a < output_frames {
            let b = (a + rows_per_chunk).min(output_frames);
            // start on a stride multiple so local output frames align with global ones
            let first = (a as isize - half as isize - prologue_half.div_ceil(stride) as isize).max(0) as usize;
            let end = (stride * (b - 1 + half) + prologue_half + 1).min(input_frames);
            chunks.push(ChunkSpan {
                input: stride * first..end,
                output: a..b,
            });
            a = b;
        }
        Self { chunks, output_frames }
    }
}

/// Chunked forward over precomputed features; rows match [`super::forward`]
/// up to float reassociation in the GEMMs.
pub fn forward_chunked(
    cfg: &NetConfig,
    weights: &NetworkWeights,
    features: &FeatureMatrix,
    rows_per_chunk: usize,
) -> Result<LogitMatrix, NetError> {
    check_input(cfg, features)?;
    weights.validate(cfg)?;
    if rows_per_chunk == 0 {
        return Err(NetError::ChunkTooShort {
            chunk_seconds: 0.0,
            min_seconds: 0.0,
        });
    }
    let width = cfg.output_width();
    let stride = cfg.prologue.stride;
    let plan = StreamPlan::new(cfg, features.frames(), rows_per_chunk);
    let mut data = Vec::with_capacity(plan.output_frames * width);
    for span in &plan.chunks {
        let slice = features.slice_frames(span.input.start, span.input.end);
        let local = scores(cfg, weights, slice.as_slice(), slice.frames())?;
        let offset = span.input.start / stride;
        data.extend_from_slice(&local[(span.output.start - offset) * width..(span.output.end - offset) * width]);
    }
    Ok(LogitMatrix::from_scores(data, plan.output_frames, width))
}

/// Streams `clip` through the network in chunks of `chunk_seconds` of
/// output, each widened by the receptive field. Features are normalized
/// over the whole clip, so the result matches a single full forward pass.
pub fn forward_streaming(
    cfg: &NetConfig,
    weights: &NetworkWeights,
    feature_cfg: &FeatureConfig,
    clip: &AudioClip,
    chunk_seconds: f64,
) -> Result<LogitMatrix, NetError> {
    let rows = chunk_rows(cfg, feature_cfg, chunk_seconds)?;
    let features = normalize_features(&logmel(clip, feature_cfg)?)?;
    forward_chunked(cfg, weights, &features, rows)
}

/// Output rows emitted per chunk of `chunk_seconds`.
pub fn chunk_rows(cfg: &NetConfig, feature_cfg: &FeatureConfig, chunk_seconds: f64) -> Result<usize, NetError> {
    let hop = feature_cfg.hop_length;
    let chunk_frames = if chunk_seconds.is_finite() { (chunk_seconds / hop).round() } else { 0.0 };
    if chunk_frames < 1.0 {
        return Err(NetError::ChunkTooShort {
            chunk_seconds,
            min_seconds: hop / 2.0,
        });
    }
    Ok((chunk_frames as usize).div_ceil(cfg.prologue.stride))
}
