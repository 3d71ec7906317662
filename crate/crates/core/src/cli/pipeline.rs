use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::ctc::{beam_decode, greedy_decode, DecodeParams, LogitMatrix};
use crate::features::{load_wav, logmel, normalize_features};
use crate::lm::NgramModel;
use crate::net::{chunk_rows, forward, forward_chunked, Model};

use super::CliError;

/// Wall-clock cost of one transcription relative to the audio length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RtfReport {
    pub clip_duration: f64,
    pub wall_time: f64,
    pub rtf: f64,
    /// Seconds per stage: `features`, `forward`, `decode`.
    pub stage_breakdown: BTreeMap<String, f64>,
}

impl RtfReport {
    pub fn new(clip_duration: f64, wall_time: f64, stage_breakdown: BTreeMap<String, f64>) -> Result<Self, CliError> {
        if !(clip_duration > 0.0) {
            return Err(CliError::Data("real-time factor is undefined for zero-length audio".into()));
        }
        Ok(Self {
            clip_duration,
            wall_time,
            rtf: wall_time / clip_duration,
            stage_breakdown,
        })
    }
}

/// Decoder settings; greedy unless a beam width or LM is given.
#[derive(Debug, Clone, Copy, Default)]
pub struct DecodeOptions<'a> {
    pub beam_width: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lm: Option<&'a NgramModel>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TranscribeOptions<'a> {
    /// Stream in chunks of this many seconds of output.
    pub chunk_seconds: Option<f64>,
    pub decode: DecodeOptions<'a>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transcription {
    pub text: String,
    pub report: RtfReport,
}

pub fn decode_logits(
    logits: &LogitMatrix,
    alphabet: &crate::AlphabetSpec,
    opts: &DecodeOptions,
) -> Result<String, CliError> {
    if opts.beam_width.is_none() && opts.lm.is_none() {
        return Ok(greedy_decode(logits, alphabet)?);
    }
    let defaults = DecodeParams::default();
    let params = DecodeParams {
        beam_width: opts.beam_width.unwrap_or(defaults.beam_width),
        alpha: opts.alpha.unwrap_or(defaults.alpha),
        beta: opts.beta.unwrap_or(defaults.beta),
        lm: opts.lm,
    };
    let best = beam_decode(logits, alphabet, &params)?;
    Ok(best.into_iter().next().map(|h| h.text).unwrap_or_default())
}

fn stage<T, E: std::fmt::Display>(name: &str, r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Data(format!("{name}: {e}")))
}

/// load_wav, log-mel, normalization, forward (chunked when asked) and
/// decoding, timed per stage. Model loading is not timed.
pub fn transcribe(model: &Model, wav: &Path, opts: &TranscribeOptions) -> Result<Transcription, CliError> {
    let start = Instant::now();
    let clip = stage("features", load_wav(wav))?;
    if clip.samples.is_empty() {
        return Err(CliError::Data(format!(
            "{}: zero-length audio, real-time factor is undefined",
            wav.display()
        )));
    }
    let rows = match opts.chunk_seconds {
        Some(s) => Some(stage("forward", chunk_rows(&model.config, &model.features, s))?),
        None => None,
    };
    let features = stage("features", logmel(&clip, &model.features).and_then(|m| normalize_features(&m)))?;
    let t_features = start.elapsed().as_secs_f64();

    let logits = stage(
        "forward",
        match rows {
            Some(rows) => forward_chunked(&model.config, &model.weights, &features, rows),
            None => forward(&model.config, &model.weights, &features),
        },
    )?;
    let t_forward = start.elapsed().as_secs_f64();

    let text = decode_logits(&logits, &model.alphabet, &opts.decode)
        .map_err(|e| CliError::Data(format!("decode: {e}")))?;
    let wall = start.elapsed().as_secs_f64();

    let breakdown = BTreeMap::from([
        ("features".to_string(), t_features),
        ("forward".to_string(), t_forward - t_features),
        ("decode".to_string(), wall - t_forward),
    ]);
    Ok(Transcription {
        text,
        report: RtfReport::new(clip.duration(), wall, breakdown)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub filepath: String,
    pub repetition: usize,
    pub rtf: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub measurements: Vec<Measurement>,
    pub mean_rtf: f64,
    pub median_rtf: f64,
    /// Totals over all measurements: summed durations, wall times and stages.
    pub aggregate: RtfReport,
}

/// Mean and median of `values`; `None` when empty.
pub fn mean_median(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    Some((values.iter().sum::<f64>() / n as f64, median))
}

pub fn summarize(runs: Vec<(Measurement, RtfReport)>) -> Result<BenchReport, CliError> {
    let rtfs: Vec<f64> = runs.iter().map(|(m, _)| m.rtf).collect();
    let (mean_rtf, median_rtf) = mean_median(&rtfs).ok_or_else(|| CliError::Data("nothing to benchmark".into()))?;
    let mut stages = BTreeMap::new();
    let (mut duration, mut wall) = (0.0, 0.0);
    for (_, r) in &runs {
        duration += r.clip_duration;
        wall += r.wall_time;
        for (k, v) in &r.stage_breakdown {
            *stages.entry(k.clone()).or_insert(0.0) += v;
        }
    }
    Ok(BenchReport {
        measurements: runs.into_iter().map(|(m, _)| m).collect(),
        mean_rtf,
        median_rtf,
        aggregate: RtfReport::new(duration, wall, stages)?,
    })
}

/// Transcribes every clip `repetitions` times after one untimed warm-up run
/// on the first clip. Clips run concurrently on `workers` threads.
pub fn bench(
    model: &Model,
    clips: &[(String, std::path::PathBuf)],
    repetitions: usize,
    workers: Option<usize>,
    opts: &TranscribeOptions,
) -> Result<BenchReport, CliError> {
    use rayon::prelude::*;

    let Some((_, first)) = clips.first() else {
        return Err(CliError::Data("manifest has no items".into()));
    };
    if repetitions == 0 {
        return Err(CliError::Usage("--repetitions must be at least 1".into()));
    }
    transcribe(model, first, opts)?;

    let jobs: Vec<(usize, usize)> = (0..repetitions)
        .flat_map(|r| (0..clips.len()).map(move |c| (r, c)))
        .collect();
    let run = |&(r, c): &(usize, usize)| -> Result<(Measurement, RtfReport), CliError> {
        let (name, path) = &clips[c];
        let t = transcribe(model, path, opts)?;
        Ok((
            Measurement {
                filepath: name.clone(),
                repetition: r,
                rtf: t.report.rtf,
                wall_time: t.report.wall_time,
            },
            t.report,
        ))
    };
    let runs: Result<Vec<_>, CliError> = match workers {
        Some(1) => jobs.iter().map(run).collect(),
        _ => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(n) = workers {
                builder = builder.num_threads(n);
            }
            let pool = builder.build().map_err(|e| CliError::Data(format!("worker pool: {e}")))?;
            pool.install(|| jobs.par_iter().map(run).collect())
        }
    };
    summarize(runs?)
}
