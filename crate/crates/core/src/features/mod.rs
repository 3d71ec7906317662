//! WAV loading and log-mel filterbank features.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rustfft::num_complex::Complex32;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The only rate the acoustic model accepts.
pub const SAMPLE_RATE: u32 = 16_000;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed WAV: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("{path}: expected {expected} {what}, found {found}")]
    Mismatch {
        path: PathBuf,
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("invalid feature config: {0}")]
    InvalidConfig(String),
    #[error("need at least 2 frames to normalize, got {0}")]
    Degenerate(usize),
}

/// Mono 16 kHz audio in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>) -> Self {
        Self {
            samples,
            sample_rate: SAMPLE_RATE,
        }
    }

    pub fn from_pcm16(samples: &[i16]) -> Self {
        Self::new(samples.iter().map(|&s| s as f32 / 32768.0).collect())
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

pub fn load_wav(path: &Path) -> Result<AudioClip, FeatureError> {
    let file = std::fs::File::open(path).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = hound::WavReader::new(std::io::BufReader::new(file)).map_err(|e| FeatureError::Malformed {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let spec = reader.spec();
    let mismatch = |what, expected: &str, found: String| FeatureError::Mismatch {
        path: path.to_path_buf(),
        what,
        expected: expected.to_string(),
        found,
    };
    if spec.channels != 1 {
        return Err(mismatch("channels", "1", spec.channels.to_string()));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(mismatch("Hz sample rate", "16000", spec.sample_rate.to_string()));
    }
    if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(mismatch(
            "sample format",
            "16-bit PCM",
            format!("{}-bit {:?}", spec.bits_per_sample, spec.sample_format),
        ));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f32 / 32768.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| FeatureError::Malformed {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    Ok(AudioClip::new(samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Seconds.
    pub window_length: f64,
    /// Seconds.
    pub hop_length: f64,
    pub fft_size: usize,
    pub mel_bins: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub log_epsilon: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            window_length: 0.020,
            hop_length: 0.010,
            fft_size: 512,
            mel_bins: 64,
            fmin: 0.0,
            fmax: 8000.0,
            log_epsilon: 2f64.powi(-24),
        }
    }
}

impl FeatureConfig {
    pub fn window_samples(&self) -> usize {
        (self.window_length * SAMPLE_RATE as f64).round() as usize
    }

    pub fn hop_samples(&self) -> usize {
        (self.hop_length * SAMPLE_RATE as f64).round() as usize
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: String| Err(FeatureError::InvalidConfig(m));
        if self.window_samples() == 0 || self.hop_samples() == 0 {
            return bad("window and hop must be at least one sample".into());
        }
        if self.fft_size < self.window_samples() {
            return bad(format!(
                "fft_size {} is smaller than the {}-sample window",
                self.fft_size,
                self.window_samples()
            ));
        }
        if self.mel_bins == 0 {
            return bad("mel_bins must be at least 1".into());
        }
        if !(0.0 <= self.fmin && self.fmin < self.fmax && self.fmax <= SAMPLE_RATE as f64 / 2.0) {
            return bad(format!("need 0 <= fmin < fmax <= 8000, got {}..{}", self.fmin, self.fmax));
        }
        if !(self.log_epsilon > 0.0) {
            return bad("log_epsilon must be positive".into());
        }
        Ok(())
    }

    /// Frames produced for `n` samples; no padding, so a partial trailing
    /// window is dropped.
    pub fn frame_count(&self, n: usize) -> usize {
        let w = self.window_samples();
        if n < w {
            0
        } else {
            1 + (n - w) / self.hop_samples()
        }
    }
}

/// Row-major T × F matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f32>,
    frames: usize,
    bins: usize,
}

impl FeatureMatrix {
    pub fn new(data: Vec<f32>, frames: usize, bins: usize) -> Self {
        assert_eq!(data.len(), frames * bins, "feature data does not match {frames}x{bins}");
        Self { data, frames, bins }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }

    pub fn get(&self, t: usize, f: usize) -> f32 {
        self.data[t * self.bins + f]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    /// Frames `start..end` as a new matrix.
    pub fn slice_frames(&self, start: usize, end: usize) -> FeatureMatrix {
        FeatureMatrix::new(self.data[start * self.bins..end * self.bins].to_vec(), end - start, self.bins)
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular HTK-mel filters over the `fft_size / 2 + 1` power bins, each
/// row scaled so its largest weight is 1.
pub fn mel_filterbank(cfg: &FeatureConfig) -> Vec<Vec<f32>> {
    let n_freqs = cfg.fft_size / 2 + 1;
    let (lo, hi) = (hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax));
    let edges: Vec<f64> = (0..cfg.mel_bins + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (cfg.mel_bins + 1) as f64))
        .collect();
    (0..cfg.mel_bins)
        .map(|m| {
            let (l, c, r) = (edges[m], edges[m + 1], edges[m + 2]);
            let mut row: Vec<f64> = (0..n_freqs)
                .map(|k| {
                    let f = k as f64 * SAMPLE_RATE as f64 / cfg.fft_size as f64;
                    ((f - l) / (c - l)).min((r - f) / (r - c)).max(0.0)
                })
                .collect();
            let peak = row.iter().cloned().fold(0.0, f64::max);
            if peak > 0.0 {
                row.iter_mut().for_each(|w| *w /= peak);
            }
            row.into_iter().map(|w| w as f32).collect()
        })
        .collect()
}

/// Reusable FFT plan, window and filterbank for one config.
pub struct LogMel {
    cfg: FeatureConfig,
    fft: Arc<dyn Fft<f32>>,
    window: Vec<f32>,
    /// Per mel bin: first nonzero FFT bin and its weights.
    filters: Vec<(usize, Vec<f32>)>,
}

impl LogMel {
    pub fn new(cfg: &FeatureConfig) -> Result<Self, FeatureError> {
        cfg.validate()?;
        let w = cfg.window_samples();
        // periodic Hann
        let window = (0..w)
            .map(|i| (0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / w as f64).cos()) as f32)
            .collect();
        let filters = mel_filterbank(cfg)
            .into_iter()
            .map(|row| {
                let start = row.iter().position(|&x| x > 0.0).unwrap_or(0);
                let end = row.iter().rposition(|&x| x > 0.0).map_or(start, |e| e + 1);
                (start, row[start..end].to_vec())
            })
            .collect();
        Ok(Self {
            cfg: cfg.clone(),
            fft: FftPlanner::new().plan_fft_forward(cfg.fft_size),
            window,
            filters,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.cfg
    }

    /// Mel filterbank energies before the log, T × F.
    pub fn power(&self, samples: &[f32]) -> FeatureMatrix {
        let t_count = self.cfg.frame_count(samples.len());
        let (hop, bins) = (self.cfg.hop_samples(), self.cfg.mel_bins);
        let n_freqs = self.cfg.fft_size / 2 + 1;
        let mut buf = vec![Complex32::default(); self.cfg.fft_size];
        let mut scratch = vec![Complex32::default(); self.fft.get_inplace_scratch_len()];
        let mut spectrum = vec![0f32; n_freqs];
        let mut out = Vec::with_capacity(t_count * bins);
        for t in 0..t_count {
            let frame = &samples[t * hop..t * hop + self.window.len()];
            buf.fill(Complex32::default());
            for ((b, &x), &w) in buf.iter_mut().zip(frame).zip(&self.window) {
                b.re = x * w;
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (s, c) in spectrum.iter_mut().zip(&buf) {
                *s = c.norm_sqr();
            }
            for (start, weights) in &self.filters {
                let e: f32 = weights.iter().zip(&spectrum[*start..]).map(|(w, p)| w * p).sum();
                out.push(e);
            }
        }
        FeatureMatrix::new(out, t_count, bins)
    }

    pub fn compute(&self, samples: &[f32]) -> FeatureMatrix {
        let mut m = self.power(samples);
        let eps = self.cfg.log_epsilon;
        for v in m.data.iter_mut() {
            *v = (*v as f64 + eps).ln() as f32;
        }
        m
    }
}

pub fn logmel(clip: &AudioClip, cfg: &FeatureConfig) -> Result<FeatureMatrix, FeatureError> {
    Ok(LogMel::new(cfg)?.compute(&clip.samples))
}

/// Standardizes each feature column to zero mean and unit population
/// standard deviation. Near-constant columns become zero.
pub fn normalize_features(m: &FeatureMatrix) -> Result<FeatureMatrix, FeatureError> {
    let (t, f) = (m.frames, m.bins);
    if t < 2 {
        return Err(FeatureError::Degenerate(t));
    }
    let mut out = m.data.clone();
    for col in 0..f {
        let mean = (0..t).map(|r| m.get(r, col) as f64).sum::<f64>() / t as f64;
        let var = (0..t).map(|r| (m.get(r, col) as f64 - mean).powi(2)).sum::<f64>() / t as f64;
        let std = var.sqrt();
        for r in 0..t {
            out[r * f + col] = if std < 1e-10 {
                0.0
            } else {
                ((m.get(r, col) as f64 - mean) / std) as f32
            };
        }
    }
    Ok(FeatureMatrix::new(out, t, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_wav(path: &Path, spec: hound::WavSpec, samples: &[i16]) {
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        for &s in samples {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
    }

    fn mono16k() -> hound::WavSpec {
        hound::WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        }
    }

    #[test]
    fn load_one_second() {
        let tmp = tempfile::tempdir().unwrap();
        let p = tmp.path().join("a.wav");
        let mut samples = vec![0i16; 16_000];
        samples[0] = 32767;
        samples[1] = -32768;
        write_wav(&p, mono16k(), &samples);
        let clip = load_wav(&p).unwrap();
        assert_eq!(clip.duration(), 1.0);
        assert_eq!(clip.samples[0], 32767.0 / 32768.0);
        assert_eq!(clip.samples[1], -1.0);
    }

    #[test]
    fn load_rejects_mismatches() {
        let tmp = tempfile::tempdir().unwrap();
        let p = tmp.path().join("s.wav");
        write_wav(&p, hound::WavSpec { channels: 2, ..mono16k() }, &[0; 8]);
        assert!(matches!(load_wav(&p), Err(FeatureError::Mismatch { what: "channels", .. })));
        write_wav(&p, hound::WavSpec { sample_rate: 8000, ..mono16k() }, &[0; 8]);
        assert!(matches!(load_wav(&p), Err(FeatureError::Mismatch { .. })));
        std::fs::write(&p, b"RIFF\x04\x00\x00\x00WAVE").unwrap();
        assert!(matches!(load_wav(&p), Err(FeatureError::Malformed { .. })));
        assert!(matches!(load_wav(&tmp.path().join("none.wav")), Err(FeatureError::Io { .. })));
    }

    #[test]
    fn silence_is_log_epsilon() {
        let cfg = FeatureConfig::default();
        let m = logmel(&AudioClip::new(vec![0.0; 16_000]), &cfg).unwrap();
        assert_eq!((m.frames(), m.bins()), (99, 64));
        let floor = (cfg.log_epsilon).ln() as f32;
        assert!(m.as_slice().iter().all(|&v| v == floor));
    }

    #[test]
    fn short_clip_is_empty() {
        let m = logmel(&AudioClip::new(vec![0.1; 319]), &FeatureConfig::default()).unwrap();
        assert_eq!(m.frames(), 0);
    }

    #[test]
    fn filter_rows_peak_at_one() {
        for row in mel_filterbank(&FeatureConfig::default()) {
            let peak = row.iter().cloned().fold(0.0f32, f32::max);
            assert!((peak - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn config_validation() {
        let bad = FeatureConfig {
            fft_size: 256,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = FeatureConfig {
            fmax: 9000.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let cfg: FeatureConfig = serde_json::from_str(r#"{"mel_bins": 80}"#).unwrap();
        assert_eq!(cfg.mel_bins, 80);
        assert_eq!(cfg.hop_samples(), 160);
    }

    #[test]
    fn normalize_examples() {
        let m = FeatureMatrix::new(vec![1.0, 5.0, 3.0, 5.0], 2, 2);
        let n = normalize_features(&m).unwrap();
        assert_eq!(n.as_slice(), &[-1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            normalize_features(&FeatureMatrix::new(vec![1.0], 1, 1)),
            Err(FeatureError::Degenerate(1))
        ));
    }
}
