use std::f64::consts::PI;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::CorpusError;

pub const TARGET_SAMPLE_RATE: u32 = 16_000;

/// Name recorded in dataset metadata for the resampling method.
pub const RESAMPLER_NAME: &str = "windowed-sinc (Hann, 16 zero crossings)";

const ZERO_CROSSINGS: f64 = 16.0;

/// Decoded audio, interleaved samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedAudio {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub channels: u16,
}

impl DecodedAudio {
    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels.max(1) as usize
    }

    pub fn duration(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }

    /// Averages channels into one.
    pub fn downmix(&self) -> Vec<f32> {
        let ch = self.channels.max(1) as usize;
        if ch == 1 {
            return self.samples.clone();
        }
        self.samples
            .chunks_exact(ch)
            .map(|frame| frame.iter().sum::<f32>() / ch as f32)
            .collect()
    }
}

/// Codec plug-in. Only WAV ships with the crate; compressed formats
/// (mp3, ogg, flac) are added by registering further decoders.
pub trait AudioDecoder: Send + Sync {
    /// Lowercase file extensions handled, without the dot.
    fn extensions(&self) -> &[&str];
    /// Duration from container headers, without decoding the payload.
    fn probe_duration(&self, path: &Path) -> Result<f64, CorpusError>;
    fn decode(&self, path: &Path) -> Result<DecodedAudio, CorpusError>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct WavDecoder;

fn undecodable(path: &Path, e: impl std::fmt::Display) -> CorpusError {
    CorpusError::Undecodable {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

fn open_wav(path: &Path) -> Result<WavReader<std::io::BufReader<std::fs::File>>, CorpusError> {
    if !path.exists() {
        return Err(CorpusError::MissingAudio(path.to_path_buf()));
    }
    WavReader::open(path).map_err(|e| undecodable(path, e))
}

impl AudioDecoder for WavDecoder {
    fn extensions(&self) -> &[&str] {
        &["wav"]
    }

    fn probe_duration(&self, path: &Path) -> Result<f64, CorpusError> {
        let reader = open_wav(path)?;
        Ok(reader.duration() as f64 / reader.spec().sample_rate as f64)
    }

    fn decode(&self, path: &Path) -> Result<DecodedAudio, CorpusError> {
        let mut reader = open_wav(path)?;
        let spec = reader.spec();
        let samples: Vec<f32> = match spec.sample_format {
            SampleFormat::Float => reader
                .samples::<f32>()
                .collect::<Result<_, _>>()
                .map_err(|e| undecodable(path, e))?,
            SampleFormat::Int => {
                let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f32;
                reader
                    .samples::<i32>()
                    .map(|s| s.map(|v| v as f32 * scale))
                    .collect::<Result<_, _>>()
                    .map_err(|e| undecodable(path, e))?
            }
        };
        Ok(DecodedAudio {
            samples,
            sample_rate: spec.sample_rate,
            channels: spec.channels,
        })
    }
}

/// Decoder registry keyed by file extension.
pub struct Codecs {
    decoders: Vec<Box<dyn AudioDecoder>>,
}

impl Default for Codecs {
    fn default() -> Self {
        Self {
            decoders: vec![Box::new(WavDecoder)],
        }
    }
}

impl Codecs {
    pub fn register(&mut self, decoder: Box<dyn AudioDecoder>) {
        // later registrations take precedence
        self.decoders.insert(0, decoder);
    }

    pub fn for_path(&self, path: &Path) -> Result<&dyn AudioDecoder, CorpusError> {
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        self.decoders
            .iter()
            .find(|d| d.extensions().contains(&ext.as_str()))
            .map(|d| d.as_ref())
            .ok_or_else(|| undecodable(path, format!("no decoder registered for .{ext}")))
    }

    pub fn probe_duration(&self, path: &Path) -> Result<f64, CorpusError> {
        self.for_path(path)?.probe_duration(path)
    }

    pub fn decode(&self, path: &Path) -> Result<DecodedAudio, CorpusError> {
        self.for_path(path)?.decode(path)
    }
}

pub fn probe_duration(path: &Path) -> Result<f64, CorpusError> {
    Codecs::default().probe_duration(path)
}

/// Number of output samples for `n` input samples, rounded to nearest.
fn resampled_len(n: usize, from: u32, to: u32) -> usize {
    ((n as u128 * to as u128 + from as u128 / 2) / from as u128) as usize
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Band-limited resampling with a Hann-windowed sinc kernel. The filter
/// cutoff sits at the lower of the two Nyquist frequencies. Filter phases
/// repeat with period `to / gcd(from, to)`, so each phase is tabulated once.
pub fn resample(samples: &[f32], from: u32, to: u32) -> Vec<f32> {
    if from == to || samples.is_empty() {
        return samples.to_vec();
    }
    let out_len = resampled_len(samples.len(), from, to);
    let ratio = from as f64 / to as f64;
    let cutoff = (to as f64 / from as f64).min(1.0);
    let half_width = (ZERO_CROSSINGS / cutoff).ceil() as i64;
    let taps = (2 * half_width + 1) as usize;

    let g = gcd(from, to);
    let phases = (to / g) as usize;
    let step = (from / g) as u64;
    // table[p][k]: weight of input sample (base - half_width + k) for output
    // position base + p/phases
    let mut table = vec![0f64; phases * taps];
    for p in 0..phases {
        let frac = p as f64 / phases as f64;
        let row = &mut table[p * taps..(p + 1) * taps];
        for (k, w) in row.iter_mut().enumerate() {
            let x = k as f64 - half_width as f64 - frac;
            let sinc = if x == 0.0 {
                1.0
            } else {
                (PI * cutoff * x).sin() / (PI * cutoff * x)
            };
            let window = 0.5 + 0.5 * (PI * x / (half_width as f64 + 1.0)).cos();
            *w = cutoff * sinc * window;
        }
    }

    let n = samples.len() as i64;
    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len as u64 {
        let pos = j * step;
        let base = (pos / phases as u64) as i64;
        let p = (pos % phases as u64) as usize;
        debug_assert!((base as f64 + p as f64 / phases as f64 - j as f64 * ratio).abs() < 1e-6);
        let row = &table[p * taps..(p + 1) * taps];
        let start = base - half_width;
        let mut acc = 0f64;
        for (k, w) in row.iter().enumerate() {
            let idx = start + k as i64;
            if idx >= 0 && idx < n {
                acc += samples[idx as usize] as f64 * w;
            }
        }
        out.push(acc as f32);
    }
    out
}

fn to_pcm16(x: f32) -> i16 {
    (x as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

pub(crate) fn target_spec() -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate: TARGET_SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    }
}

pub(crate) fn write_pcm16(dst: &Path, samples: impl IntoIterator<Item = i16>) -> Result<(), CorpusError> {
    if let Some(parent) = dst.parent() {
        std::fs::create_dir_all(parent).map_err(CorpusError::io(parent))?;
    }
    let io_err = |e: hound::Error| match e {
        hound::Error::IoError(source) => CorpusError::Io {
            path: dst.to_path_buf(),
            source,
        },
        other => undecodable(dst, other),
    };
    let mut writer = WavWriter::create(dst, target_spec()).map_err(io_err)?;
    for s in samples {
        writer.write_sample(s).map_err(io_err)?;
    }
    writer.finalize().map_err(io_err)
}

/// Converts any decodable file to PCM-16 mono 16 kHz WAV and returns the
/// output duration in seconds.
pub fn convert_audio(src: &Path, dst: &Path) -> Result<f64, CorpusError> {
    convert_audio_with(src, dst, &Codecs::default())
}

pub fn convert_audio_with(src: &Path, dst: &Path, codecs: &Codecs) -> Result<f64, CorpusError> {
    // conformant input: copy samples verbatim
    if let Ok(reader) = WavReader::open(src) {
        if reader.spec() == target_spec() {
            let samples: Vec<i16> = reader
                .into_samples::<i16>()
                .collect::<Result<_, _>>()
                .map_err(|e| undecodable(src, e))?;
            let duration = samples.len() as f64 / TARGET_SAMPLE_RATE as f64;
            write_pcm16(dst, samples)?;
            return Ok(duration);
        }
    }
    let decoded = codecs.decode(src)?;
    let mono = decoded.downmix();
    let resampled = resample(&mono, decoded.sample_rate, TARGET_SAMPLE_RATE);
    let duration = resampled.len() as f64 / TARGET_SAMPLE_RATE as f64;
    write_pcm16(dst, resampled.into_iter().map(to_pcm16))?;
    Ok(duration)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_wav(path: &Path, rate: u32, channels: u16, frames: &[Vec<i16>]) {
        let spec = WavSpec {
            channels,
            sample_rate: rate,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(path, spec).unwrap();
        for frame in frames {
            for &s in frame {
                w.write_sample(s).unwrap();
            }
        }
        w.finalize().unwrap();
    }

    fn tone(rate: u32, freq: f64, seconds: f64) -> Vec<i16> {
        let n = (rate as f64 * seconds) as usize;
        (0..n)
            .map(|i| ((2.0 * PI * freq * i as f64 / rate as f64).sin() * 12000.0) as i16)
            .collect()
    }

    #[test]
    fn stereo_48k_to_mono_16k() {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("in.wav");
        let left = tone(48_000, 440.0, 2.0);
        let frames: Vec<Vec<i16>> = left.iter().map(|&l| vec![l, l / 2]).collect();
        write_wav(&src, 48_000, 2, &frames);
        let dst = tmp.path().join("out.wav");
        let duration = convert_audio(&src, &dst).unwrap();
        assert!((duration - 2.0).abs() <= 1.0 / 16_000.0);
        let reader = WavReader::open(&dst).unwrap();
        assert_eq!(reader.spec(), target_spec());
        assert_eq!(reader.duration(), 32_000);
    }

    #[test]
    fn conformant_file_is_copied_exactly() {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("in.wav");
        let samples = tone(16_000, 300.0, 0.5);
        write_wav(&src, 16_000, 1, &samples.iter().map(|&s| vec![s]).collect::<Vec<_>>());
        let dst = tmp.path().join("out.wav");
        let duration = convert_audio(&src, &dst).unwrap();
        assert_eq!(duration, 0.5);
        let out: Vec<i16> = WavReader::open(&dst).unwrap().into_samples().map(Result::unwrap).collect();
        assert_eq!(out, samples);
    }

    #[test]
    fn empty_payload() {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("in.wav");
        write_wav(&src, 44_100, 2, &[]);
        let dst = tmp.path().join("out.wav");
        assert_eq!(convert_audio(&src, &dst).unwrap(), 0.0);
        let reader = WavReader::open(&dst).unwrap();
        assert_eq!(reader.duration(), 0);
        assert_eq!(reader.spec(), target_spec());
    }

    #[test]
    fn undecodable_source() {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("in.wav");
        std::fs::write(&src, b"not a wav file at all").unwrap();
        assert!(matches!(
            convert_audio(&src, &tmp.path().join("o.wav")),
            Err(CorpusError::Undecodable { .. })
        ));
        let mp3 = tmp.path().join("in.mp3");
        std::fs::write(&mp3, b"ID3").unwrap();
        assert!(matches!(
            convert_audio(&mp3, &tmp.path().join("o.wav")),
            Err(CorpusError::Undecodable { .. })
        ));
    }

    #[test]
    fn resampler_preserves_passband_tone_and_rejects_alias() {
        let rate = 48_000;
        let n = 48_000;
        let sine = |f: f64| -> Vec<f32> {
            (0..n)
                .map(|i| (2.0 * PI * f * i as f64 / rate as f64).sin() as f32 * 0.5)
                .collect()
        };
        let rms = |x: &[f32]| (x.iter().map(|v| (*v as f64).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
        let pass = resample(&sine(1000.0), rate, 16_000);
        assert_eq!(pass.len(), 16_000);
        // skip filter edges
        let inner = &pass[200..15_800];
        assert!((rms(inner) - 0.5 / 2f64.sqrt()).abs() < 0.01, "{}", rms(inner));
        // 12 kHz is above the new Nyquist and must be strongly attenuated
        let stop = resample(&sine(12_000.0), rate, 16_000);
        assert!(rms(&stop[200..15_800]) < 0.01, "{}", rms(&stop[200..15_800]));
    }

    #[test]
    fn resample_44100_length() {
        let x = vec![0.25f32; 44_100];
        let y = resample(&x, 44_100, 16_000);
        assert_eq!(y.len(), 16_000);
        // DC gain is unity away from the edges
        assert!((y[8000] - 0.25).abs() < 1e-3, "{}", y[8000]);
    }
}
