//! Speech dataset handling: download/extract, read, convert, clean, split and
//! write.
//!
//! Datasets move through three stages. A [`Fetcher`] and
//! [`extract_archive`] put raw files on disk, a reader ([`read_dataset`])
//! turns the dataset's own layout into [`DatasetItem`]s, and a writer
//! ([`write_dataset`]) converts audio to 16 kHz mono PCM-16 WAV and emits a
//! tab-separated manifest. Cleaning, statistics and splitting operate on item
//! lists in between.

mod archive;
mod audio;
mod clean;
mod manifest;
mod read;
mod split;
mod stats;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use archive::{download_dataset, extract_archive, ArchiveKind, Fetcher, LocalFetcher};
pub use audio::{
    convert_audio, convert_audio_with, probe_duration, resample, AudioDecoder, Codecs, DecodedAudio,
    WavDecoder, RESAMPLER_NAME, TARGET_SAMPLE_RATE,
};
pub use clean::{clean_corpus, CleaningReport, Metric};
pub use manifest::{read_manifest, write_dataset, write_dataset_with, write_manifest, WriteOptions};
pub use read::{read_dataset, read_dataset_with, Dataset};
pub use split::{split_dataset, Partition, SplitKey, SplitPolicy};
pub use stats::{compute_stats, CorpusStats, StatsAccumulator};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported archive format: {0}")]
    UnsupportedArchive(PathBuf),
    #[error("corrupt archive {path}: {reason}")]
    CorruptArchive { path: PathBuf, reason: String },
    #[error("destination {path} is not writable: {source}")]
    DestinationNotWritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown dataset format {0:?}")]
    UnknownFormat(String),
    #[error("metadata file not found: {0}")]
    MissingMetadata(PathBuf),
    #[error("{path}: missing required column {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("cannot decode audio {path}: {reason}")]
    Undecodable { path: PathBuf, reason: String },
    #[error("audio file not found: {0}")]
    MissingAudio(PathBuf),
    #[error("{path}:{line}: {reason}")]
    Manifest {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("invalid split fractions: {0}")]
    InvalidFractions(String),
    #[error("{} item(s) have no {key} value: {}", items.len(), items.join(", "))]
    MissingKey { key: String, items: Vec<String> },
    #[error("remote fetching of {0:?} needs a network-capable fetcher")]
    RemoteUnsupported(String),
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CorpusError {
        let path = path.into();
        move |source| CorpusError::Io { path, source }
    }
}

/// One utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetItem {
    /// Audio path relative to the dataset root, '/'-separated.
    pub filepath: String,
    pub text: String,
    /// Seconds.
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
}

impl DatasetItem {
    pub fn new(filepath: impl Into<String>, text: impl Into<String>, duration: f64) -> Self {
        Self {
            filepath: filepath.into(),
            text: text.into(),
            duration,
            speaker: None,
        }
    }

    pub fn with_speaker(mut self, speaker: impl Into<String>) -> Self {
        self.speaker = Some(speaker.into());
        self
    }

    /// Transcript length in characters (Unicode scalar values).
    pub fn char_count(&self) -> usize {
        self.text.chars().count()
    }

    /// Characters per second; `None` for zero-length audio.
    pub fn chars_per_second(&self) -> Option<f64> {
        (self.duration > 0.0).then(|| self.char_count() as f64 / self.duration)
    }
}

/// Dataset layouts understood by the readers and writers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// CommonVoice release TSV (`path`, `sentence`, `client_id` columns).
    CommonVoiceTsv,
    /// Directory tree of `name.wav` + `name.txt` pairs.
    FolderTxt,
    /// This crate's tab-separated manifest.
    ManifestCsv,
    /// NeMo-style JSON lines (`audio_filepath`, `duration`, `text`). Write only.
    NemoJson,
}

impl DatasetFormat {
    pub fn tag(self) -> &'static str {
        match self {
            Self::CommonVoiceTsv => "commonvoice-tsv",
            Self::FolderTxt => "folder-txt",
            Self::ManifestCsv => "manifest-csv",
            Self::NemoJson => "nemo-json",
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "commonvoice-tsv" => Ok(Self::CommonVoiceTsv),
            "folder-txt" => Ok(Self::FolderTxt),
            "manifest-csv" => Ok(Self::ManifestCsv),
            "nemo-json" => Ok(Self::NemoJson),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}
