//! Tab-separated manifest: header `duration<TAB>filepath<TAB>text[<TAB>speaker]`,
//! one utterance per line, paths relative to the manifest's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::audio::{convert_audio_with, Codecs, RESAMPLER_NAME, TARGET_SAMPLE_RATE};
use super::read::Dataset;
use super::{CorpusError, DatasetFormat, DatasetItem};

const COLUMNS: [&str; 4] = ["duration", "filepath", "text", "speaker"];

/// Tabs and line breaks would break the row structure.
fn sanitize(field: &str) -> String {
    field
        .chars()
        .map(|c| if matches!(c, '\t' | '\n' | '\r') { ' ' } else { c })
        .collect()
}

pub fn write_manifest(path: &Path, items: &[DatasetItem]) -> Result<(), CorpusError> {
    let with_speaker = items.iter().any(|i| i.speaker.is_some());
    let ncols = if with_speaker { 4 } else { 3 };
    let mut out = COLUMNS[..ncols].join("\t");
    out.push('\n');
    for item in items {
        write!(
            out,
            "{:.3}\t{}\t{}",
            item.duration,
            sanitize(&item.filepath),
            sanitize(&item.text)
        )
        .unwrap();
        if with_speaker {
            out.push('\t');
            out.push_str(&sanitize(item.speaker.as_deref().unwrap_or("")));
        }
        out.push('\n');
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(CorpusError::io(parent))?;
    }
    fs::write(path, out).map_err(CorpusError::io(path))
}

pub fn read_manifest(path: &Path) -> Result<Dataset, CorpusError> {
    if !path.is_file() {
        return Err(CorpusError::MissingMetadata(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(CorpusError::io(path))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split('\t').collect();
    let col = |name: &str| {
        header.iter().position(|h| *h == name).ok_or_else(|| CorpusError::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    };
    let (dur_col, path_col, text_col) = (col("duration")?, col("filepath")?, col("text")?);
    let speaker_col = header.iter().position(|h| *h == "speaker");

    let mut items = Vec::new();
    let mut skipped = 0;
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (Some(dur), Some(fp), Some(txt)) =
            (fields.get(dur_col), fields.get(path_col), fields.get(text_col))
        else {
            log::warn!("{}:{}: too few columns, row skipped", path.display(), i + 2);
            skipped += 1;
            continue;
        };
        let duration = dur
            .parse::<f64>()
            .ok()
            .filter(|d| *d >= 0.0 && d.is_finite())
            .ok_or_else(|| CorpusError::Manifest {
                path: path.to_path_buf(),
                line: i + 2,
                reason: format!("bad duration {dur:?}"),
            })?;
        if fp.is_empty() {
            log::warn!("{}:{}: empty filepath, row skipped", path.display(), i + 2);
            skipped += 1;
            continue;
        }
        items.push(DatasetItem {
            filepath: fp.to_string(),
            text: txt.to_string(),
            duration,
            speaker: speaker_col
                .and_then(|c| fields.get(c))
                .filter(|s| !s.is_empty())
                .map(|s| s.to_string()),
        });
    }
    Ok(Dataset {
        root: path.parent().unwrap_or(Path::new(".")).to_path_buf(),
        items,
        skipped_rows: skipped,
        unprobed: 0,
    })
}

#[derive(Debug, Clone)]
pub struct WriteOptions {
    pub format: DatasetFormat,
    /// Manifest file name inside the output directory.
    pub manifest_name: String,
    /// Worker threads for audio conversion; `None` uses all cores.
    pub workers: Option<usize>,
}

impl Default for WriteOptions {
    fn default() -> Self {
        Self {
            format: DatasetFormat::ManifestCsv,
            manifest_name: "manifest.tsv".into(),
            workers: None,
        }
    }
}

impl WriteOptions {
    pub fn for_format(format: DatasetFormat) -> Self {
        let manifest_name = match format {
            DatasetFormat::NemoJson => "manifest.json".into(),
            _ => "manifest.tsv".into(),
        };
        Self {
            format,
            manifest_name,
            ..Self::default()
        }
    }
}

fn converted_name(filepath: &str) -> String {
    let p = Path::new(filepath).with_extension("wav");
    let rel: Vec<String> = p
        .components()
        .filter_map(|c| match c {
            std::path::Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
            _ => None,
        })
        .collect();
    format!("audio/{}", rel.join("/"))
}

/// Converts every item's audio into `out_dir/audio/` and writes the
/// manifest. Returns the manifest path. Rows keep the input order.
pub fn write_dataset(
    items: &[DatasetItem],
    source_root: &Path,
    format: DatasetFormat,
    out_dir: &Path,
) -> Result<PathBuf, CorpusError> {
    write_dataset_with(items, source_root, out_dir, &WriteOptions::for_format(format), &Codecs::default())
}

pub fn write_dataset_with(
    items: &[DatasetItem],
    source_root: &Path,
    out_dir: &Path,
    options: &WriteOptions,
    codecs: &Codecs,
) -> Result<PathBuf, CorpusError> {
    if !matches!(options.format, DatasetFormat::ManifestCsv | DatasetFormat::NemoJson) {
        return Err(CorpusError::UnknownFormat(format!("{} (read-only)", options.format)));
    }
    fs::create_dir_all(out_dir).map_err(|source| CorpusError::DestinationNotWritable {
        path: out_dir.to_path_buf(),
        source,
    })?;
    for item in items {
        let src = source_root.join(&item.filepath);
        if !src.is_file() {
            return Err(CorpusError::MissingAudio(src));
        }
    }

    let convert_one = |item: &DatasetItem| -> Result<DatasetItem, CorpusError> {
        let name = converted_name(&item.filepath);
        let converted = convert_audio_with(&source_root.join(&item.filepath), &out_dir.join(&name), codecs)?;
        Ok(DatasetItem {
            filepath: name,
            text: sanitize(&item.text),
            // metadata duration is authoritative; unknown (0) falls back to the converted length
            duration: if item.duration > 0.0 { item.duration } else { converted },
            speaker: item.speaker.clone(),
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.unwrap_or(0))
        .build()
        .map_err(|e| CorpusError::Io {
            path: out_dir.to_path_buf(),
            source: std::io::Error::other(e),
        })?;
    let written: Vec<DatasetItem> =
        pool.install(|| items.par_iter().map(convert_one).collect::<Result<_, _>>())?;

    let manifest = out_dir.join(&options.manifest_name);
    match options.format {
        DatasetFormat::NemoJson => {
            let mut out = String::new();
            for item in &written {
                let row = serde_json::json!({
                    "audio_filepath": item.filepath,
                    "duration": (item.duration * 1000.0).round() / 1000.0,
                    "text": item.text,
                });
                out.push_str(&row.to_string());
                out.push('\n');
            }
            fs::write(&manifest, out).map_err(CorpusError::io(&manifest))?;
        }
        _ => write_manifest(&manifest, &written)?,
    }
    let info = serde_json::json!({
        "format": options.format.tag(),
        "sample_rate": TARGET_SAMPLE_RATE,
        "channels": 1,
        "encoding": "pcm_s16le",
        "resampler": RESAMPLER_NAME,
        "items": written.len(),
    });
    let info_path = out_dir.join("dataset.json");
    fs::write(&info_path, serde_json::to_string_pretty(&info).unwrap()).map_err(CorpusError::io(&info_path))?;
    Ok(manifest)
}
