use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use walkdir::WalkDir;

use super::audio::Codecs;
use super::manifest::read_manifest;
use super::{CorpusError, DatasetFormat, DatasetItem};

/// Items plus the directory their `filepath`s are relative to.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub root: PathBuf,
    pub items: Vec<DatasetItem>,
    /// Rows dropped for missing mandatory fields.
    pub skipped_rows: usize,
    /// Items whose duration could not be probed; their duration is 0.
    pub unprobed: usize,
}

pub fn read_dataset(format: DatasetFormat, path: &Path) -> Result<Dataset, CorpusError> {
    read_dataset_with(format, path, &Codecs::default())
}

pub fn read_dataset_with(format: DatasetFormat, path: &Path, codecs: &Codecs) -> Result<Dataset, CorpusError> {
    match format {
        DatasetFormat::CommonVoiceTsv => read_commonvoice(path, codecs),
        DatasetFormat::FolderTxt => read_folder(path, codecs),
        DatasetFormat::ManifestCsv => read_manifest(path),
        DatasetFormat::NemoJson => Err(CorpusError::UnknownFormat(format!(
            "{} (write-only)",
            format.tag()
        ))),
    }
}

fn probe(codecs: &Codecs, path: &Path, unprobed: &mut usize) -> f64 {
    match codecs.probe_duration(path) {
        Ok(d) => d,
        Err(e) => {
            warn!("{e}; duration set to 0");
            *unprobed += 1;
            0.0
        }
    }
}

fn column(header: &[&str], names: &[&str]) -> Option<usize> {
    header.iter().position(|h| names.contains(&h.trim()))
}

/// CommonVoice release TSV. `path` is the TSV file; audio lives in the
/// sibling `clips/` directory when present.
fn read_commonvoice(path: &Path, codecs: &Codecs) -> Result<Dataset, CorpusError> {
    if !path.is_file() {
        return Err(CorpusError::MissingMetadata(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(CorpusError::io(path))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split('\t').collect();
    let missing = |column: &str| CorpusError::MissingColumn {
        path: path.to_path_buf(),
        column: column.to_string(),
    };
    let path_col = column(&header, &["path", "filename", "filepath"]).ok_or_else(|| missing("path"))?;
    let text_col = column(&header, &["sentence", "text"]).ok_or_else(|| missing("sentence"))?;
    let speaker_col = column(&header, &["client_id", "speaker"]);
    let duration_col = column(&header, &["duration"]);

    let dir = path.parent().unwrap_or(Path::new("."));
    let root = if dir.join("clips").is_dir() {
        dir.join("clips")
    } else {
        dir.to_path_buf()
    };

    let mut dataset = Dataset {
        root,
        items: Vec::new(),
        skipped_rows: 0,
        unprobed: 0,
    };
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let get = |i: usize| fields.get(i).map(|f| f.trim()).filter(|f| !f.is_empty());
        let (Some(filepath), Some(sentence)) = (get(path_col), get(text_col)) else {
            warn!("{}:{}: missing path or sentence, row skipped", path.display(), lineno + 2);
            dataset.skipped_rows += 1;
            continue;
        };
        let duration = match duration_col.and_then(get).and_then(|d| d.parse::<f64>().ok()) {
            Some(d) if d >= 0.0 => d,
            _ => probe(codecs, &dataset.root.join(filepath), &mut dataset.unprobed),
        };
        dataset.items.push(DatasetItem {
            filepath: filepath.to_string(),
            text: sentence.to_string(),
            duration,
            speaker: speaker_col.and_then(get).map(String::from),
        });
    }
    Ok(dataset)
}

/// Directory tree of audio files with same-stem `.txt` transcripts. Audio
/// without a transcript is skipped.
fn read_folder(path: &Path, codecs: &Codecs) -> Result<Dataset, CorpusError> {
    if !path.is_dir() {
        return Err(CorpusError::MissingMetadata(path.to_path_buf()));
    }
    let mut dataset = Dataset {
        root: path.to_path_buf(),
        items: Vec::new(),
        skipped_rows: 0,
        unprobed: 0,
    };
    let mut audio: Vec<PathBuf> = WalkDir::new(path)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| codecs.for_path(p).is_ok())
        .collect();
    audio.sort();
    for file in audio {
        let transcript = file.with_extension("txt");
        let text = match fs::read_to_string(&transcript) {
            Ok(t) if !t.trim().is_empty() => t.trim().to_string(),
            _ => {
                warn!("{}: no transcript, skipped", file.display());
                dataset.skipped_rows += 1;
                continue;
            }
        };
        let rel = file.strip_prefix(path).unwrap_or(&file);
        let filepath = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        let duration = probe(codecs, &file, &mut dataset.unprobed);
        dataset.items.push(DatasetItem {
            filepath,
            text,
            duration,
            speaker: None,
        });
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_silence(path: &Path, samples: usize) {
        let mut w = hound::WavWriter::create(path, super::super::audio::target_spec()).unwrap();
        for _ in 0..samples {
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn commonvoice_row() {
        let tmp = tempfile::tempdir().unwrap();
        let tsv = tmp.path().join("train.tsv");
        fs::write(&tsv, "path\tsentence\tclient_id\ncv001.mp3\thallo welt\tspk7\n").unwrap();
        let ds = read_dataset(DatasetFormat::CommonVoiceTsv, &tsv).unwrap();
        assert_eq!(ds.items.len(), 1);
        let item = &ds.items[0];
        assert_eq!(item.filepath, "cv001.mp3");
        assert_eq!(item.text, "hallo welt");
        assert_eq!(item.speaker.as_deref(), Some("spk7"));
        // no mp3 decoder registered
        assert_eq!(ds.unprobed, 1);
    }

    #[test]
    fn commonvoice_probes_wav_in_clips_dir() {
        let tmp = tempfile::tempdir().unwrap();
        fs::create_dir(tmp.path().join("clips")).unwrap();
        write_silence(&tmp.path().join("clips/a.wav"), 8000);
        let tsv = tmp.path().join("dev.tsv");
        fs::write(
            &tsv,
            "client_id\tpath\tsentence\tup_votes\nspk\ta.wav\tja\t2\nspk\t\tmissing path\t0\n",
        )
        .unwrap();
        let ds = read_dataset(DatasetFormat::CommonVoiceTsv, &tsv).unwrap();
        assert_eq!(ds.items.len(), 1);
        assert_eq!(ds.items[0].duration, 0.5);
        assert_eq!(ds.skipped_rows, 1);
        assert_eq!(ds.unprobed, 0);
    }

    #[test]
    fn header_only_is_empty() {
        let tmp = tempfile::tempdir().unwrap();
        let tsv = tmp.path().join("test.tsv");
        fs::write(&tsv, "path\tsentence\n").unwrap();
        assert!(read_dataset(DatasetFormat::CommonVoiceTsv, &tsv).unwrap().items.is_empty());
    }

    #[test]
    fn missing_metadata_and_columns() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(
            read_dataset(DatasetFormat::CommonVoiceTsv, &tmp.path().join("nope.tsv")),
            Err(CorpusError::MissingMetadata(_))
        ));
        let tsv = tmp.path().join("x.tsv");
        fs::write(&tsv, "path\tfoo\n").unwrap();
        assert!(matches!(
            read_dataset(DatasetFormat::CommonVoiceTsv, &tsv),
            Err(CorpusError::MissingColumn { .. })
        ));
        assert!(matches!(
            "kaldi".parse::<DatasetFormat>(),
            Err(CorpusError::UnknownFormat(_))
        ));
    }

    #[test]
    fn folder_pairs() {
        let tmp = tempfile::tempdir().unwrap();
        write_silence(&tmp.path().join("a.wav"), 16000);
        fs::write(tmp.path().join("a.txt"), "hello\n").unwrap();
        write_silence(&tmp.path().join("orphan.wav"), 10);
        let ds = read_dataset(DatasetFormat::FolderTxt, tmp.path()).unwrap();
        assert_eq!(ds.items, vec![DatasetItem::new("a.wav", "hello", 1.0)]);
        assert_eq!(ds.skipped_rows, 1);
    }
}
