use std::fs::{self, File};
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchiveKind {
    Zip,
    TarGz,
    Tar,
}

impl ArchiveKind {
    /// Sniffs the container from magic bytes.
    pub fn detect(path: &Path) -> Result<Option<ArchiveKind>, CorpusError> {
        let mut head = [0u8; 512];
        let mut file = File::open(path).map_err(CorpusError::io(path))?;
        let mut filled = 0;
        while filled < head.len() {
            let n = file.read(&mut head[filled..]).map_err(CorpusError::io(path))?;
            if n == 0 {
                break;
            }
            filled += n;
        }
        let head = &head[..filled];
        Ok(if head.starts_with(b"PK\x03\x04") || head.starts_with(b"PK\x05\x06") {
            Some(ArchiveKind::Zip)
        } else if head.starts_with(&[0x1f, 0x8b]) {
            Some(ArchiveKind::TarGz)
        } else if head.len() >= 262 && &head[257..262] == b"ustar" {
            Some(ArchiveKind::Tar)
        } else {
            None
        })
    }
}

/// Extracts a zip, tar.gz or tar archive below `dest` and returns the
/// extracted root: the single top-level directory if the archive has
/// exactly one, `dest` otherwise.
pub fn extract_archive(path: &Path, dest: &Path) -> Result<PathBuf, CorpusError> {
    let kind = ArchiveKind::detect(path)?
        .ok_or_else(|| CorpusError::UnsupportedArchive(path.to_path_buf()))?;
    fs::create_dir_all(dest).map_err(|source| CorpusError::DestinationNotWritable {
        path: dest.to_path_buf(),
        source,
    })?;
    let corrupt = |reason: String| CorpusError::CorruptArchive {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(CorpusError::io(path))?;
    match kind {
        ArchiveKind::Zip => {
            let mut archive = zip::ZipArchive::new(file).map_err(|e| corrupt(e.to_string()))?;
            archive.extract(dest).map_err(|e| match e {
                zip::result::ZipError::Io(io) if io.kind() == std::io::ErrorKind::PermissionDenied => {
                    CorpusError::DestinationNotWritable {
                        path: dest.to_path_buf(),
                        source: io,
                    }
                }
                other => corrupt(other.to_string()),
            })?;
        }
        ArchiveKind::TarGz => unpack_tar(tar::Archive::new(GzDecoder::new(file)), dest, corrupt)?,
        ArchiveKind::Tar => unpack_tar(tar::Archive::new(file), dest, corrupt)?,
    }
    extracted_root(dest)
}

fn unpack_tar<R: Read>(
    mut archive: tar::Archive<R>,
    dest: &Path,
    corrupt: impl Fn(String) -> CorpusError,
) -> Result<(), CorpusError> {
    archive.unpack(dest).map_err(|e| {
        if e.kind() == std::io::ErrorKind::PermissionDenied {
            CorpusError::DestinationNotWritable {
                path: dest.to_path_buf(),
                source: e,
            }
        } else {
            corrupt(e.to_string())
        }
    })
}

fn extracted_root(dest: &Path) -> Result<PathBuf, CorpusError> {
    let entries: Vec<_> = fs::read_dir(dest)
        .map_err(CorpusError::io(dest))?
        .filter_map(Result::ok)
        .collect();
    match entries.as_slice() {
        [only] if only.path().is_dir() => Ok(only.path()),
        _ => Ok(dest.to_path_buf()),
    }
}

/// Brings a dataset source to local disk. Network access lives behind this
/// trait so that the default build and the tests never open sockets.
pub trait Fetcher {
    /// Places the source under `dest_dir` and returns the local path.
    fn fetch(&self, source: &str, dest_dir: &Path) -> Result<PathBuf, CorpusError>;
}

/// Handles plain paths and `file://` URLs by copying.
#[derive(Debug, Default, Clone, Copy)]
pub struct LocalFetcher;

impl Fetcher for LocalFetcher {
    fn fetch(&self, source: &str, dest_dir: &Path) -> Result<PathBuf, CorpusError> {
        let local = match source.split_once("://") {
            None => Path::new(source),
            Some(("file", rest)) => Path::new(rest),
            Some(_) => return Err(CorpusError::RemoteUnsupported(source.to_string())),
        };
        if local.is_dir() {
            return Ok(local.to_path_buf());
        }
        fs::create_dir_all(dest_dir).map_err(|source| CorpusError::DestinationNotWritable {
            path: dest_dir.to_path_buf(),
            source,
        })?;
        let name = local
            .file_name()
            .ok_or_else(|| CorpusError::MissingAudio(local.to_path_buf()))?;
        let target = dest_dir.join(name);
        if target != local {
            fs::copy(local, &target).map_err(CorpusError::io(local))?;
        }
        Ok(target)
    }
}

/// Fetches `source` and extracts it when it is an archive.
pub fn download_dataset(
    fetcher: &dyn Fetcher,
    source: &str,
    work_dir: &Path,
) -> Result<PathBuf, CorpusError> {
    let fetched = fetcher.fetch(source, &work_dir.join("downloads"))?;
    if fetched.is_dir() {
        return Ok(fetched);
    }
    match ArchiveKind::detect(&fetched)? {
        Some(_) => {
            let stem = fetched
                .file_name()
                .map(|n| n.to_string_lossy().split('.').next().unwrap_or("dataset").to_string())
                .unwrap_or_else(|| "dataset".into());
            extract_archive(&fetched, &work_dir.join("extracted").join(stem))
        }
        None => Ok(fetched),
    }
}
