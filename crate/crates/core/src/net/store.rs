//! Directory tensor store: `manifest.json` with a tensor table and a
//! `weights.bin` blob of little-endian f32 values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::NetError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BLOB_FILE: &str = "weights.bin";
pub const FORMAT_VERSION: u32 = 1;

/// Row-major f32 array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len(), "tensor data does not match shape {shape:?}");
        Self { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self::new(shape, vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// One row of the manifest's tensor table. Offsets and lengths are in bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    pub offset: u64,
    pub length: u64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> NetError + '_ {
    move |source| NetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `tensors` (in name order) plus the metadata fields of `meta`.
pub fn write_store(
    dir: &Path,
    meta: serde_json::Map<String, serde_json::Value>,
    tensors: &BTreeMap<String, Tensor>,
) -> Result<(), NetError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let total: usize = tensors.values().map(Tensor::len).sum();
    let mut blob = Vec::with_capacity(total * 4);
    let mut table = Vec::with_capacity(tensors.len());
    for (name, t) in tensors {
        let offset = blob.len() as u64;
        for v in &t.data {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        table.push(TensorEntry {
            name: name.clone(),
            shape: t.shape.clone(),
            dtype: "f32".into(),
            offset,
            length: (t.len() * 4) as u64,
        });
    }
    let mut manifest = meta;
    manifest.insert("format_version".into(), FORMAT_VERSION.into());
    manifest.insert("tensors".into(), serde_json::to_value(&table).unwrap());
    manifest.insert("sha256".into(), hex::encode(Sha256::digest(&blob)).into());
    let blob_path = dir.join(BLOB_FILE);
    fs::write(&blob_path, &blob).map_err(io_err(&blob_path))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(manifest)).unwrap();
    fs::write(&manifest_path, text + "\n").map_err(io_err(&manifest_path))
}

/// Reads the manifest and all tensors, verifying layout and checksum.
pub fn read_store(
    dir: &Path,
) -> Result<(serde_json::Map<String, serde_json::Value>, BTreeMap<String, Tensor>), NetError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let mut meta: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| NetError::Manifest(format!("{}: {e}", manifest_path.display())))?;
    let version = meta.get("format_version").and_then(|v| v.as_u64());
    if version != Some(FORMAT_VERSION as u64) {
        return Err(NetError::Manifest(format!("unsupported format_version {version:?}")));
    }
    let table: Vec<TensorEntry> = serde_json::from_value(meta.remove("tensors").unwrap_or_default())
        .map_err(|e| NetError::Manifest(format!("tensor table: {e}")))?;
    let expected_sum = meta
        .remove("sha256")
        .and_then(|v| v.as_str().map(str::to_owned))
        .ok_or_else(|| NetError::Manifest("missing sha256".into()))?;

    let blob_path = dir.join(BLOB_FILE);
    let blob = fs::read(&blob_path).map_err(io_err(&blob_path))?;
    for e in &table {
        if e.offset.checked_add(e.length).is_none_or(|end| end > blob.len() as u64) {
            return Err(NetError::BlobLength {
                name: e.name.clone(),
                needed: e.offset.saturating_add(e.length),
                found: blob.len() as u64,
            });
        }
    }
    let actual = hex::encode(Sha256::digest(&blob));
    if actual != expected_sum.to_ascii_lowercase() {
        return Err(NetError::Checksum {
            expected: expected_sum,
            found: actual,
        });
    }

    let mut tensors = BTreeMap::new();
    for e in table {
        if e.dtype != "f32" {
            return Err(NetError::Manifest(format!("{}: unsupported dtype {:?}", e.name, e.dtype)));
        }
        let count: usize = e.shape.iter().product();
        if e.length != (count * 4) as u64 {
            return Err(NetError::Manifest(format!(
                "{}: {} bytes do not hold shape {:?}",
                e.name, e.length, e.shape
            )));
        }
        let bytes = &blob[e.offset as usize..(e.offset + e.length) as usize];
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        if tensors.insert(e.name.clone(), Tensor::new(e.shape, data)).is_some() {
            return Err(NetError::Manifest(format!("duplicate tensor {}", e.name)));
        }
    }
    Ok((meta, tensors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BTreeMap<String, Tensor> {
        let mut t = BTreeMap::new();
        t.insert("a".into(), Tensor::new(vec![2, 2], vec![1.0, -2.5, 3.25, 0.0]));
        t.insert("b".into(), Tensor::new(vec![3], vec![f32::MIN_POSITIVE, 7.0, -0.0]));
        t
    }

    #[test]
    fn round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let mut meta = serde_json::Map::new();
        meta.insert("kind".into(), "test".into());
        write_store(tmp.path(), meta, &sample()).unwrap();
        let (meta, tensors) = read_store(tmp.path()).unwrap();
        assert_eq!(meta["kind"], "test");
        assert_eq!(tensors, sample());
    }

    #[test]
    fn truncated_blob() {
        let tmp = tempfile::tempdir().unwrap();
        write_store(tmp.path(), Default::default(), &sample()).unwrap();
        let blob = tmp.path().join(BLOB_FILE);
        let bytes = fs::read(&blob).unwrap();
        fs::write(&blob, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(read_store(tmp.path()), Err(NetError::BlobLength { .. })));
    }

    #[test]
    fn flipped_byte() {
        let tmp = tempfile::tempdir().unwrap();
        write_store(tmp.path(), Default::default(), &sample()).unwrap();
        let blob = tmp.path().join(BLOB_FILE);
        let mut bytes = fs::read(&blob).unwrap();
        bytes[3] ^= 1;
        fs::write(&blob, &bytes).unwrap();
        assert!(matches!(read_store(tmp.path()), Err(NetError::Checksum { .. })));
    }
}
