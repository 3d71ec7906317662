use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::ctc::LogitMatrix;
use crate::features::FeatureConfig;
use crate::AlphabetSpec;

use super::{read_store, write_store, NetConfig, NetError, NetworkWeights, Tensor, MANIFEST_FILE};

/// Everything needed to turn audio into logits: topology, weights, the
/// feature front end the weights expect and the output alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub name: String,
    pub config: NetConfig,
    pub features: FeatureConfig,
    pub alphabet: AlphabetSpec,
    pub weights: NetworkWeights,
}

/// Accepts the store directory or its `manifest.json`.
fn store_dir(path: &Path) -> PathBuf {
    if path.file_name().is_some_and(|n| n == MANIFEST_FILE) {
        path.parent().unwrap_or(Path::new(".")).to_path_buf()
    } else {
        path.to_path_buf()
    }
}

fn field<T: serde::de::DeserializeOwned>(meta: &Map<String, Value>, key: &str) -> Result<T, NetError> {
    let v = meta.get(key).ok_or_else(|| NetError::Manifest(format!("missing field {key}")))?;
    serde_json::from_value(v.clone()).map_err(|e| NetError::Manifest(format!("field {key}: {e}")))
}

fn check_kind(meta: &Map<String, Value>, kind: &str) -> Result<(), NetError> {
    let found: String = field(meta, "kind")?;
    if found != kind {
        return Err(NetError::Manifest(format!("expected a {kind} store, found {found:?}")));
    }
    Ok(())
}

impl Model {
    pub fn random(name: &str, config: NetConfig, features: FeatureConfig, alphabet: AlphabetSpec, seed: u64) -> Self {
        let weights = NetworkWeights::random(&config, seed);
        Self {
            name: name.to_string(),
            config,
            features,
            alphabet,
            weights,
        }
    }

    /// Cross-checks config, weights, features and alphabet.
    pub fn validate(&self) -> Result<(), NetError> {
        self.weights.validate(&self.config)?;
        self.features.validate()?;
        if self.features.mel_bins != self.config.input_features {
            return Err(NetError::InvalidConfig(format!(
                "{} mel bins feed a network expecting {} features",
                self.features.mel_bins, self.config.input_features
            )));
        }
        if self.alphabet.output_width() != self.config.output_width() {
            return Err(NetError::InvalidConfig(format!(
                "alphabet of {} symbols does not fit {} outputs",
                self.alphabet.len(),
                self.config.output_width()
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NetError> {
        let (meta, tensors) = read_store(&store_dir(path))?;
        check_kind(&meta, "model")?;
        let model = Self {
            name: field(&meta, "model_name")?,
            config: field(&meta, "config")?,
            features: field(&meta, "features")?,
            alphabet: field(&meta, "alphabet")?,
            weights: NetworkWeights::new(tensors),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, dir: &Path) -> Result<(), NetError> {
        self.validate()?;
        let mut meta = Map::new();
        meta.insert("kind".into(), "model".into());
        meta.insert("model_name".into(), self.name.clone().into());
        meta.insert("config".into(), serde_json::to_value(&self.config).unwrap());
        meta.insert("features".into(), serde_json::to_value(&self.features).unwrap());
        meta.insert("alphabet".into(), serde_json::to_value(&self.alphabet).unwrap());
        meta.insert("folded".into(), self.weights.is_folded().into());
        write_store(dir, meta, &self.weights.tensors)
    }
}

/// Loads a model store (directory or its manifest file), validating every
/// tensor against the embedded config.
pub fn load_weights(path: &Path) -> Result<Model, NetError> {
    Model::load(path)
}

/// Stores a logit matrix as a single `logits` tensor `[T, V+1]`.
pub fn save_logits(dir: &Path, logits: &LogitMatrix, alphabet: &AlphabetSpec) -> Result<(), NetError> {
    if logits.width() != alphabet.output_width() {
        return Err(NetError::WidthMismatch {
            expected: alphabet.output_width(),
            found: logits.width(),
        });
    }
    let mut meta = Map::new();
    meta.insert("kind".into(), "logits".into());
    meta.insert("alphabet".into(), serde_json::to_value(alphabet).unwrap());
    let mut tensors = BTreeMap::new();
    tensors.insert(
        "logits".to_string(),
        Tensor::new(vec![logits.frames(), logits.width()], logits.as_slice().to_vec()),
    );
    write_store(dir, meta, &tensors)
}

pub fn load_logits(path: &Path) -> Result<(LogitMatrix, AlphabetSpec), NetError> {
    let (meta, mut tensors) = read_store(&store_dir(path))?;
    check_kind(&meta, "logits")?;
    let alphabet: AlphabetSpec = field(&meta, "alphabet")?;
    let t = tensors
        .remove("logits")
        .ok_or_else(|| NetError::MissingTensor("logits".into()))?;
    let width = alphabet.output_width();
    if t.shape.len() != 2 || t.shape[1] != width {
        return Err(NetError::ShapeMismatch {
            name: "logits".into(),
            expected: vec![t.shape.first().copied().unwrap_or(0), width],
            found: t.shape,
        });
    }
    Ok((LogitMatrix::new(t.data, t.shape[0], width), alphabet))
}
