//! QuartzNet forward inference over log-mel features.
//!
//! Activations are kept channel-major (`C x T`) inside the network so that
//! depthwise convolutions run over contiguous time rows and pointwise
//! convolutions are a single GEMM per layer.

use std::path::PathBuf;

use thiserror::Error;

mod adapt;
mod config;
mod forward;
mod import;
mod model;
mod store;
mod stream;
mod weights;

pub use adapt::{adapt_alphabet, AdaptMode, AdaptPolicy, NewRowInit};
pub use config::{layer_params, param_count, BlockSpec, ConvSpec, NetConfig, ReceptiveField};
pub use forward::{forward, forward_scores};
pub use import::{convert_nemo_tensors, nemo_tensor_name};
pub use model::{load_logits, load_weights, save_logits, Model};
pub use store::{read_store, write_store, Tensor, TensorEntry, BLOB_FILE, FORMAT_VERSION, MANIFEST_FILE};
pub use stream::{chunk_rows, forward_chunked, forward_streaming, ChunkSpan, StreamPlan};
pub use weights::{fold_batchnorm, NetworkWeights};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad manifest: {0}")]
    Manifest(String),
    #[error("tensor {name} needs bytes up to {needed} but the blob has {found}")]
    BlobLength { name: String, needed: u64, found: u64 },
    #[error("blob checksum mismatch: manifest says {expected}, blob hashes to {found}")]
    Checksum { expected: String, found: String },
    #[error("missing tensor {0}")]
    MissingTensor(String),
    #[error("unexpected tensor {0}")]
    UnexpectedTensor(String),
    #[error("tensor {name} has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("{name}[{index}] = {value} is not a positive variance")]
    InvalidVariance { name: String, index: usize, value: f32 },
    #[error("no batch-norm tensors to fold (weights already folded)")]
    BatchNormAbsent,
    #[error("features have {found} bins, network expects {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("input has no frames")]
    EmptyInput,
    #[error("chunk of {chunk_seconds} s is shorter than one output frame ({min_seconds} s)")]
    ChunkTooShort { chunk_seconds: f64, min_seconds: f64 },
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("alphabet adaptation: {0}")]
    Adapt(String),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
    #[error(transparent)]
    Alphabet(#[from] crate::alphabet::AlphabetError),
}
