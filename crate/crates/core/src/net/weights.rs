use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::BN_PARAMS;
use super::{NetConfig, NetError, Tensor};

/// Named tensors for one network. Either every conv carries batch-norm
/// statistics (`*.bn.*`) or every conv carries a folded bias (`*.pw.bias`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkWeights {
    pub tensors: BTreeMap<String, Tensor>,
}

impl NetworkWeights {
    pub fn new(tensors: BTreeMap<String, Tensor>) -> Self {
        Self { tensors }
    }

    pub fn get(&self, name: &str) -> Result<&Tensor, NetError> {
        self.tensors.get(name).ok_or_else(|| NetError::MissingTensor(name.to_string()))
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.tensors.insert(name.into(), tensor);
    }

    pub fn is_folded(&self) -> bool {
        self.tensors.contains_key("prologue.pw.bias")
    }

    pub fn total_values(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    /// Seeded random weights with O(1) activations: kernels uniform with
    /// standard deviation 1/sqrt(fan-in), batch-norm statistics near identity.
    pub fn random(cfg: &NetConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = BTreeMap::new();
        for (name, shape) in cfg.expected_tensors(false) {
            let n: usize = shape.iter().product();
            let uniform = |rng: &mut ChaCha8Rng, lo: f32, hi: f32| (0..n).map(|_| rng.gen_range(lo..hi)).collect();
            let data: Vec<f32> = if name.ends_with(".bn.gamma") {
                uniform(&mut rng, 0.8, 1.2)
            } else if name.ends_with(".bn.beta") || name.ends_with(".bn.mean") || name.ends_with("output.bias") {
                uniform(&mut rng, -0.1, 0.1)
            } else if name.ends_with(".bn.var") {
                uniform(&mut rng, 0.5, 1.5)
            } else {
                // dw [K, C] has fan-in K, pw and output [C_in, C_out] fan-in C_in
                let bound = (3.0 / shape[0] as f32).sqrt();
                uniform(&mut rng, -bound, bound)
            };
            tensors.insert(name, Tensor::new(shape, data));
        }
        Self { tensors }
    }

    /// Checks that exactly the tensors the config needs are present, with
    /// their shapes, and that every variance is positive.
    pub fn validate(&self, cfg: &NetConfig) -> Result<(), NetError> {
        cfg.validate()?;
        let expected = cfg.expected_tensors(self.is_folded());
        for (name, shape) in &expected {
            let t = self.get(name)?;
            if &t.shape != shape {
                return Err(NetError::ShapeMismatch {
                    name: name.clone(),
                    expected: shape.clone(),
                    found: t.shape.clone(),
                });
            }
            if name.ends_with(".bn.var") {
                check_variance(name, t)?;
            }
        }
        if self.tensors.len() != expected.len() {
            let known: std::collections::HashSet<&str> = expected.iter().map(|(n, _)| n.as_str()).collect();
            let extra = self.tensors.keys().find(|k| !known.contains(k.as_str())).unwrap();
            return Err(NetError::UnexpectedTensor(extra.clone()));
        }
        Ok(())
    }
}

fn check_variance(name: &str, t: &Tensor) -> Result<(), NetError> {
    match t.data.iter().position(|v| !(*v > 0.0)) {
        Some(index) => Err(NetError::InvalidVariance {
            name: name.to_string(),
            index,
            value: t.data[index],
        }),
        None => Ok(()),
    }
}

/// Folds every batch norm into the pointwise kernel before it:
/// `W'[i][o] = W[i][o] * s[o]`, `bias[o] = beta[o] - mean[o] * s[o]` with
/// `s = gamma / sqrt(var + eps)`.
pub fn fold_batchnorm(cfg: &NetConfig, weights: &NetworkWeights) -> Result<NetworkWeights, NetError> {
    if weights.is_folded() {
        return Err(NetError::BatchNormAbsent);
    }
    weights.validate(cfg)?;
    let mut out = weights.clone();
    let prefixes: Vec<String> = weights
        .tensors
        .keys()
        .filter_map(|k| k.strip_suffix(".bn.gamma").map(str::to_owned))
        .collect();
    for prefix in prefixes {
        let [gamma, beta, mean, var] = BN_PARAMS.map(|p| out.tensors.remove(&format!("{prefix}.bn.{p}")).unwrap());
        let scale: Vec<f32> = gamma
            .data
            .iter()
            .zip(&var.data)
            .map(|(g, v)| g / (v + cfg.bn_eps).sqrt())
            .collect();
        let w = out.tensors.get_mut(&format!("{prefix}.pw.weight")).unwrap();
        let c_out = scale.len();
        for row in w.data.chunks_mut(c_out) {
            for (x, s) in row.iter_mut().zip(&scale) {
                *x *= s;
            }
        }
        let bias = beta
            .data
            .iter()
            .zip(&mean.data)
            .zip(&scale)
            .map(|((b, m), s)| b - m * s)
            .collect();
        out.insert(format!("{prefix}.pw.bias"), Tensor::new(vec![c_out], bias));
    }
    Ok(out)
}
