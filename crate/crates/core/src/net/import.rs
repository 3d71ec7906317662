//! Converter stub for NeMo-style QuartzNet checkpoints.
//!
//! Reading `.nemo` archives or PyTorch pickles is out of scope; callers
//! export the state dict to a plain name -> tensor map (e.g. a tensor store
//! with the original names) and this module renames and transposes it into
//! the native layout. Conv kernels arrive as `[C_out, C_in / groups, K]`.

use std::collections::BTreeMap;

use super::config::ConvSpec;
use super::{NetConfig, NetError, NetworkWeights, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    /// `[C, 1, K]` -> `[K, C]`
    Depthwise,
    /// `[C_out, C_in, 1]` -> `[C_in, C_out]`
    Pointwise,
    AsIs,
}

fn bn_name(param: &str) -> &'static str {
    match param {
        "gamma" => "weight",
        "beta" => "bias",
        "mean" => "running_mean",
        _ => "running_var",
    }
}

/// Names inside one separable conv whose sub-layers start at `mconv.{base}`.
fn unit_name(prefix: &str, base: usize, has_dw: bool, rest: &str) -> Option<(String, Layout)> {
    let pw = base + has_dw as usize;
    match rest.split_once('.')? {
        ("dw", "weight") if has_dw => Some((format!("{prefix}.mconv.{base}.conv.weight"), Layout::Depthwise)),
        ("pw", "weight") => Some((format!("{prefix}.mconv.{pw}.conv.weight"), Layout::Pointwise)),
        ("bn", p) => Some((format!("{prefix}.mconv.{}.{}", pw + 1, bn_name(p)), Layout::AsIs)),
        _ => None,
    }
}

fn resolve(cfg: &NetConfig, name: &str) -> Option<(String, Layout)> {
    if let Some(rest) = name.strip_prefix("output.") {
        let layout = if rest == "weight" { Layout::Pointwise } else { Layout::AsIs };
        return Some((format!("decoder.decoder_layers.0.{rest}"), layout));
    }
    if let Some(rest) = name.strip_prefix("prologue.") {
        return unit_name("encoder.encoder.0", 0, cfg.prologue.has_depthwise(), rest);
    }
    if let Some(rest) = name.strip_prefix("epilogue.") {
        let (i, rest) = rest.split_once('.')?;
        let i: usize = i.parse().ok()?;
        let prefix = format!("encoder.encoder.{}", 1 + cfg.blocks.len() + i);
        return unit_name(&prefix, 0, cfg.epilogue.get(i)?.has_depthwise(), rest);
    }
    let rest = name.strip_prefix("blocks.")?;
    let (b, rest) = rest.split_once('.')?;
    let b: usize = b.parse().ok()?;
    let block = cfg.blocks.get(b)?;
    let prefix = format!("encoder.encoder.{}", b + 1);
    if let Some(rest) = rest.strip_prefix("res.") {
        return match rest.split_once('.')? {
            ("pw", "weight") => Some((format!("{prefix}.res.0.0.conv.weight"), Layout::Pointwise)),
            ("bn", p) => Some((format!("{prefix}.res.0.1.{}", bn_name(p)), Layout::AsIs)),
            _ => None,
        };
    }
    let rest = rest.strip_prefix("sub.")?;
    let (s, rest) = rest.split_once('.')?;
    let s: usize = s.parse().ok()?;
    let has_dw = ConvSpec::new(block.kernel, block.channels).has_depthwise();
    // every sub-block but the last is followed by activation and dropout slots
    let base = s * (2 + has_dw as usize + 2);
    unit_name(&prefix, base, has_dw, rest)
}

/// NeMo state-dict key holding the native tensor `name`, if any.
pub fn nemo_tensor_name(cfg: &NetConfig, name: &str) -> Option<String> {
    resolve(cfg, name).map(|(n, _)| n)
}

/// Builds unfolded native weights from NeMo-named tensors. Keys the network
/// does not use (preprocessor, `num_batches_tracked`) are ignored.
pub fn convert_nemo_tensors(cfg: &NetConfig, source: &BTreeMap<String, Tensor>) -> Result<NetworkWeights, NetError> {
    cfg.validate()?;
    let mut out = NetworkWeights::default();
    for (name, shape) in cfg.expected_tensors(false) {
        let (key, layout) = resolve(cfg, &name).expect("every native tensor has a NeMo name");
        let t = source.get(&key).ok_or_else(|| NetError::MissingTensor(key.clone()))?;
        let expected_src = match layout {
            Layout::Depthwise => vec![shape[1], 1, shape[0]],
            Layout::Pointwise => vec![shape[1], shape[0], 1],
            Layout::AsIs => shape.clone(),
        };
        if t.shape != expected_src {
            return Err(NetError::ShapeMismatch {
                name: key,
                expected: expected_src,
                found: t.shape.clone(),
            });
        }
        let data = match layout {
            Layout::AsIs => t.data.clone(),
            // both are a plain 2-D transpose of the non-unit dimensions
            Layout::Depthwise | Layout::Pointwise => {
                let (rows, cols) = (shape[1], shape[0]);
                let mut d = vec![0.0; t.len()];
                for r in 0..rows {
                    for c in 0..cols {
                        d[c * rows + r] = t.data[r * cols + c];
                    }
                }
                d
            }
        };
        out.insert(name, Tensor::new(shape, data));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_follow_nemo_layout() {
        let cfg = NetConfig::quartznet15x5(28);
        let n = |s: &str| nemo_tensor_name(&cfg, s).unwrap();
        assert_eq!(n("prologue.dw.weight"), "encoder.encoder.0.mconv.0.conv.weight");
        assert_eq!(n("prologue.bn.var"), "encoder.encoder.0.mconv.2.running_var");
        assert_eq!(n("blocks.0.sub.1.pw.weight"), "encoder.encoder.1.mconv.6.conv.weight");
        assert_eq!(n("blocks.14.sub.4.bn.gamma"), "encoder.encoder.15.mconv.22.weight");
        assert_eq!(n("blocks.3.res.pw.weight"), "encoder.encoder.4.res.0.0.conv.weight");
        assert_eq!(n("blocks.3.res.bn.beta"), "encoder.encoder.4.res.0.1.bias");
        assert_eq!(n("epilogue.0.dw.weight"), "encoder.encoder.16.mconv.0.conv.weight");
        assert_eq!(n("epilogue.1.pw.weight"), "encoder.encoder.17.mconv.0.conv.weight");
        assert_eq!(n("epilogue.1.bn.mean"), "encoder.encoder.17.mconv.1.running_mean");
        assert_eq!(n("output.bias"), "decoder.decoder_layers.0.bias");
        assert_eq!(nemo_tensor_name(&cfg, "blocks.15.sub.0.pw.weight"), None);
    }

    #[test]
    fn round_trip_through_nemo_layout() {
        let cfg = NetConfig::quartznet5x5(4);
        let native = NetworkWeights::random(&cfg, 8);
        let mut nemo = BTreeMap::new();
        for (name, t) in &native.tensors {
            let (key, layout) = resolve(&cfg, name).unwrap();
            let exported = match layout {
                Layout::AsIs => t.clone(),
                Layout::Depthwise | Layout::Pointwise => {
                    let (rows, cols) = (t.shape[0], t.shape[1]);
                    let mut d = vec![0.0; t.len()];
                    for r in 0..rows {
                        for c in 0..cols {
                            d[c * rows + r] = t.data[r * cols + c];
                        }
                    }
                    let shape = if layout == Layout::Depthwise { vec![cols, 1, rows] } else { vec![cols, rows, 1] };
                    Tensor::new(shape, d)
                }
            };
            nemo.insert(key, exported);
        }
        nemo.insert("encoder.encoder.0.mconv.2.num_batches_tracked".into(), Tensor::zeros(vec![1]));
        assert_eq!(convert_nemo_tensors(&cfg, &nemo).unwrap(), native);

        nemo.remove("decoder.decoder_layers.0.weight");
        assert!(matches!(convert_nemo_tensors(&cfg, &nemo), Err(NetError::MissingTensor(k)) if k.starts_with("decoder")));
    }
}
