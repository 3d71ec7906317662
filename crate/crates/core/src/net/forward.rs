use crate::ctc::LogitMatrix;
use crate::features::FeatureMatrix;

use super::config::{BlockSpec, ConvSpec};
use super::{NetConfig, NetError, NetworkWeights, Tensor};

/// Channel-major activations: `channels` rows of `frames` values.
struct Act {
    data: Vec<f32>,
    channels: usize,
    frames: usize,
}

impl Act {
    fn row(&self, c: usize) -> &[f32] {
        &self.data[c * self.frames..(c + 1) * self.frames]
    }
}

fn transpose(data: &[f32], rows: usize, cols: usize) -> Vec<f32> {
    let mut out = vec![0.0; data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

/// Per-channel temporal convolution with zero "same" padding. Output frame
/// `t` is centered on input frame `stride * t`.
fn depthwise(x: &Act, w: &Tensor, stride: usize, dilation: usize) -> Act {
    let kernel = w.shape[0];
    let half = (kernel - 1) / 2;
    let t_in = x.frames;
    let t_out = t_in.div_ceil(stride);
    let mut data = vec![0.0f32; x.channels * t_out];
    for (c, y) in data.chunks_mut(t_out).enumerate() {
        let xr = x.row(c);
        for k in 0..kernel {
            let wk = w.data[k * x.channels + c];
            let off = dilation as isize * (k as isize - half as isize);
            // first and one-past-last t with 0 <= stride*t + off < t_in
            let lo = if off < 0 { ((-off) as usize).div_ceil(stride) } else { 0 };
            let hi = if (t_in as isize) > off { ((t_in as isize - off) as usize).div_ceil(stride).min(t_out) } else { 0 };
            if lo >= hi {
                continue;
            }
            if stride == 1 {
                let start = (lo as isize + off) as usize;
                for (yt, xt) in y[lo..hi].iter_mut().zip(&xr[start..start + hi - lo]) {
                    *yt += wk * xt;
                }
            } else {
                for (t, yt) in y.iter_mut().enumerate().take(hi).skip(lo) {
                    *yt += wk * xr[((stride * t) as isize + off) as usize];
                }
            }
        }
    }
    Act {
        data,
        channels: x.channels,
        frames: t_out,
    }
}

/// `Y = W^T X` for `W` stored `[C_in, C_out]`.
fn pointwise(x: &Act, w: &Tensor) -> Act {
    let (c_in, c_out) = (w.shape[0], w.shape[1]);
    debug_assert_eq!(c_in, x.channels);
    let n = x.frames;
    let mut data = vec![0.0f32; c_out * n];
    // SAFETY: the strides describe the buffers exactly: A is c_out x c_in
    // read column-major out of the row-major [c_in, c_out] kernel, B and C are
    // row-major with n columns, and all three slices have the implied length.
    unsafe {
        matrixmultiply::sgemm(
            c_out,
            c_in,
            n,
            1.0,
            w.data.as_ptr(),
            1,
            c_out as isize,
            x.data.as_ptr(),
            n as isize,
            1,
            0.0,
            data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    Act {
        data,
        channels: c_out,
        frames: n,
    }
}

fn add_bias(y: &mut Act, bias: &[f32]) {
    for (row, b) in y.data.chunks_mut(y.frames).zip(bias) {
        row.iter_mut().for_each(|v| *v += b);
    }
}

fn batch_norm(y: &mut Act, weights: &NetworkWeights, prefix: &str, eps: f32) -> Result<(), NetError> {
    let p = |name: &str| weights.get(&format!("{prefix}.bn.{name}")).map(|t| t.data.as_slice());
    let (gamma, beta, mean, var) = (p("gamma")?, p("beta")?, p("mean")?, p("var")?);
    for (c, row) in y.data.chunks_mut(y.frames).enumerate() {
        let scale = gamma[c] / (var[c] + eps).sqrt();
        for v in row {
            *v = (*v - mean[c]) * scale + beta[c];
        }
    }
    Ok(())
}

fn relu(y: &mut Act) {
    y.data.iter_mut().for_each(|v| *v = v.max(0.0));
}

struct Runner<'a> {
    weights: &'a NetworkWeights,
    folded: bool,
    eps: f32,
}

impl Runner<'_> {
    /// Separable conv plus batch norm (or folded bias), without activation.
    fn unit(&self, x: &Act, prefix: &str, spec: &ConvSpec) -> Result<Act, NetError> {
        let mixed_input;
        let input = if spec.has_depthwise() {
            mixed_input = depthwise(x, self.weights.get(&format!("{prefix}.dw.weight"))?, spec.stride, spec.dilation);
            &mixed_input
        } else {
            x
        };
        let mut y = pointwise(input, self.weights.get(&format!("{prefix}.pw.weight"))?);
        if self.folded {
            add_bias(&mut y, &self.weights.get(&format!("{prefix}.pw.bias"))?.data);
        } else {
            batch_norm(&mut y, self.weights, prefix, self.eps)?;
        }
        Ok(y)
    }

    fn block(&self, x: Act, b: usize, block: &BlockSpec) -> Result<Act, NetError> {
        let spec = ConvSpec {
            kernel: block.kernel,
            channels: block.channels,
            stride: 1,
            dilation: block.dilation,
        };
        let mut y = self.unit(&x, &format!("blocks.{b}.sub.0"), &spec)?;
        for s in 1..block.repeat {
            relu(&mut y);
            y = self.unit(&y, &format!("blocks.{b}.sub.{s}"), &spec)?;
        }
        if block.residual {
            let skip = self.unit(&x, &format!("blocks.{b}.res"), &ConvSpec::new(1, block.channels))?;
            y.data.iter_mut().zip(&skip.data).for_each(|(v, s)| *v += s);
        }
        relu(&mut y);
        Ok(y)
    }
}

/// Raw output scores (before log-softmax), row-major `T' x (V+1)`.
pub(crate) fn scores(
    cfg: &NetConfig,
    weights: &NetworkWeights,
    features: &[f32],
    frames: usize,
) -> Result<Vec<f32>, NetError> {
    let runner = Runner {
        weights,
        folded: weights.is_folded(),
        eps: cfg.bn_eps,
    };
    let x = Act {
        data: transpose(features, frames, cfg.input_features),
        channels: cfg.input_features,
        frames,
    };
    let mut y = runner.unit(&x, "prologue", &cfg.prologue)?;
    relu(&mut y);
    for (b, block) in cfg.blocks.iter().enumerate() {
        y = runner.block(y, b, block)?;
    }
    for (i, spec) in cfg.epilogue.iter().enumerate() {
        y = runner.unit(&y, &format!("epilogue.{i}"), spec)?;
        relu(&mut y);
    }
    let mut out = pointwise(&y, weights.get("output.weight")?);
    add_bias(&mut out, &weights.get("output.bias")?.data);
    Ok(transpose(&out.data, out.channels, out.frames))
}

pub(crate) fn check_input(cfg: &NetConfig, features: &FeatureMatrix) -> Result<(), NetError> {
    if features.bins() != cfg.input_features {
        return Err(NetError::WidthMismatch {
            expected: cfg.input_features,
            found: features.bins(),
        });
    }
    if features.frames() == 0 {
        return Err(NetError::EmptyInput);
    }
    Ok(())
}

/// Output-layer activations before log-softmax, one row per output frame.
/// These are the per-symbol logits that alphabet surgery copies verbatim.
pub fn forward_scores(
    cfg: &NetConfig,
    weights: &NetworkWeights,
    features: &FeatureMatrix,
) -> Result<LogitMatrix, NetError> {
    check_input(cfg, features)?;
    weights.validate(cfg)?;
    let data = scores(cfg, weights, features.as_slice(), features.frames())?;
    let frames = data.len() / cfg.output_width();
    Ok(LogitMatrix::new(data, frames, cfg.output_width()))
}

/// Log-probabilities for each output frame: `ceil(T / stride)` rows of
/// `V + 1` columns, blank last.
pub fn forward(cfg: &NetConfig, weights: &NetworkWeights, features: &FeatureMatrix) -> Result<LogitMatrix, NetError> {
    check_input(cfg, features)?;
    weights.validate(cfg)?;
    let data = scores(cfg, weights, features.as_slice(), features.frames())?;
    let frames = data.len() / cfg.output_width();
    Ok(LogitMatrix::from_scores(data, frames, cfg.output_width()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(rows: &[&[f32]]) -> Act {
        Act {
            data: rows.concat(),
            channels: rows.len(),
            frames: rows[0].len(),
        }
    }

    /// Direct definition, used as the oracle for the sliced loops.
    fn naive_depthwise(x: &Act, w: &Tensor, stride: usize, dilation: usize) -> Vec<f32> {
        let k = w.shape[0];
        let t_out = x.frames.div_ceil(stride);
        let mut out = vec![0.0; x.channels * t_out];
        for c in 0..x.channels {
            for t in 0..t_out {
                let mut acc = 0.0;
                for j in 0..k {
                    let i = (stride * t) as isize + dilation as isize * (j as isize - (k as isize - 1) / 2);
                    if i >= 0 && (i as usize) < x.frames {
                        acc += w.data[j * x.channels + c] * x.row(c)[i as usize];
                    }
                }
                out[c * t_out + t] = acc;
            }
        }
        out
    }

    #[test]
    fn depthwise_matches_definition() {
        let x = act(&[&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], &[0.5, -1.0, 0.0, 2.0, 1.0, -3.0, 4.0]]);
        for (k, stride, dilation) in [(3, 1, 1), (3, 2, 1), (5, 1, 2), (5, 2, 3), (9, 2, 1), (1, 2, 1)] {
            let w = Tensor::new(vec![k, 2], (0..2 * k).map(|i| (i as f32 * 0.37).sin()).collect());
            let got = depthwise(&x, &w, stride, dilation);
            let want = naive_depthwise(&x, &w, stride, dilation);
            for (a, b) in got.data.iter().zip(&want) {
                assert!((a - b).abs() < 1e-6, "k{k} s{stride} d{dilation}: {:?} vs {want:?}", got.data);
            }
        }
    }

    #[test]
    fn stride_two_centers_on_even_frames() {
        let x = act(&[&[1.0, 2.0, 3.0, 4.0, 5.0]]);
        let w = Tensor::new(vec![3, 1], vec![0.0, 1.0, 0.0]);
        assert_eq!(depthwise(&x, &w, 2, 1).data, [1.0, 3.0, 5.0]);
    }

    #[test]
    fn pointwise_hand_values() {
        let x = act(&[&[1.0, 2.0], &[3.0, 4.0]]);
        // W[i][o]: out0 = x0 + x1, out1 = 2*x0, out2 = -x1
        let w = Tensor::new(vec![2, 3], vec![1.0, 2.0, 0.0, 1.0, 0.0, -1.0]);
        assert_eq!(pointwise(&x, &w).data, [4.0, 6.0, 2.0, 4.0, -3.0, -4.0]);
    }
}
