use serde::{Deserialize, Serialize};

use super::NetError;

fn one() -> usize {
    1
}

/// One convolution: depthwise over time (skipped for kernel 1, stride 1)
/// followed by a pointwise channel mix, batch norm and ReLU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub kernel: usize,
    pub channels: usize,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default = "one")]
    pub dilation: usize,
}

impl ConvSpec {
    pub fn new(kernel: usize, channels: usize) -> Self {
        Self {
            kernel,
            channels,
            stride: 1,
            dilation: 1,
        }
    }

    pub fn has_depthwise(&self) -> bool {
        self.kernel > 1 || self.stride > 1
    }

    /// Frames of context on each side, in this layer's input frames.
    pub fn half_width(&self) -> usize {
        self.dilation * (self.kernel - 1) / 2
    }
}

/// `repeat` separable sub-blocks; the last one's ReLU comes after the
/// residual projection is added.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub repeat: usize,
    pub kernel: usize,
    pub channels: usize,
    #[serde(default = "one")]
    pub dilation: usize,
    pub residual: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub input_features: usize,
    pub prologue: ConvSpec,
    pub blocks: Vec<BlockSpec>,
    pub epilogue: Vec<ConvSpec>,
    /// Alphabet size without the blank; the output layer has `vocab_size + 1` columns.
    pub vocab_size: usize,
    pub bn_eps: f32,
}

impl NetConfig {
    /// QuartzNet 15x5: five groups of three blocks, five sub-blocks each.
    pub fn quartznet15x5(vocab_size: usize) -> Self {
        let groups = [(33, 256), (39, 256), (51, 512), (63, 512), (75, 512)];
        Self::quartznet(&groups, 3, 5, vocab_size)
    }

    /// QuartzNet 5x5: one block per group.
    pub fn quartznet5x5(vocab_size: usize) -> Self {
        let groups = [(33, 256), (39, 256), (51, 512), (63, 512), (75, 512)];
        Self::quartznet(&groups, 1, 5, vocab_size)
    }

    fn quartznet(groups: &[(usize, usize)], blocks_per_group: usize, repeat: usize, vocab_size: usize) -> Self {
        let blocks = groups
            .iter()
            .flat_map(|&(kernel, channels)| {
                std::iter::repeat_n(
                    BlockSpec {
                        repeat,
                        kernel,
                        channels,
                        dilation: 1,
                        residual: true,
                    },
                    blocks_per_group,
                )
            })
            .collect();
        Self {
            input_features: 64,
            prologue: ConvSpec {
                kernel: 33,
                channels: 256,
                stride: 2,
                dilation: 1,
            },
            blocks,
            epilogue: vec![
                ConvSpec {
                    kernel: 87,
                    channels: 512,
                    stride: 1,
                    dilation: 2,
                },
                ConvSpec::new(1, 1024),
            ],
            vocab_size,
            bn_eps: 1e-3,
        }
    }

    pub fn preset(name: &str, vocab_size: usize) -> Option<Self> {
        match name {
            "quartznet15x5" => Some(Self::quartznet15x5(vocab_size)),
            "quartznet5x5" => Some(Self::quartznet5x5(vocab_size)),
            _ => None,
        }
    }

    pub fn output_width(&self) -> usize {
        self.vocab_size + 1
    }

    /// Channels entering the output layer.
    pub fn final_channels(&self) -> usize {
        self.epilogue
            .last()
            .map(|c| c.channels)
            .or_else(|| self.blocks.last().map(|b| b.channels))
            .unwrap_or(self.prologue.channels)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |m: String| Err(NetError::InvalidConfig(m));
        let convs = std::iter::once(&self.prologue).chain(&self.epilogue);
        for c in convs {
            if c.kernel == 0 || c.kernel % 2 == 0 || c.channels == 0 || c.dilation == 0 || c.stride == 0 {
                return bad(format!("conv {c:?} needs an odd kernel and nonzero sizes"));
            }
        }
        if self.epilogue.iter().any(|c| c.stride != 1) {
            return bad("only the prologue may be strided".into());
        }
        for b in &self.blocks {
            if b.repeat == 0 || b.kernel % 2 == 0 || b.channels == 0 || b.dilation == 0 {
                return bad(format!("block {b:?} needs repeat >= 1, an odd kernel and channels"));
            }
        }
        if self.input_features == 0 || self.vocab_size == 0 {
            return bad("input_features and vocab_size must be positive".into());
        }
        if !(self.bn_eps > 0.0) {
            return bad("bn_eps must be positive".into());
        }
        Ok(())
    }

    /// Every tensor the forward pass reads, with its shape. Folded weights
    /// carry a pointwise bias in place of the batch-norm statistics.
    pub fn expected_tensors(&self, folded: bool) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let unit = |out: &mut Vec<(String, Vec<usize>)>, prefix: &str, c_in: usize, c: &ConvSpec| {
            if c.has_depthwise() {
                out.push((format!("{prefix}.dw.weight"), vec![c.kernel, c_in]));
            }
            out.push((format!("{prefix}.pw.weight"), vec![c_in, c.channels]));
            if folded {
                out.push((format!("{prefix}.pw.bias"), vec![c.channels]));
            } else {
                for p in BN_PARAMS {
                    out.push((format!("{prefix}.bn.{p}"), vec![c.channels]));
                }
            }
        };
        unit(&mut out, "prologue", self.input_features, &self.prologue);
        let mut c_in = self.prologue.channels;
        for (b, block) in self.blocks.iter().enumerate() {
            let block_in = c_in;
            for s in 0..block.repeat {
                let spec = ConvSpec {
                    kernel: block.kernel,
                    channels: block.channels,
                    stride: 1,
                    dilation: block.dilation,
                };
                unit(&mut out, &format!("blocks.{b}.sub.{s}"), c_in, &spec);
                c_in = block.channels;
            }
            if block.residual {
                unit(&mut out, &format!("blocks.{b}.res"), block_in, &ConvSpec::new(1, block.channels));
            }
        }
        for (i, c) in self.epilogue.iter().enumerate() {
            unit(&mut out, &format!("epilogue.{i}"), c_in, c);
            c_in = c.channels;
        }
        out.push(("output.weight".into(), vec![c_in, self.output_width()]));
        out.push(("output.bias".into(), vec![self.output_width()]));
        out
    }

    /// Half the receptive field, in network output frames: how far context
    /// reaches through the stride-1 layers after the prologue.
    pub fn output_half_context(&self) -> usize {
        let blocks: usize = self
            .blocks
            .iter()
            .map(|b| b.repeat * b.dilation * (b.kernel - 1) / 2)
            .sum();
        blocks + self.epilogue.iter().map(ConvSpec::half_width).sum::<usize>()
    }

    pub fn receptive_field(&self) -> ReceptiveField {
        let half_out = self.output_half_context();
        let stride = self.prologue.stride;
        let prologue_half = self.prologue.half_width();
        ReceptiveField {
            output_half_context: half_out,
            prologue_half_width: prologue_half,
            stride,
            input_frames: stride * 2 * half_out + 2 * prologue_half + 1,
        }
    }
}

pub(crate) const BN_PARAMS: [&str; 4] = ["gamma", "beta", "mean", "var"];

/// Span of input feature frames that influences one output frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReceptiveField {
    pub output_half_context: usize,
    pub prologue_half_width: usize,
    pub stride: usize,
    pub input_frames: usize,
}

impl ReceptiveField {
    pub fn seconds(&self, hop_seconds: f64) -> f64 {
        self.input_frames as f64 * hop_seconds
    }
}

/// Trainable parameters of one layer: kernel, plus batch-norm scale and
/// shift, plus bias.
pub fn layer_params(c_in: usize, c_out: usize, kernel: usize, batch_norm: bool, bias: bool) -> usize {
    c_in * c_out * kernel + if batch_norm { 2 * c_out } else { 0 } + if bias { c_out } else { 0 }
}

/// Trainable parameters: conv kernels, batch-norm affine pairs and the
/// output bias. Running statistics are not counted.
pub fn param_count(cfg: &NetConfig) -> usize {
    cfg.expected_tensors(false)
        .iter()
        .filter(|(name, _)| !name.ends_with(".bn.mean") && !name.ends_with(".bn.var"))
        .map(|(_, shape)| shape.iter().product::<usize>())
        .sum()
}
