use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::AlphabetSpec;

use super::{NetConfig, NetError, NetworkWeights, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptMode {
    /// Every source symbol is kept; new symbols may be added.
    Extend,
    /// Symbols may be dropped; no new symbols.
    Shrink,
}

/// How output columns for new symbols are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NewRowInit {
    /// Zero weights and bias: old symbols keep their exact scores.
    #[default]
    Zero,
    /// Weights and bias uniform in `[-scale, scale)`.
    Uniform { scale: f32, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptPolicy {
    pub mode: AdaptMode,
    pub init: NewRowInit,
    /// `(target symbol, source symbol)`; `None` marks a new symbol.
    pub mapping: Vec<(String, Option<String>)>,
}

impl AdaptPolicy {
    /// Maps each target symbol to the same symbol in `src` when it exists,
    /// otherwise marks it new.
    pub fn by_symbol(mode: AdaptMode, init: NewRowInit, src: &AlphabetSpec, tgt: &AlphabetSpec) -> Self {
        let mapping = tgt
            .symbols()
            .iter()
            .map(|s| (s.clone(), src.index_of(s).map(|_| s.clone())))
            .collect();
        Self { mode, init, mapping }
    }
}

/// Rebuilds the output layer for `tgt`. Columns of mapped symbols are
/// copied from their source columns, the blank stays last and every other
/// tensor is left as is.
pub fn adapt_alphabet(
    cfg: &NetConfig,
    weights: &NetworkWeights,
    src: &AlphabetSpec,
    tgt: &AlphabetSpec,
    policy: &AdaptPolicy,
) -> Result<(NetConfig, NetworkWeights), NetError> {
    let fail = |m: String| Err(NetError::Adapt(m));
    if cfg.output_width() != src.output_width() {
        return fail(format!(
            "network has {} outputs but the source alphabet needs {}",
            cfg.output_width(),
            src.output_width()
        ));
    }
    weights.validate(cfg)?;

    // source column for each target column (blank last)
    let mut sources: Vec<Option<Option<usize>>> = vec![None; tgt.len()];
    for (target, source) in &policy.mapping {
        let Some(t) = tgt.index_of(target) else {
            return fail(format!("mapping target {target:?} is not in the target alphabet"));
        };
        if sources[t].is_some() {
            return fail(format!("target {target:?} is mapped more than once"));
        }
        let s = match source {
            Some(s) => match src.index_of(s) {
                Some(i) => Some(i),
                None => return fail(format!("source symbol {s:?} is not in the source alphabet")),
            },
            None => None,
        };
        sources[t] = Some(s);
    }
    if let Some(t) = sources.iter().position(Option::is_none) {
        return fail(format!("target symbol {:?} has no mapping", tgt.symbols()[t]));
    }
    let mut columns: Vec<Option<usize>> = sources.into_iter().map(Option::unwrap).collect();
    columns.push(Some(src.blank_index()));

    match policy.mode {
        AdaptMode::Extend => {
            let used: HashSet<usize> = columns.iter().flatten().copied().collect();
            if let Some(dropped) = (0..src.len()).find(|i| !used.contains(i)) {
                return fail(format!("extend would drop {:?}", src.symbols()[dropped]));
            }
        }
        AdaptMode::Shrink => {
            if let Some(t) = columns.iter().position(Option::is_none) {
                return fail(format!("shrink cannot add new symbol {:?}", tgt.symbols()[t]));
            }
        }
    }

    let weight = weights.get("output.weight")?;
    let bias = weights.get("output.bias")?;
    let (c_in, old_width) = (weight.shape[0], weight.shape[1]);
    let new_width = columns.len();
    let mut rng = match policy.init {
        NewRowInit::Uniform { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        NewRowInit::Zero => None,
    };
    let mut fresh = || match (&mut rng, policy.init) {
        (Some(rng), NewRowInit::Uniform { scale, .. }) if scale > 0.0 => rng.gen_range(-scale..scale),
        _ => 0.0,
    };
    let mut w = vec![0.0f32; c_in * new_width];
    for i in 0..c_in {
        for (o, col) in columns.iter().enumerate() {
            w[i * new_width + o] = match col {
                Some(s) => weight.data[i * old_width + s],
                None => fresh(),
            };
        }
    }
    let b = columns
        .iter()
        .map(|col| match col {
            Some(s) => bias.data[*s],
            None => fresh(),
        })
        .collect();

    let mut out_cfg = cfg.clone();
    out_cfg.vocab_size = tgt.len();
    let mut out = weights.clone();
    out.insert("output.weight", Tensor::new(vec![c_in, new_width], w));
    out.insert("output.bias", Tensor::new(vec![new_width], b));
    Ok((out_cfg, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::ConvSpec;

    fn cfg(v: usize) -> NetConfig {
        NetConfig {
            input_features: 3,
            prologue: ConvSpec {
                kernel: 3,
                channels: 4,
                stride: 2,
                dilation: 1,
            },
            blocks: vec![],
            epilogue: vec![],
            vocab_size: v,
            bn_eps: 1e-3,
        }
    }

    fn abc() -> AlphabetSpec {
        AlphabetSpec::new(["a", "b", "c"]).unwrap()
    }

    #[test]
    fn identity_is_bitwise() {
        let (c, w) = (cfg(3), NetworkWeights::random(&cfg(3), 1));
        let policy = AdaptPolicy::by_symbol(AdaptMode::Extend, NewRowInit::Zero, &abc(), &abc());
        let (c2, w2) = adapt_alphabet(&c, &w, &abc(), &abc(), &policy).unwrap();
        assert_eq!(c2, c);
        assert_eq!(w2, w);
    }

    #[test]
    fn reorder_and_extend_copies_columns() {
        let (c, w) = (cfg(3), NetworkWeights::random(&cfg(3), 2));
        let tgt = AlphabetSpec::new(["c", "a", "b", "d"]).unwrap();
        let policy = AdaptPolicy::by_symbol(AdaptMode::Extend, NewRowInit::Zero, &abc(), &tgt);
        let (c2, w2) = adapt_alphabet(&c, &w, &abc(), &tgt, &policy).unwrap();
        assert_eq!(c2.vocab_size, 4);
        let old = &w.tensors["output.weight"].data;
        let new = &w2.tensors["output.weight"].data;
        for i in 0..4 {
            assert_eq!(new[i * 5], old[i * 4 + 2]);
            assert_eq!(new[i * 5 + 1], old[i * 4]);
            assert_eq!(new[i * 5 + 3], 0.0);
            assert_eq!(new[i * 5 + 4], old[i * 4 + 3]);
        }
        assert_eq!(w2.tensors["output.bias"].data[4], w.tensors["output.bias"].data[3]);
    }

    #[test]
    fn uniform_init_is_bounded_and_seeded() {
        let (c, w) = (cfg(3), NetworkWeights::random(&cfg(3), 2));
        let tgt = AlphabetSpec::new(["a", "b", "c", "d"]).unwrap();
        let init = NewRowInit::Uniform { scale: 0.01, seed: 5 };
        let policy = AdaptPolicy::by_symbol(AdaptMode::Extend, init, &abc(), &tgt);
        let (_, a) = adapt_alphabet(&c, &w, &abc(), &tgt, &policy).unwrap();
        let (_, b) = adapt_alphabet(&c, &w, &abc(), &tgt, &policy).unwrap();
        assert_eq!(a, b);
        let col: Vec<f32> = (0..4).map(|i| a.tensors["output.weight"].data[i * 5 + 3]).collect();
        assert!(col.iter().all(|v| v.abs() <= 0.01) && col.iter().any(|v| *v != 0.0));
    }

    #[test]
    fn policy_errors() {
        let (c, w) = (cfg(3), NetworkWeights::random(&cfg(3), 0));
        let ab = AlphabetSpec::new(["a", "b"]).unwrap();
        let run = |tgt: &AlphabetSpec, mode, mapping: Vec<(&str, Option<&str>)>| {
            let policy = AdaptPolicy {
                mode,
                init: NewRowInit::Zero,
                mapping: mapping.into_iter().map(|(t, s)| (t.to_string(), s.map(str::to_string))).collect(),
            };
            adapt_alphabet(&c, &w, &abc(), tgt, &policy)
        };
        let unknown = run(&ab, AdaptMode::Shrink, vec![("a", Some("z")), ("b", Some("b"))]);
        assert!(matches!(unknown, Err(NetError::Adapt(m)) if m.contains("\"z\"")));
        let dup = run(&ab, AdaptMode::Shrink, vec![("a", Some("a")), ("a", Some("b")), ("b", Some("b"))]);
        assert!(matches!(dup, Err(NetError::Adapt(m)) if m.contains("more than once")));
        let partial = run(&ab, AdaptMode::Shrink, vec![("a", Some("a"))]);
        assert!(matches!(partial, Err(NetError::Adapt(m)) if m.contains("no mapping")));
        let drops = run(&ab, AdaptMode::Extend, vec![("a", Some("a")), ("b", Some("b"))]);
        assert!(matches!(drops, Err(NetError::Adapt(m)) if m.contains("drop")));
        let adds = run(&ab, AdaptMode::Shrink, vec![("a", Some("a")), ("b", None)]);
        assert!(matches!(adds, Err(NetError::Adapt(m)) if m.contains("new symbol")));
        assert!(run(&ab, AdaptMode::Shrink, vec![("a", Some("c")), ("b", Some("b"))]).is_ok());
    }
}
