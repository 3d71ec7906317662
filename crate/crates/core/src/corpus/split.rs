use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{CorpusError, DatasetItem};

/// Item attribute that must not straddle partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKey {
    Speaker,
}

impl SplitKey {
    pub fn name(self) -> &'static str {
        match self {
            SplitKey::Speaker => "speaker",
        }
    }

    fn value(self, item: &DatasetItem) -> Option<&str> {
        match self {
            SplitKey::Speaker => item.speaker.as_deref().filter(|s| !s.is_empty()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitPolicy {
    Random { fractions: Vec<f64>, seed: u64 },
    ByKey { key: SplitKey, fractions: Vec<f64>, seed: u64 },
}

impl SplitPolicy {
    fn fractions(&self) -> &[f64] {
        match self {
            SplitPolicy::Random { fractions, .. } | SplitPolicy::ByKey { fractions, .. } => fractions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    pub name: String,
    pub items: Vec<DatasetItem>,
}

fn partition_names(n: usize) -> Vec<String> {
    match n {
        2 => vec!["train".into(), "test".into()],
        3 => vec!["train".into(), "dev".into(), "test".into()],
        _ => (0..n).map(|i| format!("part{i}")).collect(),
    }
}

fn validate(fractions: &[f64]) -> Result<(), CorpusError> {
    if fractions.is_empty() {
        return Err(CorpusError::InvalidFractions("no fractions given".into()));
    }
    if let Some(f) = fractions.iter().find(|f| !f.is_finite() || **f < 0.0) {
        return Err(CorpusError::InvalidFractions(format!("{f} is not a valid fraction")));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(CorpusError::InvalidFractions(format!("fractions sum to {sum}, not 1")));
    }
    Ok(())
}

/// Largest-remainder apportionment of `n` items; ties go to the lower index.
pub(crate) fn apportion(n: usize, fractions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Splits `items` into disjoint partitions whose union is the input. Items
/// keep their input order inside each partition. Partitions are named
/// train/test for two fractions, train/dev/test for three, `part{i}`
/// otherwise.
pub fn split_dataset(items: &[DatasetItem], policy: &SplitPolicy) -> Result<Vec<Partition>, CorpusError> {
    let fractions = policy.fractions();
    validate(fractions)?;
    let targets = apportion(items.len(), fractions);
    let mut assignment = vec![0usize; items.len()];

    match policy {
        SplitPolicy::Random { seed, .. } => {
            let mut order: Vec<usize> = (0..items.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            let mut start = 0;
            for (p, &size) in targets.iter().enumerate() {
                for &i in &order[start..start + size] {
                    assignment[i] = p;
                }
                start += size;
            }
        }
        SplitPolicy::ByKey { key, seed, .. } => {
            let missing: Vec<String> = items
                .iter()
                .filter(|i| key.value(i).is_none())
                .map(|i| i.filepath.clone())
                .collect();
            if !missing.is_empty() {
                return Err(CorpusError::MissingKey {
                    key: key.name().into(),
                    items: missing,
                });
            }
            let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, item) in items.iter().enumerate() {
                groups.entry(key.value(item).unwrap()).or_default().push(i);
            }
            let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
            groups.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            let mut filled = vec![0usize; targets.len()];
            for group in groups {
                let deficit = |p: usize| targets[p] as i64 - filled[p] as i64;
                let p = (0..targets.len())
                    .max_by(|&a, &b| deficit(a).cmp(&deficit(b)).then(b.cmp(&a)))
                    .unwrap();
                filled[p] += group.len();
                for i in group {
                    assignment[i] = p;
                }
            }
        }
    }

    let mut partitions: Vec<Partition> = partition_names(fractions.len())
        .into_iter()
        .map(|name| Partition { name, items: Vec::new() })
        .collect();
    for (item, p) in items.iter().zip(assignment) {
        partitions[p].items.push(item.clone());
    }
    Ok(partitions)
}
