use std::collections::{HashMap, HashSet};

use super::{LmError, NgramModel};

/// Drops higher-order n-grams until at most `max_ngrams` entries remain.
///
/// Candidates go lowest probability first; ties prefer the longer n-gram,
/// then token order. Removing an n-gram removes every n-gram it prefixes.
/// Unigrams are never removed and backoff weights are kept as they are.
pub fn prune_model(model: &NgramModel, max_ngrams: usize) -> Result<NgramModel, LmError> {
    let unigrams = model.counts()[0];
    if max_ngrams < unigrams {
        return Err(LmError::PruneBelowUnigrams {
            max: max_ngrams,
            unigrams,
        });
    }
    let mut total = model.total_entries();
    if total <= max_ngrams {
        return Ok(model.clone());
    }

    let tables = model.tables();
    let mut children: HashMap<&[u32], Vec<&[u32]>> = HashMap::new();
    let mut candidates: Vec<(&[u32], f32)> = Vec::new();
    for table in &tables[1..] {
        for (key, e) in table {
            children.entry(&key[..key.len() - 1]).or_default().push(key);
            candidates.push((key, e.log10_prob));
        }
    }
    let text = |key: &[u32]| key.iter().map(|&i| model.word(i)).collect::<Vec<_>>();
    candidates.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then(b.0.len().cmp(&a.0.len()))
            .then_with(|| text(a.0).cmp(&text(b.0)))
    });

    let mut removed: HashSet<&[u32]> = HashSet::new();
    for (key, _) in candidates {
        if total <= max_ngrams {
            break;
        }
        if removed.contains(key) {
            continue;
        }
        let mut stack = vec![key];
        while let Some(k) = stack.pop() {
            if removed.insert(k) {
                total -= 1;
                if let Some(ext) = children.get(k) {
                    stack.extend(ext.iter().copied());
                }
            }
        }
    }

    let pruned = tables
        .iter()
        .map(|t| {
            t.iter()
                .filter(|(k, _)| !removed.contains(&k[..]))
                .map(|(k, e)| (k.clone(), *e))
                .collect()
        })
        .collect();
    Ok(model.with_tables(pruned))
}
