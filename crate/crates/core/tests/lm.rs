use std::collections::BTreeSet;
use std::path::PathBuf;

use proptest::prelude::*;
use scribo::lm::{parse_arpa, parse_arpa_str, prune_model, NgramModel};

fn fixture(name: &str) -> NgramModel {
    parse_arpa(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)).unwrap()
}

#[test]
fn toy_lookups_and_backoff() {
    let m = fixture("toy.arpa");
    assert_eq!(m.order(), 2);
    assert!((m.score_word(&["the"], "cat") - -0.301).abs() < 1e-6);
    assert!((m.score_word(&["the"], "dog") - -1.2).abs() < 1e-6);
    assert!((m.score_word(&["cat"], "giraffe") - -2.6).abs() < 1e-6);
}

#[test]
fn toy_sentences_hand_summed() {
    let m = fixture("toy.arpa");
    // the -0.6, cat|the -0.301, dog|cat -0.5
    let s = m.score_sequence(&["the", "cat", "dog"], false);
    assert!((s.log10_total - -1.401).abs() < 1e-6);
    assert_eq!(s.oov_count, 0);
    // dog -1.0, the|dog -0.3 + -0.6, zebra -> <unk>|the -0.2 + -2.5
    let s = m.score_sequence(&["dog", "the", "zebra"], false);
    assert!((s.log10_total - -4.6).abs() < 1e-6);
    assert_eq!(s.oov_count, 1);
    let ppl = m.perplexity(&["dog", "the", "zebra"], false).unwrap();
    assert!((ppl - 34.145488738336006).abs() < 1e-4);
}

#[test]
fn five_gram_order() {
    let m = fixture("five.arpa");
    assert_eq!(m.order(), 5);
    assert!((m.score_word(&["a", "b", "a", "b"], "a") - -0.05).abs() < 1e-6);
    // history longer than 4 is truncated
    assert!((m.score_word(&["c", "c", "a", "b", "a", "b"], "a") - -0.05).abs() < 1e-6);
}

#[test]
fn uniform_model_perplexity() {
    let q = (0.25f64).log10();
    let text = format!("\\data\\\nngram 1=4\n\\1-grams:\n{q} w\n{q} x\n{q} y\n{q} z\n\\end\\\n");
    let m = parse_arpa_str(&text).unwrap();
    let seq = ["w", "x", "x", "z", "y", "w", "w", "z", "y", "x"];
    assert!((m.perplexity(&seq, false).unwrap() - 4.0).abs() < 1e-5);
}

#[test]
fn proper_model_sums_to_one() {
    let m = fixture("proper.arpa");
    let vocab: Vec<String> = m.vocab().map(String::from).collect();
    for k in 1..m.order() {
        for (history, _) in m.sorted_entries(k) {
            let total: f64 = vocab.iter().map(|w| 10f64.powf(m.score_word(&history, w))).sum();
            assert!((total - 1.0).abs() < 1e-6, "history {history:?} sums to {total}");
        }
    }
    let total: f64 = vocab.iter().map(|w| 10f64.powf(m.score_word(&[], w))).sum();
    assert!((total - 1.0).abs() < 1e-6);
}

#[test]
fn markers_score_below_zero() {
    let m = fixture("proper.arpa");
    for seq in [vec![], vec!["a"], vec!["b", "a", "b"], vec!["a", "a", "a"]] {
        assert!(m.score_sequence(&seq, true).log10_total <= 0.0);
    }
}

#[test]
fn prune_follows_probability_order() {
    let m = fixture("proper.arpa");
    let survivors = |max: usize| -> BTreeSet<String> {
        let p = prune_model(&m, max).unwrap();
        (2..=p.order())
            .flat_map(|k| p.sorted_entries(k).into_iter().map(|(t, _)| t.join(" ")))
            .collect()
    };
    assert_eq!(survivors(11).len(), 7);
    let expected: BTreeSet<String> = ["<s> a", "a b", "b a"].map(String::from).into();
    assert_eq!(survivors(7), expected);
    assert_eq!(survivors(5), ["b a".to_string()].into());
    assert!(survivors(4).is_empty());
}

fn junction_oracle(m: &NgramModel, a: &[&str], b: &[&str]) -> f64 {
    let all: Vec<&str> = a.iter().chain(b).copied().collect();
    let mut total = m.score_sequence(a, false).log10_total;
    for i in a.len()..all.len() {
        let start = i.saturating_sub(m.order() - 1);
        total += m.score_word(&all[start..i], all[i]);
    }
    total
}

/// Random prefix-consistent model text over a five-word vocabulary.
fn random_arpa() -> impl Strategy<Value = String> {
    let words = ["a", "b", "c", "d", "<unk>"];
    (
        proptest::collection::btree_set(proptest::collection::vec(0usize..4, 2..=3), 0..25),
        proptest::collection::vec(-5.0f32..0.0, 64),
    )
        .prop_map(move |(grams, probs)| {
            let mut orders: Vec<BTreeSet<Vec<usize>>> = vec![(0..5).map(|i| vec![i]).collect(), BTreeSet::new(), BTreeSet::new()];
            for g in grams {
                for k in 2..=g.len() {
                    orders[k - 1].insert(g[..k].to_vec());
                }
            }
            let max_order = if orders[2].is_empty() { if orders[1].is_empty() { 1 } else { 2 } } else { 3 };
            let mut text = String::from("\\data\\\n");
            for k in 0..max_order {
                text += &format!("ngram {}={}\n", k + 1, orders[k].len());
            }
            let mut p = probs.iter().cycle();
            for k in 0..max_order {
                text += &format!("\\{}-grams:\n", k + 1);
                for g in &orders[k] {
                    let toks: Vec<&str> = g.iter().map(|&i| words[i]).collect();
                    text += &format!("{}\t{}", p.next().unwrap(), toks.join(" "));
                    if k + 1 < max_order {
                        text += &format!("\t{}", p.next().unwrap() / 5.0);
                    }
                    text += "\n";
                }
            }
            text + "\\end\\\n"
        })
}

proptest! {
    #[test]
    fn parse_serialize_round_trip(text in random_arpa()) {
        let m = parse_arpa_str(&text).unwrap();
        let again = parse_arpa_str(&m.to_arpa()).unwrap();
        prop_assert_eq!(&again, &m);
        prop_assert_eq!(again.to_arpa(), m.to_arpa());
    }

    #[test]
    fn pruned_models_stay_consistent(text in random_arpa(), extra in 0usize..30) {
        let m = parse_arpa_str(&text).unwrap();
        let max = 5 + extra;
        let p = prune_model(&m, max).unwrap();
        prop_assert!(p.total_entries() <= max);
        prop_assert_eq!(p.counts()[0], 5);
        // the parser rejects missing prefixes
        prop_assert!(parse_arpa_str(&p.to_arpa()).is_ok());
    }

    #[test]
    fn additive_over_concatenation(
        a in proptest::collection::vec(prop::sample::select(vec!["a", "b", "</s>", "q"]), 0..6),
        b in proptest::collection::vec(prop::sample::select(vec!["a", "b", "</s>"]), 0..6),
    ) {
        let m = fixture("proper.arpa");
        let all: Vec<&str> = a.iter().chain(&b).copied().collect();
        let whole = m.score_sequence(&all, false).log10_total;
        prop_assert!((whole - junction_oracle(&m, &a, &b)).abs() < 1e-9);
    }
}
