use proptest::prelude::*;
use scribo::ctc::{beam_decode, collapse, greedy_decode, word_error_rate, DecodeParams, LogitMatrix};
use scribo::lm::parse_arpa_str;
use scribo::AlphabetSpec;

fn alphabet(v: usize) -> AlphabetSpec {
    AlphabetSpec::new(["a", "b", "c", "d"].into_iter().take(v)).unwrap()
}

fn logits_strategy() -> impl Strategy<Value = (usize, LogitMatrix)> {
    (1usize..=4, 1usize..=6).prop_flat_map(|(v, t)| {
        proptest::collection::vec(-4.0f32..2.0, t * (v + 1))
            .prop_map(move |scores| (v, LogitMatrix::from_scores(scores, t, v + 1)))
    })
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Exact log posterior of every labeling, by enumerating all frame paths.
fn exact_posteriors(m: &LogitMatrix) -> Vec<(Vec<usize>, f64)> {
    let (t, w) = (m.frames(), m.width());
    let mut table: std::collections::BTreeMap<Vec<usize>, f64> = Default::default();
    let mut path = vec![0usize; t];
    for code in 0..w.pow(t as u32) {
        let mut c = code;
        let mut lp = 0.0;
        for (i, slot) in path.iter_mut().enumerate() {
            *slot = c % w;
            c /= w;
            lp += m.row(i)[*slot] as f64;
        }
        let labels = collapse(&path, w - 1);
        let e = table.entry(labels).or_insert(f64::NEG_INFINITY);
        *e = log_add(*e, lp);
    }
    table.into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wide_beam_finds_exact_argmax((v, m) in logits_strategy()) {
        let exact = exact_posteriors(&m);
        let best = exact.iter().fold(f64::NEG_INFINITY, |acc, (_, s)| acc.max(*s));
        let params = DecodeParams { beam_width: (v + 1).pow(m.frames() as u32), ..Default::default() };
        let hyps = beam_decode(&m, &alphabet(v), &params).unwrap();
        prop_assert!((hyps[0].combined - best).abs() < 1e-9, "{} vs {}", hyps[0].combined, best);
        let (labels, score) = exact.iter().find(|(l, _)| *l == hyps[0].labels).unwrap();
        prop_assert!((score - best).abs() < 1e-9, "{:?} is not a maximizer", labels);
        // every hypothesis carries its exact posterior
        for h in &hyps {
            let exact_score = exact.iter().find(|(l, _)| *l == h.labels).unwrap().1;
            prop_assert!((h.acoustic_log - exact_score).abs() < 1e-9);
        }
    }

    /// Prefix beam search is not monotone in the width for arbitrary pairs;
    /// a beam wide enough to be exact dominates every narrower one.
    #[test]
    fn exact_beam_dominates_narrow_beams((v, m) in logits_strategy(), w1 in 1usize..8) {
        let best = |w: usize| {
            let params = DecodeParams { beam_width: w, ..Default::default() };
            beam_decode(&m, &alphabet(v), &params).unwrap()[0].combined
        };
        let exact = (v + 1).pow(m.frames() as u32);
        prop_assert!(best(exact.max(w1)) >= best(w1) - 1e-12);
    }

    #[test]
    fn disabled_fusion_matches_no_lm((v, m) in logits_strategy()) {
        let lm = parse_arpa_str("\\data\\\nngram 1=2\n\\1-grams:\n-0.3 a\n-3 b\n\\end\\\n").unwrap();
        let alphabet = AlphabetSpec::new([" ", "a", "b", "c"].into_iter().take(v)).unwrap();
        let plain = DecodeParams { beam_width: 16, ..Default::default() };
        let fused = DecodeParams { alpha: 0.0, beta: 0.0, lm: Some(&lm), ..plain };
        let a = beam_decode(&m, &alphabet, &plain).unwrap();
        let b = beam_decode(&m, &alphabet, &fused).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.labels, &y.labels);
            prop_assert_eq!(x.combined, y.combined);
        }
    }

    #[test]
    fn collapse_is_idempotent(path in proptest::collection::vec(0usize..4, 0..30)) {
        let once = collapse(&path, 3);
        // a collapsed path has no blanks, so re-collapsing may only merge repeats it kept
        let relabeled: Vec<usize> = once.iter().flat_map(|&l| [l, 3]).collect();
        prop_assert_eq!(collapse(&relabeled, 3), once.clone());
        prop_assert!(once.iter().all(|&l| l != 3));
    }

    #[test]
    fn wer_is_non_negative(r in "[ab ]{1,12}", h in "[ab ]{0,12}") {
        prop_assume!(!r.trim().is_empty());
        prop_assert!(word_error_rate(&r, &h).unwrap() >= 0.0);
        prop_assert_eq!(word_error_rate(&r, &r).unwrap(), 0.0);
    }
}

fn frame(alphabet: &AlphabetSpec, probs: &[(&str, f64)]) -> Vec<f32> {
    let w = alphabet.output_width();
    let named: f64 = probs.iter().map(|(_, p)| p).sum();
    let rest = (1.0 - named) / (w - probs.len()) as f64;
    let mut row = vec![rest.ln() as f32; w];
    for (sym, p) in probs {
        let i = if *sym == "_" { alphabet.blank_index() } else { alphabet.index_of(sym).unwrap() };
        row[i] = p.ln() as f32;
    }
    row
}

#[test]
fn lm_breaks_acoustic_near_tie() {
    let en = AlphabetSpec::english();
    let rows = vec![
        frame(&en, &[("c", 0.9)]),
        frame(&en, &[("o", 0.5), ("a", 0.45)]),
        frame(&en, &[("t", 0.9)]),
    ];
    let m = LogitMatrix::from_rows(&rows);
    let plain = beam_decode(&m, &en, &DecodeParams::default()).unwrap();
    assert_eq!(plain[0].text, "cot");

    let lm = parse_arpa_str("\\data\\\nngram 1=2\n\\1-grams:\n-1.0 cat\n-4.0 cot\n\\end\\\n").unwrap();
    let params = DecodeParams {
        lm: Some(&lm),
        ..Default::default()
    };
    let fused = beam_decode(&m, &en, &params).unwrap();
    assert_eq!(fused[0].text, "cat");
    // the only 3-frame path for "cat" is c, a, t
    let row = |t: usize, s: &str| m.row(t)[en.index_of(s).unwrap()] as f64;
    let acoustic = row(0, "c") + row(1, "a") + row(2, "t");
    let expected = acoustic + 0.8 * std::f64::consts::LN_10 * -1.0 + 1.0;
    assert!((fused[0].combined - expected).abs() < 1e-9);
    assert_eq!(fused[0].word_count, 1);
}

#[test]
fn words_scored_in_context() {
    let en = AlphabetSpec::english();
    let mut rows = Vec::new();
    for ch in "ab ba".chars() {
        let s = ch.to_string();
        rows.push(frame(&en, &[(s.as_str(), 0.95)]));
        rows.push(frame(&en, &[("_", 0.95)]));
    }
    let m = LogitMatrix::from_rows(&rows);
    let lm = parse_arpa_str(
        "\\data\\\nngram 1=3\nngram 2=2\n\\1-grams:\n-1 <s> -0.5\n-1 ab -0.25\n-1 ba\n\\2-grams:\n-0.1 <s> ab\n-0.2 ab ba\n\\end\\\n",
    )
    .unwrap();
    let params = DecodeParams {
        lm: Some(&lm),
        beam_width: 32,
        ..Default::default()
    };
    let top = &beam_decode(&m, &en, &params).unwrap()[0];
    assert_eq!(top.text, "ab ba");
    assert!((top.lm_log10 - -0.3).abs() < 1e-6);
    assert_eq!(top.word_count, 2);
    assert_eq!(greedy_decode(&m, &en).unwrap(), "ab ba");
}
