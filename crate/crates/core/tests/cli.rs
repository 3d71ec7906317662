use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

const BIN: &str = env!("CARGO_BIN_EXE_scribo");

fn scribo(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("SCRIBO_MODEL_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_wav(path: &Path, rate: u32, samples: &[i16]) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for s in samples {
        w.write_sample(*s).unwrap();
    }
    w.finalize().unwrap();
}

fn chirp(seconds: f64, seed: u32) -> Vec<i16> {
    let n = (seconds * 16_000.0) as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / 16_000.0;
            let f = 200.0 + 150.0 * seed as f64 + 400.0 * t;
            (8000.0 * (2.0 * std::f64::consts::PI * f * t).sin()) as i16
        })
        .collect()
}

/// One random 5x5 model shared by the tests of this binary.
fn model_dir() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-model");
        let o = scribo(&["init-model", "--preset", "quartznet5x5", "--seed", "3", "--out", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        dir
    })
}

#[test]
fn help_and_bad_usage() {
    let o = scribo(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Usage"));
    assert_eq!(scribo(&["--no-such-flag"]).status.code(), Some(1));
    assert_eq!(scribo(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(scribo(&["lm", "prune", "--arpa", "x"]).status.code(), Some(1));
}

#[test]
fn eval_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let r = tmp.path().join("r.txt");
    fs::write(&r, "the cat sat\non the mat\n").unwrap();
    let o = scribo(&["eval", "--ref", r.to_str().unwrap(), "--hyp", r.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("WER 0.0"));

    let h = tmp.path().join("h.txt");
    fs::write(&h, "the cat\non a mat\n").unwrap();
    let o = scribo(&["--json", "eval", "--ref", r.to_str().unwrap(), "--hyp", h.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["errors"], 2);
    assert_eq!(v["words"], 6);

    fs::write(&h, "one line\n").unwrap();
    let o = scribo(&["eval", "--ref", r.to_str().unwrap(), "--hyp", h.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn normalize_and_lm_score() {
    let o = scribo(&["normalize", "--rules", "de", "Die Straße hat 3 Häuser"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "die strasse hat drei haeuser");

    let arpa = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/toy.arpa");
    let o = scribo(&["--json", "lm", "score", "--arpa", arpa, "--no-markers", "the cat"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!((v["log10"].as_f64().unwrap() - -0.901).abs() < 1e-6);
    assert_eq!(scribo(&["lm", "score", "--arpa", "/nonexistent.arpa", "x"]).status.code(), Some(2));
}

#[test]
fn transcribe_chunked_matches_full() {
    let tmp = tempfile::tempdir().unwrap();
    let wav = tmp.path().join("a.wav");
    write_wav(&wav, 16_000, &chirp(3.0, 1));
    let model = model_dir().to_str().unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["--json", "transcribe", "--model", model, wav.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = scribo(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_str::<serde_json::Value>(stdout(&o).trim()).unwrap()
    };
    let full = run(&[]);
    let chunked = run(&["--chunk", "0.5"]);
    assert_eq!(full["text"], chunked["text"]);
    assert_eq!(full["text"], run(&[])["text"]);
    let report = &full["report"];
    assert!((report["clip_duration"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    let rtf = report["rtf"].as_f64().unwrap();
    assert!(rtf > 0.0);
    let stages: f64 = report["stage_breakdown"].as_object().unwrap().values().map(|v| v.as_f64().unwrap()).sum();
    assert!(stages <= report["wall_time"].as_f64().unwrap() + 1e-3);
    assert!(report["stage_breakdown"].get("decode").is_some());

    // the model directory can come from the environment
    let o = Command::new(BIN)
        .args(["transcribe", wav.to_str().unwrap(), "--beam", "8"])
        .env("SCRIBO_MODEL_DIR", model)
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn zero_length_audio_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let wav = tmp.path().join("empty.wav");
    write_wav(&wav, 16_000, &[]);
    let o = scribo(&["transcribe", "--model", model_dir().to_str().unwrap(), wav.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("zero-length"));
}

#[test]
fn bench_counts_measurements() {
    let tmp = tempfile::tempdir().unwrap();
    let mut manifest = String::from("duration\tfilepath\ttext\n");
    for i in 0..3 {
        write_wav(&tmp.path().join(format!("{i}.wav")), 16_000, &chirp(1.0, i));
        manifest.push_str(&format!("1.000\t{i}.wav\tx\n"));
    }
    let m = tmp.path().join("manifest.tsv");
    fs::write(&m, manifest).unwrap();
    let model = model_dir().to_str().unwrap();
    let o = scribo(&["--json", "bench", "--model", model, "--manifest", m.to_str().unwrap(), "--repetitions", "2", "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[6]["measurements"], 6);
    assert!(lines[..6].iter().all(|l| l["rtf"].as_f64().unwrap() > 0.0));

    fs::write(&m, "duration\tfilepath\ttext\n").unwrap();
    let o = scribo(&["bench", "--model", model, "--manifest", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn adapt_fold_and_decode() {
    let tmp = tempfile::tempdir().unwrap();
    let model = model_dir().to_str().unwrap();
    let es = tmp.path().join("es");
    let o = scribo(&["adapt-alphabet", "--model", model, "--to", "es", "--mode", "extend", "--out", es.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let adapted = scribo::net::Model::load(&es).unwrap();
    assert_eq!(adapted.config.vocab_size, 29);
    // shrinking cannot add symbols
    let o = scribo(&["adapt-alphabet", "--model", model, "--to", "es", "--mode", "shrink", "--out", es.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let folded = tmp.path().join("folded");
    assert!(scribo(&["fold-bn", "--model", model, "--out", folded.to_str().unwrap()]).status.success());
    assert_eq!(scribo(&["fold-bn", "--model", folded.to_str().unwrap(), "--out", folded.to_str().unwrap()]).status.code(), Some(2));

    // logits spelling "cat" for the English alphabet
    let alphabet = scribo::AlphabetSpec::english();
    let w = alphabet.output_width();
    let mut rows = Vec::new();
    for label in [3usize, 28, 1, 20] {
        let mut r = vec![-10.0f32; w];
        r[label] = 0.0;
        rows.push(r);
    }
    let logits_dir = tmp.path().join("logits");
    scribo::net::save_logits(&logits_dir, &scribo::ctc::LogitMatrix::from_rows(&rows), &alphabet).unwrap();
    let o = scribo(&["decode", "--logits", logits_dir.to_str().unwrap()]);
    assert_eq!(stdout(&o).trim(), "cat");
    let o = scribo(&["decode", "--logits", logits_dir.to_str().unwrap(), "--beam", "4"]);
    assert_eq!(stdout(&o).trim(), "cat");
}

#[test]
fn corpus_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("cv");
    let mut tsv = String::from("client_id\tpath\tsentence\n");
    for i in 0..12u32 {
        let name = format!("c{i}.wav");
        write_wav(&src.join("clips").join(&name), 48_000, &chirp(1.0 + 0.1 * i as f64, i)[..]);
        tsv.push_str(&format!("spk{}\t{name}\tsatz nummer {i}\n", i % 4));
    }
    fs::write(src.join("validated.tsv"), tsv).unwrap();
    let out = tmp.path().join("out");
    let o = scribo(&["corpus", "convert", "--format", "commonvoice-tsv", "--in", src.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = out.join("manifest.tsv");
    let dataset = scribo::corpus::read_manifest(&manifest).unwrap();
    assert_eq!(dataset.items.len(), 12);
    let spec = hound::WavReader::open(dataset.root.join(&dataset.items[0].filepath)).unwrap().spec();
    assert_eq!((spec.sample_rate, spec.channels, spec.bits_per_sample), (16_000, 1, 16));

    let o = scribo(&["--json", "corpus", "stats", "--manifest", manifest.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["item_count"], 12);

    let kept = tmp.path().join("kept/kept.tsv");
    fs::create_dir_all(kept.parent().unwrap()).unwrap();
    let o = scribo(&["--json", "corpus", "clean", "--manifest", manifest.to_str().unwrap(), "--out", kept.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let n_kept = v["kept"].as_u64().unwrap() as usize;
    let back = scribo::corpus::read_manifest(&kept).unwrap();
    assert_eq!(back.items.len(), n_kept);
    assert!(back.items.iter().all(|i| back.root.join(&i.filepath).is_file()));

    let split = |dir: &Path| {
        let o = scribo(&["corpus", "split", "--manifest", manifest.to_str().unwrap(), "--by", "speaker", "--fractions", "0.5,0.5", "--seed", "7", "--out", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        ["train.tsv", "test.tsv"].map(|n| fs::read_to_string(dir.join(n)).unwrap())
    };
    let a = split(&tmp.path().join("s1"));
    assert_eq!(a, split(&tmp.path().join("s2")));
    let speakers = |text: &str| -> std::collections::HashSet<String> {
        text.lines().skip(1).map(|l| l.rsplit('\t').next().unwrap().to_string()).collect()
    };
    assert!(speakers(&a[0]).is_disjoint(&speakers(&a[1])));

    let o = scribo(&["corpus", "split", "--manifest", manifest.to_str().unwrap(), "--fractions", "0.5,0.6"]);
    assert_eq!(o.status.code(), Some(1));
    let o = scribo(&["corpus", "convert", "--format", "bogus", "--in", "x", "--out", "y"]);
    assert_eq!(o.status.code(), Some(1));
}
