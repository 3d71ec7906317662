//! C ABI over the scribo toolkit.
//!
//! Every function returns a [`ScriboStatus`]; on failure a message is kept
//! per thread and can be read with [`scribo_last_error`]. Objects are opaque
//! handles released with their `_free` function. Strings handed out by the
//! library are released with [`scribo_string_free`]. Panics never cross the
//! boundary; they surface as `SCRIBO_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use scribo::cli::{decode_logits, transcribe, CliError, DecodeOptions, TranscribeOptions};
use scribo::ctc::{word_error_rate, LogitMatrix};
use scribo::lm::{parse_arpa, NgramModel};
use scribo::net::Model;
use scribo::textnorm::{normalize_text, NormRules};
use scribo::AlphabetSpec;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScriboStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    /// Bad input data: unreadable files, malformed models or audio.
    DataError = 4,
    Panic = 5,
}

/// Loaded acoustic model.
pub struct ScriboModel(Model);

/// Loaded n-gram language model.
pub struct ScriboLm(NgramModel);

/// Transcript normalizer bound to an alphabet.
pub struct ScriboNormalizer {
    rules: NormRules,
    alphabet: AlphabetSpec,
}

/// Decoding options. `beam_width` 0 selects greedy decoding unless an LM is
/// given; `alpha`/`beta` below zero use the defaults; `chunk_seconds` at or
/// below zero disables streaming.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ScriboDecodeOptions {
    pub beam_width: u32,
    pub alpha: f64,
    pub beta: f64,
    pub chunk_seconds: f64,
    pub lm: *const ScriboLm,
}

/// Timing of one transcription, in seconds.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriboRtf {
    pub clip_duration: f64,
    pub wall_time: f64,
    pub rtf: f64,
    pub features: f64,
    pub forward: f64,
    pub decode: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(ScriboStatus, String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(ScriboStatus::DataError, e.to_string())
    }
}

fn fail(status: ScriboStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ScriboStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ScriboStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal error: {msg}"));
            ScriboStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(ScriboStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(ScriboStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(ScriboStatus::NullArgument, format!("{name} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(ScriboStatus::NullArgument, format!("{name} is null")))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

fn cli_failure(e: CliError) -> Failure {
    match e {
        CliError::Usage(m) => fail(ScriboStatus::InvalidArgument, m),
        CliError::Data(m) => fail(ScriboStatus::DataError, m),
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn scribo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn scribo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Defaults: greedy decoding, no LM, no streaming.
#[no_mangle]
pub extern "C" fn scribo_decode_options_default() -> ScriboDecodeOptions {
    ScriboDecodeOptions {
        beam_width: 0,
        alpha: -1.0,
        beta: -1.0,
        chunk_seconds: 0.0,
        lm: ptr::null(),
    }
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scribo_model_load(path: *const c_char, out: *mut *mut ScriboModel) -> ScriboStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let model = Model::load(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(ScriboModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`scribo_model_load`], or be null.
#[no_mangle]
pub unsafe extern "C" fn scribo_model_free(model: *mut ScriboModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Output columns (alphabet size plus blank).
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn scribo_model_output_width(model: *const ScriboModel, out: *mut u32) -> ScriboStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        *out_arg(out, "out")? = model.0.config.output_width() as u32;
        Ok(())
    })
}

unsafe fn decode_options<'a>(opts: *const ScriboDecodeOptions) -> Result<(DecodeOptions<'a>, Option<f64>), Failure> {
    let o = match opts.as_ref() {
        Some(o) => *o,
        None => scribo_decode_options_default(),
    };
    let lm = o.lm.as_ref().map(|l| &l.0);
    let decode = DecodeOptions {
        beam_width: (o.beam_width > 0).then_some(o.beam_width as usize),
        alpha: (o.alpha >= 0.0).then_some(o.alpha),
        beta: (o.beta >= 0.0).then_some(o.beta),
        lm,
    };
    Ok((decode, (o.chunk_seconds > 0.0).then_some(o.chunk_seconds)))
}

/// Transcribes a WAV file. `opts` and `rtf` may be null.
///
/// # Safety
/// Pointers must be valid; `*text` receives a string to release with
/// [`scribo_string_free`].
#[no_mangle]
pub unsafe extern "C" fn scribo_model_transcribe_wav(
    model: *const ScriboModel,
    wav_path: *const c_char,
    opts: *const ScriboDecodeOptions,
    text: *mut *mut c_char,
    rtf: *mut ScriboRtf,
) -> ScriboStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let path = str_arg(wav_path, "wav_path")?;
        let text = out_arg(text, "text")?;
        *text = ptr::null_mut();
        let (decode, chunk_seconds) = decode_options(opts)?;
        let t = transcribe(&model.0, Path::new(path), &TranscribeOptions { chunk_seconds, decode })
            .map_err(cli_failure)?;
        if let Some(out) = rtf.as_mut() {
            let stage = |k: &str| t.report.stage_breakdown.get(k).copied().unwrap_or(0.0);
            *out = ScriboRtf {
                clip_duration: t.report.clip_duration,
                wall_time: t.report.wall_time,
                rtf: t.report.rtf,
                features: stage("features"),
                forward: stage("forward"),
                decode: stage("decode"),
            };
        }
        *text = c_string(t.text);
        Ok(())
    })
}

/// Decodes `frames x width` row-major log-probabilities with the model's
/// alphabet.
///
/// # Safety
/// `logits` must point to `frames * width` floats.
#[no_mangle]
pub unsafe extern "C" fn scribo_model_decode_logits(
    model: *const ScriboModel,
    logits: *const f32,
    frames: usize,
    width: usize,
    opts: *const ScriboDecodeOptions,
    text: *mut *mut c_char,
) -> ScriboStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let text = out_arg(text, "text")?;
        *text = ptr::null_mut();
        let len = frames
            .checked_mul(width)
            .ok_or_else(|| fail(ScriboStatus::InvalidArgument, "frames * width overflows"))?;
        if logits.is_null() && len > 0 {
            return Err(fail(ScriboStatus::NullArgument, "logits is null"));
        }
        let data = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(logits, len).to_vec()
        };
        let matrix = LogitMatrix::new(data, frames, width);
        let (decode, _) = decode_options(opts)?;
        *text = c_string(decode_logits(&matrix, &model.0.alphabet, &decode).map_err(cli_failure)?);
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scribo_lm_load(path: *const c_char, out: *mut *mut ScriboLm) -> ScriboStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let lm = parse_arpa(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(ScriboLm(lm)));
        Ok(())
    })
}

/// # Safety
/// `lm` must come from [`scribo_lm_load`], or be null.
#[no_mangle]
pub unsafe extern "C" fn scribo_lm_free(lm: *mut ScriboLm) {
    if !lm.is_null() {
        drop(Box::from_raw(lm));
    }
}

/// log10 probability of a whitespace-separated sentence.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn scribo_lm_score(
    lm: *const ScriboLm,
    sentence: *const c_char,
    with_markers: bool,
    log10: *mut f64,
) -> ScriboStatus {
    guard(|| {
        let lm = ref_arg(lm, "lm")?;
        let words: Vec<&str> = str_arg(sentence, "sentence")?.split_whitespace().collect();
        *out_arg(log10, "log10")? = lm.0.score_sequence(&words, with_markers).log10_total;
        Ok(())
    })
}

/// `rules` is a language tag or rule file; `alphabet` a preset name or JSON
/// file, or null for the preset matching the rules' language.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn scribo_normalizer_new(
    rules: *const c_char,
    alphabet: *const c_char,
    out: *mut *mut ScriboNormalizer,
) -> ScriboStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let rules = NormRules::resolve(str_arg(rules, "rules")?)?;
        let alphabet = if alphabet.is_null() {
            AlphabetSpec::preset(rules.number_language())?
        } else {
            AlphabetSpec::resolve(str_arg(alphabet, "alphabet")?)?
        };
        *out = Box::into_raw(Box::new(ScriboNormalizer { rules, alphabet }));
        Ok(())
    })
}

/// # Safety
/// `n` must come from [`scribo_normalizer_new`], or be null.
#[no_mangle]
pub unsafe extern "C" fn scribo_normalizer_free(n: *mut ScriboNormalizer) {
    if !n.is_null() {
        drop(Box::from_raw(n));
    }
}

/// # Safety
/// Pointers must be valid; `*out` is released with [`scribo_string_free`].
#[no_mangle]
pub unsafe extern "C" fn scribo_normalize(
    n: *const ScriboNormalizer,
    text: *const c_char,
    out: *mut *mut c_char,
) -> ScriboStatus {
    guard(|| {
        let n = ref_arg(n, "normalizer")?;
        let out = out_arg(out, "out")?;
        *out = c_string(normalize_text(str_arg(text, "text")?, &n.rules, &n.alphabet));
        Ok(())
    })
}

/// Word error rate of `hypothesis` against a non-empty `reference`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn scribo_word_error_rate(
    reference: *const c_char,
    hypothesis: *const c_char,
    out: *mut f64,
) -> ScriboStatus {
    guard(|| {
        let r = str_arg(reference, "reference")?;
        let h = str_arg(hypothesis, "hypothesis")?;
        *out_arg(out, "out")? = word_error_rate(r, h).map_err(|e| fail(ScriboStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}
