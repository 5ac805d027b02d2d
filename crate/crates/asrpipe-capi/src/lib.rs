//! C ABI for the pipeline toolkit.
//!
//! Conventions: handles are opaque pointers freed with their matching
//! `_free` function; functions return [`AsrpipeStatus`] (0 = ok) or null on
//! failure; the last error message for the calling thread is available via
//! [`asrpipe_last_error`]. Strings returned by the library are UTF-8,
//! NUL-terminated, and must be released with [`asrpipe_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use asrpipe::decoder::{
    beam_search, greedy_decode, read_emissions, DecoderConfig, EmissionMatrix, Lexicon,
};
use asrpipe::error::Error;
use asrpipe::eval::wer;
use asrpipe::lm::{read_arpa, ArpaLm, TokenizedCorpus};
use asrpipe::textnorm::{preprocess, strip_diacritics};

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

/// Result codes shared by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsrpipeStatus {
    Ok = 0,
    InvalidArgument = 1,
    IoError = 2,
    ParseError = 3,
    InternalError = 4,
}

fn set_error(err: &Error) -> AsrpipeStatus {
    let status = match err {
        Error::Io { .. } => AsrpipeStatus::IoError,
        Error::Parse { .. } | Error::Format { .. } => AsrpipeStatus::ParseError,
        Error::InvalidInput(_) => AsrpipeStatus::InvalidArgument,
    };
    let message = CString::new(err.to_string()).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
    status
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn asrpipe_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(ptr::null())
    })
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn asrpipe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by an asrpipe function that
/// documents `asrpipe_string_free`, or null.
#[no_mangle]
pub unsafe extern "C" fn asrpipe_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn cstr<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, AsrpipeStatus> {
    if ptr.is_null() {
        return Err(set_error(&Error::invalid(format!("{what} is null"))));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| set_error(&Error::invalid(format!("{what} is not valid UTF-8"))))
}

fn export_string(s: String) -> *mut c_char {
    match CString::new(s) {
        Ok(c) => c.into_raw(),
        Err(_) => {
            set_error(&Error::invalid("output contained an interior NUL byte"));
            ptr::null_mut()
        }
    }
}

/// Opaque language-model handle.
pub struct AsrpipeLm(ArpaLm);
/// Opaque emissions handle.
pub struct AsrpipeEmissions(EmissionMatrix);
/// Opaque lexicon handle (bound to the vocabulary it was loaded with).
pub struct AsrpipeLexicon(Lexicon);

/// Loads an ARPA language model; null on failure.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn asrpipe_lm_read_arpa(path: *const c_char) -> *mut AsrpipeLm {
    clear_error();
    let Ok(path) = cstr(path, "path") else {
        return ptr::null_mut();
    };
    match read_arpa(PathBuf::from(path)) {
        Ok(lm) => Box::into_raw(Box::new(AsrpipeLm(lm))),
        Err(e) => {
            set_error(&e);
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `lm` must come from `asrpipe_lm_read_arpa` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn asrpipe_lm_free(lm: *mut AsrpipeLm) {
    if !lm.is_null() {
        drop(Box::from_raw(lm));
    }
}

/// log10 probability of a whitespace-tokenized sentence (with implicit
/// sentence boundaries), written to `out`.
///
/// # Safety
/// `lm` must be a live handle; `text` a NUL-terminated UTF-8 string; `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn asrpipe_lm_sentence_logprob(
    lm: *const AsrpipeLm,
    text: *const c_char,
    out: *mut f64,
) -> AsrpipeStatus {
    clear_error();
    if lm.is_null() || out.is_null() {
        return set_error(&Error::invalid("lm and out must be non-null"));
    }
    let text = match cstr(text, "text") {
        Ok(t) => t,
        Err(status) => return status,
    };
    let words: Vec<&str> = text.split_whitespace().collect();
    *out = (*lm).0.sentence_logprob(&words);
    AsrpipeStatus::Ok
}

/// Perplexity of a one-sentence-per-line corpus file, written to `out`.
///
/// # Safety
/// `lm` must be a live handle; `corpus_path` a NUL-terminated UTF-8 path;
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn asrpipe_lm_perplexity_file(
    lm: *const AsrpipeLm,
    corpus_path: *const c_char,
    out: *mut f64,
) -> AsrpipeStatus {
    clear_error();
    if lm.is_null() || out.is_null() {
        return set_error(&Error::invalid("lm and out must be non-null"));
    }
    let path = match cstr(corpus_path, "corpus_path") {
        Ok(p) => PathBuf::from(p),
        Err(status) => return status,
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return set_error(&Error::io(path, e)),
    };
    let corpus = match TokenizedCorpus::from_lines(text.lines()) {
        Ok(c) => c,
        Err(e) => return set_error(&e),
    };
    match (*lm).0.perplexity(&corpus) {
        Ok(p) => {
            *out = p;
            AsrpipeStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Reads a CTCE emissions file; null on failure.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn asrpipe_emissions_read(path: *const c_char) -> *mut AsrpipeEmissions {
    clear_error();
    let Ok(path) = cstr(path, "path") else {
        return ptr::null_mut();
    };
    match read_emissions(PathBuf::from(path)) {
        Ok(em) => Box::into_raw(Box::new(AsrpipeEmissions(em))),
        Err(e) => {
            set_error(&e);
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `em` must come from `asrpipe_emissions_read` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn asrpipe_emissions_free(em: *mut AsrpipeEmissions) {
    if !em.is_null() {
        drop(Box::from_raw(em));
    }
}

/// Reads a lexicon file resolved against the emissions' vocabulary; null on
/// failure.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `em` a live handle.
#[no_mangle]
pub unsafe extern "C" fn asrpipe_lexicon_read(
    path: *const c_char,
    em: *const AsrpipeEmissions,
) -> *mut AsrpipeLexicon {
    clear_error();
    if em.is_null() {
        set_error(&Error::invalid("em is null"));
        return ptr::null_mut();
    }
    let Ok(path) = cstr(path, "path") else {
        return ptr::null_mut();
    };
    match Lexicon::read(PathBuf::from(path), (*em).0.vocab()) {
        Ok(lex) => Box::into_raw(Box::new(AsrpipeLexicon(lex))),
        Err(e) => {
            set_error(&e);
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `lex` must come from `asrpipe_lexicon_read` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn asrpipe_lexicon_free(lex: *mut AsrpipeLexicon) {
    if !lex.is_null() {
        drop(Box::from_raw(lex));
    }
}

/// Greedy CTC decode; returns the transcript (free with
/// `asrpipe_string_free`) or null.
///
/// # Safety
/// `em` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn asrpipe_decode_greedy(em: *const AsrpipeEmissions) -> *mut c_char {
    clear_error();
    if em.is_null() {
        set_error(&Error::invalid("em is null"));
        return ptr::null_mut();
    }
    export_string(greedy_decode(&(*em).0))
}

/// Beam-search options mirroring the library defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AsrpipeBeamOptions {
    pub beam_size: u32,
    pub lm_weight: f64,
    pub word_bonus: f64,
    pub nbest: u32,
}

impl Default for AsrpipeBeamOptions {
    fn default() -> Self {
        AsrpipeBeamOptions {
            beam_size: 100,
            lm_weight: 0.5,
            word_bonus: 1.0,
            nbest: 1,
        }
    }
}

/// Prefix beam search. `lm` and `lexicon` may be null (no fusion, no
/// constraint). Returns a JSON array of hypotheses `{text,
/// acoustic_logprob, lm_log10prob, combined_score, token_count, word_count,
/// confidence}` (free with `asrpipe_string_free`) or null.
///
/// # Safety
/// `em` must be a live handle; `lm`/`lexicon` live handles or null;
/// `options` a valid pointer or null for defaults.
#[no_mangle]
pub unsafe extern "C" fn asrpipe_decode_beam(
    em: *const AsrpipeEmissions,
    options: *const AsrpipeBeamOptions,
    lm: *const AsrpipeLm,
    lexicon: *const AsrpipeLexicon,
) -> *mut c_char {
    clear_error();
    if em.is_null() {
        set_error(&Error::invalid("em is null"));
        return ptr::null_mut();
    }
    let opts = if options.is_null() {
        AsrpipeBeamOptions::default()
    } else {
        *options
    };
    let cfg = DecoderConfig {
        beam_size: opts.beam_size as usize,
        lm_weight: if lm.is_null() { 0.0 } else { opts.lm_weight },
        word_bonus: opts.word_bonus,
        use_lexicon: !lexicon.is_null(),
        prune_log_threshold: f64::INFINITY,
        nbest: opts.nbest as usize,
    };
    let lm_ref = if lm.is_null() { None } else { Some(&(*lm).0) };
    let lex_ref = if lexicon.is_null() {
        None
    } else {
        Some(&(*lexicon).0)
    };
    match beam_search(&(*em).0, &cfg, lm_ref, lex_ref) {
        Ok(hyps) => match serde_json::to_string(&hyps) {
            Ok(json) => export_string(json),
            Err(_) => {
                set_error(&Error::invalid("could not serialize hypotheses"));
                ptr::null_mut()
            }
        },
        Err(e) => {
            set_error(&e);
            ptr::null_mut()
        }
    }
}

/// Transcript preprocessing (lowercase, punctuation policy, digit
/// spelling). Free the result with `asrpipe_string_free`.
///
/// # Safety
/// `text` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn asrpipe_preprocess(
    text: *const c_char,
    spell_digits: bool,
) -> *mut c_char {
    clear_error();
    let Ok(text) = cstr(text, "text") else {
        return ptr::null_mut();
    };
    export_string(preprocess(text, spell_digits))
}

/// Removes diacritical marks. Free the result with `asrpipe_string_free`.
///
/// # Safety
/// `text` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn asrpipe_strip_diacritics(text: *const c_char) -> *mut c_char {
    clear_error();
    let Ok(text) = cstr(text, "text") else {
        return ptr::null_mut();
    };
    export_string(strip_diacritics(text))
}

/// Word-error-rate counts for one reference/hypothesis pair.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AsrpipeWer {
    pub substitutions: u64,
    pub insertions: u64,
    pub deletions: u64,
    pub ref_words: u64,
    pub wer: f64,
}

/// WER with default transcript preprocessing on both sides.
///
/// # Safety
/// `reference` and `hypothesis` must be NUL-terminated UTF-8 strings; `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn asrpipe_wer(
    reference: *const c_char,
    hypothesis: *const c_char,
    out: *mut AsrpipeWer,
) -> AsrpipeStatus {
    clear_error();
    if out.is_null() {
        return set_error(&Error::invalid("out is null"));
    }
    let reference = match cstr(reference, "reference") {
        Ok(r) => r,
        Err(status) => return status,
    };
    let hypothesis = match cstr(hypothesis, "hypothesis") {
        Ok(h) => h,
        Err(status) => return status,
    };
    match wer(reference, hypothesis) {
        Ok(b) => {
            *out = AsrpipeWer {
                substitutions: b.substitutions,
                insertions: b.insertions,
                deletions: b.deletions,
                ref_words: b.ref_words,
                wer: b.rate(),
            };
            AsrpipeStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}
