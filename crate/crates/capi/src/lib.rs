//! C ABI for the matchprobe cross-encoder engine.
//!
//! The surface follows the usual opaque-handle pattern: `mp_engine_new`
//! loads a model and returns an `MpEngine*`; every fallible call returns
//! an [`MpStatus`] code and writes its result through out-pointers. The
//! last error message of the calling thread is available via
//! [`mp_last_error`]. The generated header lives at
//! `include/matchprobe.h`.
//!
//! Engines are immutable after creation and safe to share across
//! threads.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::str::FromStr;

use matchprobe::ablation::{parse_spec_auto, Direction, SourcePart};
use matchprobe::analysis::{direction_mass, head_bilinear, svd_alignment};
use matchprobe::encoder::{forward, forward_score, load_weights, ModelConfig, Weights};
use matchprobe::error::Error;
use matchprobe::ireval::ndcg_at_k;
use matchprobe::segment::{build_pair, Part, Vocab};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    Utf8 = 2,
    Io = 3,
    Config = 4,
    Parse = 5,
    Shape = 6,
    Input = 7,
    Load = 8,
    Numeric = 9,
    Eval = 10,
    /// A panic was caught at the boundary.
    Panic = 11,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let cstring = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> MpStatus {
    match err {
        Error::Shape { .. } => MpStatus::Shape,
        Error::Input(_) => MpStatus::Input,
        Error::Config(_) => MpStatus::Config,
        Error::Parse { .. } => MpStatus::Parse,
        Error::Load(_) => MpStatus::Load,
        Error::Numeric(_) => MpStatus::Numeric,
        Error::Eval(_) => MpStatus::Eval,
        Error::Io(_) => MpStatus::Io,
    }
}

fn fail(err: Error) -> MpStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Run a fallible body with panic containment.
fn guarded(body: impl FnOnce() -> Result<(), MpStatus>) -> MpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            clear_error();
            MpStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("panic caught at the C boundary".into());
            MpStatus::Panic
        }
    }
}

unsafe fn required_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, MpStatus> {
    if ptr.is_null() {
        set_error(format!("{name} must not be null"));
        return Err(MpStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{name} is not valid UTF-8"));
        MpStatus::Utf8
    })
}

/// Opaque engine handle: loaded weights plus the vocabulary and the
/// input-length budget.
pub struct MpEngine {
    weights: Weights,
    vocab: Vocab,
    max_len: usize,
}

/// Version string of the library (static storage, do not free).
#[no_mangle]
pub extern "C" fn mp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the calling thread's most recent error, or null when the
/// last call succeeded. The pointer stays valid until the next failing
/// call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn mp_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |msg| msg.as_ptr())
    })
}

/// Load an engine from a model config (JSON), a weight archive and a
/// vocabulary file. `max_len` caps the assembled input length (pass 0
/// for the model's maximum). On success writes the handle to
/// `out_engine`; free it with [`mp_engine_free`].
///
/// # Safety
///
/// Path arguments must be valid NUL-terminated strings and `out_engine`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mp_engine_new(
    config_path: *const c_char,
    weights_path: *const c_char,
    vocab_path: *const c_char,
    max_len: usize,
    out_engine: *mut *mut MpEngine,
) -> MpStatus {
    guarded(|| {
        if out_engine.is_null() {
            set_error("out_engine must not be null".into());
            return Err(MpStatus::NullArgument);
        }
        let config_path = PathBuf::from(required_str(config_path, "config_path")?);
        let weights_path = PathBuf::from(required_str(weights_path, "weights_path")?);
        let vocab_path = PathBuf::from(required_str(vocab_path, "vocab_path")?);

        let config = ModelConfig::load(&config_path).map_err(fail)?;
        let weights = load_weights(&weights_path, &config).map_err(fail)?;
        let vocab = Vocab::load(&vocab_path).map_err(fail)?;
        let max_len = if max_len == 0 {
            config.max_position_embeddings
        } else {
            max_len.min(config.max_position_embeddings)
        };
        *out_engine = Box::into_raw(Box::new(MpEngine {
            weights,
            vocab,
            max_len,
        }));
        Ok(())
    })
}

/// Release an engine. Passing null is a no-op.
///
/// # Safety
///
/// `engine` must be a handle returned by [`mp_engine_new`] that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn mp_engine_free(engine: *mut MpEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Number of encoder layers.
///
/// # Safety
///
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_engine_num_layers(engine: *const MpEngine) -> usize {
    if engine.is_null() {
        return 0;
    }
    (*engine).weights.config.num_layers
}

/// Number of attention heads per layer.
///
/// # Safety
///
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_engine_num_heads(engine: *const MpEngine) -> usize {
    if engine.is_null() {
        return 0;
    }
    (*engine).weights.config.num_heads
}

/// Validate an ablation spec (text grammar or JSON array) against the
/// engine's model bounds.
///
/// # Safety
///
/// `engine` must be a live handle and `spec` a valid string.
#[no_mangle]
pub unsafe extern "C" fn mp_spec_validate(
    engine: *const MpEngine,
    spec: *const c_char,
) -> MpStatus {
    guarded(|| {
        if engine.is_null() {
            set_error("engine must not be null".into());
            return Err(MpStatus::NullArgument);
        }
        let spec = required_str(spec, "spec")?;
        parse_spec_auto(spec, &(*engine).weights.config)
            .map(|_| ())
            .map_err(fail)
    })
}

/// Score a query-document pair. `ablation_spec` may be null (no
/// ablation) or a spec in the text grammar / JSON form. The relevance
/// score (relevant minus non-relevant logit) is written to `out_score`.
///
/// # Safety
///
/// `engine` must be a live handle; strings valid; `out_score` writable.
#[no_mangle]
pub unsafe extern "C" fn mp_score(
    engine: *const MpEngine,
    query: *const c_char,
    doc: *const c_char,
    ablation_spec: *const c_char,
    out_score: *mut f32,
) -> MpStatus {
    guarded(|| {
        if engine.is_null() || out_score.is_null() {
            set_error("engine and out_score must not be null".into());
            return Err(MpStatus::NullArgument);
        }
        let engine = &*engine;
        let query = required_str(query, "query")?;
        let doc = required_str(doc, "doc")?;
        let spec = if ablation_spec.is_null() {
            None
        } else {
            let text = required_str(ablation_spec, "ablation_spec")?;
            Some(parse_spec_auto(text, &engine.weights.config).map_err(fail)?)
        };
        let input = build_pair(query, doc, &engine.vocab, engine.max_len).map_err(fail)?;
        let score = forward_score(&input, &engine.weights, spec.as_ref()).map_err(fail)?;
        *out_score = score;
        Ok(())
    })
}

/// Attention mass sent along `target_part <- source_part` for every
/// (layer, head) of an unablated forward pass over one pair. Part names
/// are CLS, Q, SEP1, D, SEP2, and ALL for the source. Writes
/// `num_layers * num_heads` values (layer-major) to `out_masses`, which
/// must hold at least `out_len >= num_layers * num_heads` doubles.
///
/// # Safety
///
/// `engine` must be a live handle; strings valid; `out_masses` writable
/// for `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mp_direction_mass(
    engine: *const MpEngine,
    query: *const c_char,
    doc: *const c_char,
    target_part: *const c_char,
    source_part: *const c_char,
    out_masses: *mut f64,
    out_len: usize,
) -> MpStatus {
    guarded(|| {
        if engine.is_null() || out_masses.is_null() {
            set_error("engine and out_masses must not be null".into());
            return Err(MpStatus::NullArgument);
        }
        let engine = &*engine;
        let config = &engine.weights.config;
        let needed = config.num_layers * config.num_heads;
        if out_len < needed {
            set_error(format!("out_len {out_len} < required {needed}"));
            return Err(MpStatus::Input);
        }
        let query = required_str(query, "query")?;
        let doc = required_str(doc, "doc")?;
        let target = Part::from_str(required_str(target_part, "target_part")?).map_err(fail)?;
        let source_text = required_str(source_part, "source_part")?;
        let source = if source_text.eq_ignore_ascii_case("all") {
            SourcePart::All
        } else {
            SourcePart::Part(Part::from_str(source_text).map_err(fail)?)
        };
        let input = build_pair(query, doc, &engine.vocab, engine.max_len).map_err(fail)?;
        let (_, trace) = forward(&input, &engine.weights, None).map_err(fail)?;
        let masses = direction_mass(&trace, &input.parts, Direction { target, source })
            .ok_or_else(|| fail(Error::Input("direction has an empty span".into())))?;
        for (i, m) in masses.iter().enumerate() {
            *out_masses.add(i) = *m;
        }
        Ok(())
    })
}

/// Singular-vector alignment of one head's query-key form: writes the
/// normalized score to `out_normalized` and the unnormalized sum to
/// `out_raw`.
///
/// # Safety
///
/// `engine` must be a live handle; out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn mp_head_alignment(
    engine: *const MpEngine,
    layer: usize,
    head: usize,
    out_normalized: *mut f64,
    out_raw: *mut f64,
) -> MpStatus {
    guarded(|| {
        if engine.is_null() || out_normalized.is_null() || out_raw.is_null() {
            set_error("engine and out pointers must not be null".into());
            return Err(MpStatus::NullArgument);
        }
        let engine = &*engine;
        let (b, c) = head_bilinear(&engine.weights, layer, head).map_err(fail)?;
        let (norm, raw) = svd_alignment(&b, &c).map_err(fail)?;
        *out_normalized = norm;
        *out_raw = raw;
        Ok(())
    })
}

/// nDCG@k of a ranked grade list against an ideal grade multiset.
/// Grades below 0 count as gain 0.
///
/// # Safety
///
/// `ranked` must point to `ranked_len` bytes and `ideal` to `ideal_len`.
#[no_mangle]
pub unsafe extern "C" fn mp_ndcg_at_k(
    ranked: *const i8,
    ranked_len: usize,
    ideal: *const i8,
    ideal_len: usize,
    k: usize,
) -> f64 {
    if (ranked.is_null() && ranked_len > 0) || (ideal.is_null() && ideal_len > 0) || k == 0 {
        return -1.0;
    }
    let ranked = std::slice::from_raw_parts(ranked, ranked_len);
    let ideal = std::slice::from_raw_parts(ideal, ideal_len);
    ndcg_at_k(ranked, ideal, k)
}
