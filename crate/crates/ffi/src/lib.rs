//! C ABI for loading a trained checkpoint, classifying text and rendering
//! reading traces.
//!
//! Every fallible call returns an [`SjStatus`]; on failure a message is kept
//! per thread and can be read with [`sj_last_error`]. Strings handed out by
//! the library must be released with [`sj_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sjlstm::checkpoint::SavedModel;
use sjlstm::corpus::Document;
use sjlstm::metrics::{episode_flops, CostModel};
use sjlstm::nn::softmax;
use sjlstm::reader::{read_document, trace, ReadOptions};
use sjlstm::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SjStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    InvalidCheckpoint = 4,
    EmptyDocument = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

/// Opaque model handle.
pub struct SjModel {
    inner: SavedModel,
    cost: CostModel,
    label_names: Vec<CString>,
}

/// Outcome of reading one document.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SjReading {
    /// Predicted class index.
    pub prediction: usize,
    /// Number of tokens in the document, punctuation included.
    pub tokens: usize,
    pub read: usize,
    pub skipped: usize,
    pub jumped: usize,
    /// Analytic FLOPs of this episode.
    pub flops: u64,
    /// Analytic FLOPs of a plain full read of the same document.
    pub flops_full_read: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let c = CString::new(message.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: SjStatus, message: impl Into<String>) -> SjStatus {
    set_error(message);
    status
}

fn status_of(e: &Error) -> SjStatus {
    match e {
        Error::Io { .. } => SjStatus::Io,
        Error::Checkpoint(_) | Error::Parse { .. } => SjStatus::InvalidCheckpoint,
        Error::EmptyDocument => SjStatus::EmptyDocument,
        _ => SjStatus::Internal,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SjStatus, String)>) -> SjStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SjStatus::Ok,
        Ok(Err((status, message))) => fail(status, message),
        Err(_) => fail(SjStatus::Internal, "internal panic"),
    }
}

fn lib_err(e: Error) -> (SjStatus, String) {
    (status_of(&e), e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SjStatus, String)> {
    if p.is_null() {
        return Err((SjStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SjStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn model_arg<'a>(model: *const SjModel) -> Result<&'a SjModel, (SjStatus, String)> {
    model
        .as_ref()
        .ok_or_else(|| (SjStatus::NullPointer, "model is null".to_string()))
}

fn document(model: &SjModel, text: &str) -> Result<Document, (SjStatus, String)> {
    Document::from_text(text, &model.inner.vocab, 0).map_err(lib_err)
}

fn options(force_read: bool) -> ReadOptions {
    if force_read {
        ReadOptions::force_read()
    } else {
        ReadOptions::greedy()
    }
}

/// Loads `checkpoint_path` and the vocab.txt / labels.txt beside it. On
/// success `*out` receives a handle to release with [`sj_model_free`].
///
/// # Safety
/// `checkpoint_path` must be a NUL-terminated string and `out` a valid
/// pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sj_model_load(checkpoint_path: *const c_char, out: *mut *mut SjModel) -> SjStatus {
    guard(|| {
        if out.is_null() {
            return Err((SjStatus::NullPointer, "out is null".into()));
        }
        *out = ptr::null_mut();
        let path = str_arg(checkpoint_path, "checkpoint_path")?;
        let inner = SavedModel::load(Path::new(path)).map_err(lib_err)?;
        let label_names = (0..inner.labels.len())
            .map(|i| CString::new(inner.labels.name(i).unwrap_or("").replace('\0', " ")).unwrap_or_default())
            .collect();
        let cost = CostModel::from(inner.params.dims());
        *out = Box::into_raw(Box::new(SjModel {
            inner,
            cost,
            label_names,
        }));
        Ok(())
    })
}

/// Releases a handle from [`sj_model_load`]. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sj_model_free(model: *mut SjModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of classes, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sj_model_num_classes(model: *const SjModel) -> usize {
    model.as_ref().map_or(0, |m| m.label_names.len())
}

/// Name of class `index`, owned by the model; null when out of range.
///
/// # Safety
/// `model` must be null or a live handle. The returned pointer is valid
/// until the model is freed.
#[no_mangle]
pub unsafe extern "C" fn sj_model_label(model: *const SjModel, index: usize) -> *const c_char {
    model
        .as_ref()
        .and_then(|m| m.label_names.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Reads `text` greedily (or every token when `force_read` is non-zero).
/// `reading` receives the prediction and counts; when `probs` is non-null it
/// receives the class probabilities and must hold `probs_len` >= the number
/// of classes.
///
/// # Safety
/// `model` must be a live handle, `text` a NUL-terminated string, `reading`
/// writable, and `probs` null or valid for `probs_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sj_model_classify(
    model: *const SjModel,
    text: *const c_char,
    force_read: i32,
    reading: *mut SjReading,
    probs: *mut f64,
    probs_len: usize,
) -> SjStatus {
    guard(|| {
        let m = model_arg(model)?;
        let text = str_arg(text, "text")?;
        if reading.is_null() {
            return Err((SjStatus::NullPointer, "reading is null".into()));
        }
        let classes = m.label_names.len();
        if !probs.is_null() && probs_len < classes {
            return Err((
                SjStatus::BufferTooSmall,
                format!("probs holds {probs_len} values, {classes} needed"),
            ));
        }
        let doc = document(m, text)?;
        // greedy reading without dropout draws nothing from the generator
        let mut rng = sjlstm::seeding::example_rng(0, sjlstm::seeding::Stream::Eval, 0, 0);
        let ep = read_document(&m.inner.params, &doc, &options(force_read != 0), &mut rng).map_err(lib_err)?;
        let t = &ep.trajectory;
        *reading = SjReading {
            prediction: t.prediction(),
            tokens: t.doc_len,
            read: t.tokens_read,
            skipped: t.tokens_skipped,
            jumped: t.tokens_jumped,
            flops: episode_flops(t, &m.cost).total(),
            flops_full_read: m.cost.full_read(t.doc_len).total(),
        };
        if !probs.is_null() {
            let p = softmax(&t.logits);
            std::slice::from_raw_parts_mut(probs, classes).copy_from_slice(&p);
        }
        Ok(())
    })
}

/// Renders the reading of `text` with `~skipped~` tokens and `[[jumped]]`
/// spans. `*out` receives a string to release with [`sj_string_free`].
///
/// # Safety
/// `model` must be a live handle, `text` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sj_model_trace(
    model: *const SjModel,
    text: *const c_char,
    force_read: i32,
    out: *mut *mut c_char,
) -> SjStatus {
    guard(|| {
        if out.is_null() {
            return Err((SjStatus::NullPointer, "out is null".into()));
        }
        *out = ptr::null_mut();
        let m = model_arg(model)?;
        let doc = document(m, str_arg(text, "text")?)?;
        let rendered = trace(&m.inner.params, &doc, force_read != 0).map_err(lib_err)?;
        *out = CString::new(rendered)
            .map_err(|_| (SjStatus::Internal, "trace contains NUL".to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sj_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread; empty if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sj_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
