//! C ABI over the embedding model and the staged pipeline.
//!
//! Conventions:
//!   - every fallible function returns a [`KgattrStatus`]; `Ok` is 0,
//!   - results travel through out-pointers, written only on `Ok`,
//!   - string arguments are NUL-terminated UTF-8,
//!   - models are opaque handles created by `kgattr_model_load` and
//!     released by `kgattr_model_free`,
//!   - after a non-`Ok` return, `kgattr_last_error_message` on the same
//!     thread describes the failure.
//!
//! The generated header lives in `include/kgattr.h`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_double};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use kgattr::embedding::{load_pretrained_with, EmbeddingModel};
use kgattr::matcher::cosine;
use kgattr::pipeline::{cmd_pipeline, load_config, Method};

/// Result of every fallible call in this ABI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgattrStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidString = 2,
    /// An out-buffer had the wrong length.
    BadLength = 3,
    /// The operation itself failed; see `kgattr_last_error_message`.
    Failure = 4,
    /// An internal invariant broke. The handle state is unspecified.
    Panic = 5,
}

/// Opaque embedding model handle.
pub struct KgattrModel(EmbeddingModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(message: String) -> KgattrStatus {
    let message = CString::new(message)
        .unwrap_or_else(|_| CString::new("error message contained NUL").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
    KgattrStatus::Failure
}

fn guard(f: impl FnOnce() -> KgattrStatus) -> KgattrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            fail("internal panic".to_string());
            KgattrStatus::Panic
        }
    }
}

/// Reads a required UTF-8 string argument.
///
/// # Safety
/// `s` must be null or point to a NUL-terminated string.
unsafe fn utf8_arg<'a>(s: *const c_char) -> Result<&'a str, KgattrStatus> {
    if s.is_null() {
        return Err(KgattrStatus::NullArgument);
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| KgattrStatus::InvalidString)
}

/// Message of the most recent failure on the calling thread, or null
/// when no call has failed yet. The pointer stays valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn kgattr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |msg| msg.as_ptr())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kgattr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Loads a vector file (the trainer's output, or any word2vec text
/// file) into a new model handle. `ngram_min`/`ngram_max` give the
/// character n-gram range for files that carry subword buckets; pass
/// 3 and 6 unless the producing configuration said otherwise. On `Ok`
/// the caller owns the handle written to `out_model` and must release
/// it with `kgattr_model_free`.
///
/// # Safety
/// `path` must be null or NUL-terminated; `out_model` must be null or
/// valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn kgattr_model_load(
    path: *const c_char,
    ngram_min: usize,
    ngram_max: usize,
    out_model: *mut *mut KgattrModel,
) -> KgattrStatus {
    guard(|| {
        if out_model.is_null() {
            return KgattrStatus::NullArgument;
        }
        let path = match utf8_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match load_pretrained_with(Path::new(path), ngram_min, ngram_max) {
            Ok(model) => {
                out_model.write(Box::into_raw(Box::new(KgattrModel(model))));
                KgattrStatus::Ok
            }
            Err(e) => fail(e.to_string()),
        }
    })
}

/// Releases a model handle. Null is a no-op.
///
/// # Safety
/// `model` must be null or a handle returned by `kgattr_model_load`
/// that has not been freed before.
#[no_mangle]
pub unsafe extern "C" fn kgattr_model_free(model: *mut KgattrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Vector dimensionality of the model.
///
/// # Safety
/// `model` must be null or a live handle; `out_dim` must be null or
/// valid for one write.
#[no_mangle]
pub unsafe extern "C" fn kgattr_model_dim(
    model: *const KgattrModel,
    out_dim: *mut usize,
) -> KgattrStatus {
    guard(|| {
        if model.is_null() || out_dim.is_null() {
            return KgattrStatus::NullArgument;
        }
        out_dim.write((*model).0.dim());
        KgattrStatus::Ok
    })
}

/// Number of in-vocabulary words.
///
/// # Safety
/// `model` must be null or a live handle; `out_size` must be null or
/// valid for one write.
#[no_mangle]
pub unsafe extern "C" fn kgattr_model_vocab_size(
    model: *const KgattrModel,
    out_size: *mut usize,
) -> KgattrStatus {
    guard(|| {
        if model.is_null() || out_size.is_null() {
            return KgattrStatus::NullArgument;
        }
        out_size.write((*model).0.vocab().len());
        KgattrStatus::Ok
    })
}

/// Writes the vector of `word` into `out`, which must hold exactly
/// `len == kgattr_model_dim` doubles. Out-of-vocabulary words compose
/// from character n-grams when the model has subword buckets and come
/// back as the zero vector otherwise.
///
/// # Safety
/// `model` must be null or a live handle; `word` null or
/// NUL-terminated; `out` null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn kgattr_model_word_vector(
    model: *const KgattrModel,
    word: *const c_char,
    out: *mut c_double,
    len: usize,
) -> KgattrStatus {
    guard(|| {
        if model.is_null() || out.is_null() {
            return KgattrStatus::NullArgument;
        }
        let word = match utf8_arg(word) {
            Ok(w) => w,
            Err(status) => return status,
        };
        let model = &(*model).0;
        if len != model.dim() {
            return KgattrStatus::BadLength;
        }
        let vector = model.word_vector(word);
        ptr::copy_nonoverlapping(vector.as_ptr(), out, len);
        KgattrStatus::Ok
    })
}

/// Cosine similarity of two words' vectors, written to `out`. Zero when
/// either vector is all zeros.
///
/// # Safety
/// `model` must be null or a live handle; `a` and `b` null or
/// NUL-terminated; `out` null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn kgattr_model_similarity(
    model: *const KgattrModel,
    a: *const c_char,
    b: *const c_char,
    out: *mut c_double,
) -> KgattrStatus {
    guard(|| {
        if model.is_null() || out.is_null() {
            return KgattrStatus::NullArgument;
        }
        let (a, b) = match (utf8_arg(a), utf8_arg(b)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(status), _) | (_, Err(status)) => return status,
        };
        let model = &(*model).0;
        out.write(cosine(&model.word_vector(a), &model.word_vector(b)));
        KgattrStatus::Ok
    })
}

/// Runs the full staged pipeline (preprocess, train when needed, match,
/// rank, and eval when labels are configured) for one method. `method`
/// is `"subword"`, `"wordvec"`, or `"textrank"`. Artifacts land in the
/// working directory named by the configuration file.
///
/// # Safety
/// `config_path` and `method` must each be null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn kgattr_pipeline_run(
    config_path: *const c_char,
    method: *const c_char,
) -> KgattrStatus {
    guard(|| {
        let config_path = match utf8_arg(config_path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let method: Method = match utf8_arg(method) {
            Ok(m) => match m.parse() {
                Ok(m) => m,
                Err(e) => return fail(format!("{e}")),
            },
            Err(status) => return status,
        };
        let cfg = match load_config(Path::new(config_path)) {
            Ok(cfg) => cfg,
            Err(e) => return fail(e.to_string()),
        };
        match cmd_pipeline(&cfg, method) {
            Ok(_) => KgattrStatus::Ok,
            Err(e) => fail(e.to_string()),
        }
    })
}
