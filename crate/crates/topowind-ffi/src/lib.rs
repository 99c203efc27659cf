//! C ABI over the winding pipeline: the lattice winding oracle, trained
//! autoencoder inference, and probe prediction.
//!
//! Conventions:
//! - Handles (`TwAutoencoder`, `TwProbe`) are opaque; create them with the
//!   `_load` functions and release them with the matching `_free`.
//! - Every fallible function returns a `TW_*` status code and writes its
//!   results through out pointers, which it touches only on `TW_OK`.
//! - On failure, `tw_last_error()` returns a message for the current
//!   thread, valid until the next failing call on that thread.
//! - Buffers are caller-allocated; their lengths are passed explicitly and
//!   checked. No function takes ownership of caller memory.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use topowind::ae::Autoencoder;
use topowind::checkpoint::Checkpoint;
use topowind::net::Tensor;
use topowind::probe::{class_of, rank_of_truth, Probe};
use topowind::topo::winding_number;

/// Success.
pub const TW_OK: i32 = 0;
/// A required pointer argument was null.
pub const TW_ERR_NULL_ARGUMENT: i32 = 1;
/// A string argument was not valid UTF-8.
pub const TW_ERR_INVALID_UTF8: i32 = 2;
/// File could not be read or parsed as the expected artifact.
pub const TW_ERR_IO: i32 = 3;
/// Input lengths or values violate the callee's contract.
pub const TW_ERR_BAD_INPUT: i32 = 4;
/// Internal invariant failure; report this as a bug.
pub const TW_ERR_INTERNAL: i32 = 5;

/// Number of winding classes the probe distinguishes (labels -5..=+5).
pub const TW_CLASSES: usize = 11;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let text = msg.to_string().replace('\0', "?");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).unwrap_or_default();
    });
}

fn fail(code: i32, msg: impl std::fmt::Display) -> i32 {
    set_error(msg);
    code
}

/// Message for the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tw_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Runs a body, converting panics into `TW_ERR_INTERNAL` instead of
/// unwinding across the ABI boundary.
fn guarded(body: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(_) => fail(TW_ERR_INTERNAL, "internal panic"),
    }
}

/// Reads a caller slice after null checks.
///
/// Safety: `ptr` must point to `len` readable elements.
unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, i32> {
    if ptr.is_null() {
        return Err(fail(TW_ERR_NULL_ARGUMENT, "path is null"));
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(e) => Err(fail(TW_ERR_INVALID_UTF8, format!("path is not UTF-8: {e}"))),
    }
}

/// Winding number of a closed complex-valued lattice configuration.
///
/// `re` and `im` each hold `len` samples of one period. On success writes
/// the rounded integer winding to `out_n` and the raw (pre-rounding) value
/// to `out_raw`; either out pointer may be null to skip that result.
///
/// # Safety
/// `re` and `im` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn tw_winding_number(
    re: *const f64,
    im: *const f64,
    len: usize,
    out_n: *mut i64,
    out_raw: *mut f64,
) -> i32 {
    guarded(|| {
        let (Some(re), Some(im)) = (slice_arg(re, len), slice_arg(im, len)) else {
            return fail(TW_ERR_NULL_ARGUMENT, "re or im is null");
        };
        match winding_number(re, im) {
            Ok(w) => {
                if !out_n.is_null() {
                    *out_n = w.n;
                }
                if !out_raw.is_null() {
                    *out_raw = w.raw;
                }
                TW_OK
            }
            Err(e) => fail(TW_ERR_BAD_INPUT, e),
        }
    })
}

/// Opaque trained-autoencoder handle.
pub struct TwAutoencoder {
    inner: Autoencoder,
}

/// Opaque trained-probe handle.
pub struct TwProbe {
    inner: Probe,
}

/// Loads an autoencoder checkpoint file into a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tw_autoencoder_load(
    path: *const c_char,
    out: *mut *mut TwAutoencoder,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return fail(TW_ERR_NULL_ARGUMENT, "out handle is null");
        }
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        let ck = match Checkpoint::load(path) {
            Ok(ck) => ck,
            Err(e) => return fail(TW_ERR_IO, format!("{}: {e}", path.display())),
        };
        match Autoencoder::from_checkpoint(&ck) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(TwAutoencoder { inner: model }));
                TW_OK
            }
            Err(e) => fail(TW_ERR_IO, format!("{}: {e}", path.display())),
        }
    })
}

/// Releases a handle from `tw_autoencoder_load`. Null is a no-op.
///
/// # Safety
/// `handle` must be null or a pointer this library returned, freed once.
#[no_mangle]
pub unsafe extern "C" fn tw_autoencoder_free(handle: *mut TwAutoencoder) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of lattice sites the model consumes (L).
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tw_autoencoder_input_len(
    handle: *const TwAutoencoder,
    out: *mut usize,
) -> i32 {
    guarded(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return fail(TW_ERR_NULL_ARGUMENT, "handle or out is null");
        };
        *out = h.inner.l();
        TW_OK
    })
}

/// Total feature-map length the encoder emits (4 filters x L/8 sites).
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tw_autoencoder_feature_len(
    handle: *const TwAutoencoder,
    out: *mut usize,
) -> i32 {
    guarded(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return fail(TW_ERR_NULL_ARGUMENT, "handle or out is null");
        };
        *out = 4 * h.inner.feature_sites();
        TW_OK
    })
}

fn input_tensor_from(re: &[f64], im: &[f64]) -> Tensor {
    let mut data = Vec::with_capacity(2 * re.len());
    data.extend_from_slice(re);
    data.extend_from_slice(im);
    Tensor::new(vec![2, re.len()], data).expect("lengths match by construction")
}

/// Encodes one configuration into its feature map, written filter-major to
/// `out_features` (length `tw_autoencoder_feature_len`).
///
/// # Safety
/// `re`/`im` must hold `len` doubles; `out_features` must hold
/// `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tw_autoencoder_encode(
    handle: *const TwAutoencoder,
    re: *const f64,
    im: *const f64,
    len: usize,
    out_features: *mut f64,
    out_len: usize,
) -> i32 {
    guarded(|| {
        let Some(h) = handle.as_ref() else {
            return fail(TW_ERR_NULL_ARGUMENT, "handle is null");
        };
        let (Some(re), Some(im)) = (slice_arg(re, len), slice_arg(im, len)) else {
            return fail(TW_ERR_NULL_ARGUMENT, "re or im is null");
        };
        if out_features.is_null() {
            return fail(TW_ERR_NULL_ARGUMENT, "out_features is null");
        }
        if len != h.inner.l() {
            return fail(
                TW_ERR_BAD_INPUT,
                format!("input has {len} sites, model wants {}", h.inner.l()),
            );
        }
        let want = 4 * h.inner.feature_sites();
        if out_len != want {
            return fail(
                TW_ERR_BAD_INPUT,
                format!("out_len is {out_len}, feature map holds {want}"),
            );
        }
        match h.inner.encode(&input_tensor_from(re, im)) {
            Ok(map) => {
                std::slice::from_raw_parts_mut(out_features, out_len)
                    .copy_from_slice(&map.data);
                TW_OK
            }
            Err(e) => fail(TW_ERR_BAD_INPUT, e),
        }
    })
}

/// Reconstructs one configuration through the bottleneck; writes L doubles
/// to each of `out_re` and `out_im`.
///
/// # Safety
/// `re`/`im` must hold `len` doubles; `out_re`/`out_im` must hold
/// `out_len` writable doubles each.
#[no_mangle]
pub unsafe extern "C" fn tw_autoencoder_reconstruct(
    handle: *const TwAutoencoder,
    re: *const f64,
    im: *const f64,
    len: usize,
    out_re: *mut f64,
    out_im: *mut f64,
    out_len: usize,
) -> i32 {
    guarded(|| {
        let Some(h) = handle.as_ref() else {
            return fail(TW_ERR_NULL_ARGUMENT, "handle is null");
        };
        let (Some(re), Some(im)) = (slice_arg(re, len), slice_arg(im, len)) else {
            return fail(TW_ERR_NULL_ARGUMENT, "re or im is null");
        };
        if out_re.is_null() || out_im.is_null() {
            return fail(TW_ERR_NULL_ARGUMENT, "out_re or out_im is null");
        }
        let l = h.inner.l();
        if len != l {
            return fail(TW_ERR_BAD_INPUT, format!("input has {len} sites, model wants {l}"));
        }
        if out_len != l {
            return fail(TW_ERR_BAD_INPUT, format!("out_len is {out_len}, model emits {l}"));
        }
        match h.inner.reconstruct(&input_tensor_from(re, im)) {
            Ok(flat) => {
                std::slice::from_raw_parts_mut(out_re, l).copy_from_slice(&flat.data[..l]);
                std::slice::from_raw_parts_mut(out_im, l).copy_from_slice(&flat.data[l..]);
                TW_OK
            }
            Err(e) => fail(TW_ERR_BAD_INPUT, e),
        }
    })
}

/// Loads a probe checkpoint file into a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tw_probe_load(path: *const c_char, out: *mut *mut TwProbe) -> i32 {
    guarded(|| {
        if out.is_null() {
            return fail(TW_ERR_NULL_ARGUMENT, "out handle is null");
        }
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        let ck = match Checkpoint::load(path) {
            Ok(ck) => ck,
            Err(e) => return fail(TW_ERR_IO, format!("{}: {e}", path.display())),
        };
        match Probe::from_checkpoint(&ck) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(TwProbe { inner: p }));
                TW_OK
            }
            Err(e) => fail(TW_ERR_IO, format!("{}: {e}", path.display())),
        }
    })
}

/// Releases a handle from `tw_probe_load`. Null is a no-op.
///
/// # Safety
/// `handle` must be null or a pointer this library returned, freed once.
#[no_mangle]
pub unsafe extern "C" fn tw_probe_free(handle: *mut TwProbe) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Full feature-map length the probe expects (4 filters x sites, even when
/// it reads fewer filters).
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tw_probe_feature_len(
    handle: *const TwProbe,
    out: *mut usize,
) -> i32 {
    guarded(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return fail(TW_ERR_NULL_ARGUMENT, "handle or out is null");
        };
        *out = 4 * h.inner.sites();
        TW_OK
    })
}

fn feature_map_from(values: &[f64]) -> topowind::ae::FeatureMap {
    topowind::ae::FeatureMap {
        sample_id: 0,
        pattern: String::new(),
        label_nw: 0,
        values: values.to_vec(),
    }
}

/// Class probabilities for one feature map; writes `TW_CLASSES` doubles.
/// Class c corresponds to winding number c - 5.
///
/// # Safety
/// `features` must hold `len` doubles; `out_probs` must hold `out_len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tw_probe_predict(
    handle: *const TwProbe,
    features: *const f64,
    len: usize,
    out_probs: *mut f64,
    out_len: usize,
) -> i32 {
    guarded(|| {
        let Some(h) = handle.as_ref() else {
            return fail(TW_ERR_NULL_ARGUMENT, "handle is null");
        };
        let Some(features) = slice_arg(features, len) else {
            return fail(TW_ERR_NULL_ARGUMENT, "features is null");
        };
        if out_probs.is_null() {
            return fail(TW_ERR_NULL_ARGUMENT, "out_probs is null");
        }
        if out_len != TW_CLASSES {
            return fail(
                TW_ERR_BAD_INPUT,
                format!("out_len is {out_len}, probe emits {TW_CLASSES}"),
            );
        }
        match h.inner.predict(&feature_map_from(features)) {
            Ok(probs) => {
                std::slice::from_raw_parts_mut(out_probs, out_len).copy_from_slice(&probs);
                TW_OK
            }
            Err(e) => fail(TW_ERR_BAD_INPUT, e),
        }
    })
}

/// Rank (1 = top) of the true winding number `n_w` among the probe's
/// predictions for one feature map.
///
/// # Safety
/// `features` must hold `len` doubles; `out_rank` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tw_probe_rank(
    handle: *const TwProbe,
    features: *const f64,
    len: usize,
    n_w: i64,
    out_rank: *mut usize,
) -> i32 {
    guarded(|| {
        let Some(h) = handle.as_ref() else {
            return fail(TW_ERR_NULL_ARGUMENT, "handle is null");
        };
        let Some(features) = slice_arg(features, len) else {
            return fail(TW_ERR_NULL_ARGUMENT, "features is null");
        };
        if out_rank.is_null() {
            return fail(TW_ERR_NULL_ARGUMENT, "out_rank is null");
        }
        let class = match class_of(0, n_w) {
            Ok(c) => c,
            Err(e) => return fail(TW_ERR_BAD_INPUT, e),
        };
        match h.inner.predict(&feature_map_from(features)) {
            Ok(probs) => {
                *out_rank = rank_of_truth(&probs, class);
                TW_OK
            }
            Err(e) => fail(TW_ERR_BAD_INPUT, e),
        }
    })
}
