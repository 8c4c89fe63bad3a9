//! C interface to the fragment classifier and the randomness suite.
//!
//! Every function returns an [`FsStatus`]; on failure a message is kept per
//! thread and can be fetched with [`fs_last_error`]. Models are opaque
//! handles released with [`fs_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use fragsleuth::classifier::{Checkpoint, ClassifierError};
use fragsleuth::corpus::{Fragment, FRAGMENT_SIZE};
use fragsleuth::randtest::{run_suite, StsConfig, TestName, Verdict};

/// Bytes per fragment accepted by the prediction and test entry points.
pub const FS_FRAGMENT_SIZE: usize = 4096;
/// Number of tests in the randomness suite.
pub const FS_NUM_TESTS: usize = 15;

const _: () = assert!(FS_FRAGMENT_SIZE == FRAGMENT_SIZE);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    BadModel = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

/// Per-test outcome: 0 pass, 1 fail, 2 preconditions not met.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsVerdict {
    Pass = 0,
    Fail = 1,
    Inapplicable = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FsTestOutcome {
    /// Smallest p-value the test produced; NaN when inapplicable.
    pub min_p: f64,
    pub verdict: FsVerdict,
}

/// Loaded classifier.
pub struct FsModel {
    checkpoint: Checkpoint,
    class_names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: FsStatus, message: impl std::fmt::Display) -> FsStatus {
    let text = CString::new(message.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
    status
}

fn guard(f: impl FnOnce() -> FsStatus + std::panic::UnwindSafe) -> FsStatus {
    match std::panic::catch_unwind(f) {
        Ok(s) => s,
        Err(_) => fail(FsStatus::Internal, "internal panic"),
    }
}

/// Message describing the most recent failure on this thread, or an empty
/// string. The pointer stays valid until the next failing call on the thread.
#[no_mangle]
pub extern "C" fn fs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a checkpoint from `path` into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_model_load(path: *const c_char, out: *mut *mut FsModel) -> FsStatus {
    if path.is_null() || out.is_null() {
        return fail(FsStatus::NullPointer, "null argument");
    }
    *out = ptr::null_mut();
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        return fail(FsStatus::InvalidArgument, "path is not UTF-8");
    };
    let path = path.to_owned();
    let loaded = std::panic::catch_unwind(move || Checkpoint::load(Path::new(&path)));
    let checkpoint = match loaded {
        Ok(Ok(c)) => c,
        Ok(Err(e @ ClassifierError::Io { .. })) => return fail(FsStatus::Io, e),
        Ok(Err(e)) => return fail(FsStatus::BadModel, e),
        Err(_) => return fail(FsStatus::Internal, "internal panic"),
    };
    let class_names = checkpoint
        .network
        .classes()
        .iter()
        .map(|c| CString::new(c.as_str()).unwrap_or_default())
        .collect();
    *out = Box::into_raw(Box::new(FsModel {
        checkpoint,
        class_names,
    }));
    FsStatus::Ok
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`fs_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fs_model_free(model: *mut FsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of classes the model distinguishes; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_model_num_classes(model: *const FsModel) -> usize {
    model.as_ref().map_or(0, |m| m.class_names.len())
}

/// Name of class `index`, owned by the model; null if out of range.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_model_class_name(model: *const FsModel, index: usize) -> *const c_char {
    match model.as_ref().and_then(|m| m.class_names.get(index)) {
        Some(c) => c.as_ptr(),
        None => {
            fail(FsStatus::InvalidArgument, format!("class index {index} out of range"));
            ptr::null()
        }
    }
}

/// Classifies one fragment of exactly [`FS_FRAGMENT_SIZE`] bytes. Writes the
/// winning class index to `*label` and, when `probabilities` is non-null,
/// `capacity` (at least the class count) probabilities.
///
/// # Safety
/// `data` must point to `len` readable bytes, `label` must be valid, and
/// `probabilities` null or writable for `capacity` floats.
#[no_mangle]
pub unsafe extern "C" fn fs_model_predict(
    model: *const FsModel,
    data: *const u8,
    len: usize,
    label: *mut usize,
    probabilities: *mut f32,
    capacity: usize,
) -> FsStatus {
    let (Some(model), false, false) = (model.as_ref(), data.is_null(), label.is_null()) else {
        return fail(FsStatus::NullPointer, "null argument");
    };
    if len != FS_FRAGMENT_SIZE {
        return fail(FsStatus::InvalidArgument, format!("expected {FS_FRAGMENT_SIZE} bytes, got {len}"));
    }
    let k = model.class_names.len();
    if !probabilities.is_null() && capacity < k {
        return fail(FsStatus::BufferTooSmall, format!("{k} probabilities, room for {capacity}"));
    }
    let bytes = std::slice::from_raw_parts(data, len);
    let frag = Fragment::new(bytes, "").expect("length checked");
    let net = &model.checkpoint.network;
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| net.predict_fragments(&[frag], 1)));
    match result {
        Ok(Ok(mut preds)) => {
            let p = preds.remove(0);
            *label = p.label;
            if !probabilities.is_null() {
                ptr::copy_nonoverlapping(p.probabilities.as_ptr(), probabilities, k);
            }
            FsStatus::Ok
        }
        Ok(Err(e)) => fail(FsStatus::BadModel, e),
        Err(_) => fail(FsStatus::Internal, "internal panic"),
    }
}

/// Name of test `index` in suite order; null if out of range.
#[no_mangle]
pub extern "C" fn fs_test_name(index: usize) -> *const c_char {
    const NAMES: [&CStr; FS_NUM_TESTS] = [
        c"frequency",
        c"block_frequency",
        c"runs",
        c"longest_run",
        c"rank",
        c"dft",
        c"non_overlapping_template",
        c"overlapping_template",
        c"universal",
        c"linear_complexity",
        c"serial",
        c"approximate_entropy",
        c"cumulative_sums",
        c"random_excursions",
        c"random_excursions_variant",
    ];
    NAMES.get(index).map_or(ptr::null(), |n| n.as_ptr())
}

/// Runs the randomness suite on one fragment of exactly
/// [`FS_FRAGMENT_SIZE`] bytes, writing [`FS_NUM_TESTS`] outcomes in
/// [`fs_test_name`] order. `paper_mode` nonzero selects the relaxed
/// applicability rules.
///
/// # Safety
/// `data` must point to `len` readable bytes and `out` to `capacity`
/// writable outcomes.
#[no_mangle]
pub unsafe extern "C" fn fs_sts_run(
    data: *const u8,
    len: usize,
    paper_mode: i32,
    out: *mut FsTestOutcome,
    capacity: usize,
) -> FsStatus {
    if data.is_null() || out.is_null() {
        return fail(FsStatus::NullPointer, "null argument");
    }
    if len != FS_FRAGMENT_SIZE {
        return fail(FsStatus::InvalidArgument, format!("expected {FS_FRAGMENT_SIZE} bytes, got {len}"));
    }
    if capacity < FS_NUM_TESTS {
        return fail(FsStatus::BufferTooSmall, format!("{FS_NUM_TESTS} outcomes, room for {capacity}"));
    }
    let bytes = std::slice::from_raw_parts(data, len).to_vec();
    let out = std::slice::from_raw_parts_mut(out, FS_NUM_TESTS);
    guard(std::panic::AssertUnwindSafe(move || {
        let frag = Fragment::new(&bytes, "").expect("length checked");
        let cfg = StsConfig {
            paper_mode: paper_mode != 0,
            ..StsConfig::default()
        };
        let results = run_suite(&frag, &cfg);
        for (slot, test) in out.iter_mut().zip(TestName::ALL) {
            let r = results.iter().find(|r| r.test == test).expect("suite covers every test");
            *slot = FsTestOutcome {
                min_p: if r.p_values.is_empty() { f64::NAN } else { r.min_p() },
                verdict: match r.verdict {
                    Verdict::Pass => FsVerdict::Pass,
                    Verdict::Fail => FsVerdict::Fail,
                    Verdict::Inapplicable => FsVerdict::Inapplicable,
                },
            };
        }
        FsStatus::Ok
    }))
}
