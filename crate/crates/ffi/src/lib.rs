//! C interface to the TQTL parser and trace evaluator.
//!
//! Every fallible function returns a [`PtqStatus`] and writes its result
//! through an out-pointer. On failure a description is available from
//! [`ptq_last_error_message`] on the same thread. Objects are opaque and
//! must be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::str::FromStr;

use proto_tqtl::specs::{Builtin, SpecParams};
use proto_tqtl::tqtl::{parse, pretty_print, scope_check, Evaluator, Formula, Verdict};
use proto_tqtl::{read_trace, ClassSource, Label, PrototypeMeta, Trace, TraceError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ScopeError = 4,
    IoError = 5,
    InvalidTrace = 6,
    EvalError = 7,
    InvalidArgument = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtqVerdict {
    Sat = 0,
    Unsat = 1,
    Inconclusive = 2,
}

/// Values accepted wherever a class is passed as `int32_t`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtqLabel {
    Real = 0,
    Fake = 1,
}

/// Values accepted for the `class_source` argument of [`ptq_evaluate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtqClassSource {
    Predicted = 0,
    GroundTruth = 1,
}

/// A parsed, scope-checked formula.
pub struct PtqFormula(Formula);

/// A validated similarity trace.
pub struct PtqTrace(Trace);

struct Failure(PtqStatus, String);

impl Failure {
    fn new(status: PtqStatus, message: impl ToString) -> Failure {
        Failure(status, message.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PtqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PtqStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal error: {message}"));
            PtqStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(PtqStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(PtqStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn object<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(PtqStatus::NullPointer, format!("{what} is null")))
}

fn out<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(PtqStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn label(v: i32, what: &str) -> Result<Label, Failure> {
    usize::try_from(v)
        .ok()
        .and_then(Label::from_index)
        .ok_or_else(|| Failure::new(PtqStatus::InvalidArgument, format!("{what}: {v} is not a class")))
}

fn trace_failure(e: TraceError) -> Failure {
    match e {
        TraceError::Io { .. } => Failure::new(PtqStatus::IoError, e),
        _ => Failure::new(PtqStatus::InvalidTrace, e),
    }
}

/// Parses and scope-checks a formula.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ptq_formula_parse(source: *const c_char, out_formula: *mut *mut PtqFormula) -> PtqStatus {
    guard(|| {
        out(out_formula, "out_formula")?;
        *out_formula = ptr::null_mut();
        let f = parse(text(source, "source")?).map_err(|e| Failure::new(PtqStatus::ParseError, e))?;
        if let Some(e) = scope_check(&f).first() {
            return Err(Failure::new(PtqStatus::ScopeError, e));
        }
        *out_formula = Box::into_raw(Box::new(PtqFormula(f)));
        Ok(())
    })
}

/// Builds `phi1`, `phi2` or `phi3` with the default parameters for the
/// given target class.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ptq_formula_builtin(
    name: *const c_char,
    target_class: i32,
    out_formula: *mut *mut PtqFormula,
) -> PtqStatus {
    guard(|| {
        out(out_formula, "out_formula")?;
        *out_formula = ptr::null_mut();
        let b = Builtin::from_str(text(name, "name")?).map_err(|e| Failure::new(PtqStatus::InvalidArgument, e))?;
        let params = SpecParams::for_class(label(target_class, "target_class")?);
        *out_formula = Box::into_raw(Box::new(PtqFormula(b.build(&params))));
        Ok(())
    })
}

/// Canonical text of a formula. Release with [`ptq_string_free`].
///
/// # Safety
/// `formula` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ptq_formula_to_string(formula: *const PtqFormula, out_text: *mut *mut c_char) -> PtqStatus {
    guard(|| {
        out(out_text, "out_text")?;
        *out_text = ptr::null_mut();
        let f = object(formula, "formula")?;
        let s = CString::new(pretty_print(&f.0)).map_err(|e| Failure::new(PtqStatus::InvalidUtf8, e))?;
        *out_text = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ptq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `formula` must be null or a formula returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ptq_formula_free(formula: *mut PtqFormula) {
    if !formula.is_null() {
        drop(Box::from_raw(formula));
    }
}

/// Reads a trace file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ptq_trace_read(path: *const c_char, out_trace: *mut *mut PtqTrace) -> PtqStatus {
    guard(|| {
        out(out_trace, "out_trace")?;
        *out_trace = ptr::null_mut();
        let t = read_trace(Path::new(text(path, "path")?)).map_err(trace_failure)?;
        *out_trace = Box::into_raw(Box::new(PtqTrace(t)));
        Ok(())
    })
}

/// Builds a trace from a row-major `frames x m` score table and the class of
/// each prototype.
///
/// # Safety
/// `scores` must point to `frames * m` doubles, `classes` to `m` integers,
/// `video_id` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ptq_trace_from_scores(
    video_id: *const c_char,
    scores: *const f64,
    frames: usize,
    m: usize,
    classes: *const i32,
    ground_truth: i32,
    predicted: i32,
    out_trace: *mut *mut PtqTrace,
) -> PtqStatus {
    guard(|| {
        out(out_trace, "out_trace")?;
        *out_trace = ptr::null_mut();
        let id = text(video_id, "video_id")?;
        let n = frames
            .checked_mul(m)
            .ok_or_else(|| Failure::new(PtqStatus::InvalidArgument, "frames * m overflows"))?;
        if (n > 0 && scores.is_null()) || (m > 0 && classes.is_null()) {
            return Err(Failure::new(PtqStatus::NullPointer, "scores or classes is null"));
        }
        let table = if n == 0 { &[][..] } else { std::slice::from_raw_parts(scores, n) };
        let classes = if m == 0 { &[][..] } else { std::slice::from_raw_parts(classes, m) };
        let catalog = classes
            .iter()
            .enumerate()
            .map(|(id, &c)| Ok(PrototypeMeta { id, class: label(c, "classes")? }))
            .collect::<Result<Vec<_>, Failure>>()?;
        let rows = if m == 0 { vec![Vec::new(); frames] } else { table.chunks(m).map(<[f64]>::to_vec).collect() };
        let t = Trace::from_scores(id, rows, catalog, label(ground_truth, "ground_truth")?, label(predicted, "predicted")?)
            .map_err(trace_failure)?;
        *out_trace = Box::into_raw(Box::new(PtqTrace(t)));
        Ok(())
    })
}

/// Number of frames, or 0 for a null trace.
///
/// # Safety
/// `trace` must be null or a trace returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ptq_trace_len(trace: *const PtqTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `trace` must be null or a trace returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ptq_trace_free(trace: *mut PtqTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Robustness of `formula` at frame 0 of `trace`. Infinite robustness is
/// reported as `±INFINITY`. Either out-pointer may be null.
///
/// # Safety
/// `formula` and `trace` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn ptq_evaluate(
    formula: *const PtqFormula,
    trace: *const PtqTrace,
    class_source: i32,
    out_robustness: *mut f64,
    out_verdict: *mut PtqVerdict,
) -> PtqStatus {
    guard(|| {
        let f = object(formula, "formula")?;
        let t = object(trace, "trace")?;
        let source = match class_source {
            0 => ClassSource::Predicted,
            1 => ClassSource::GroundTruth,
            v => return Err(Failure::new(PtqStatus::InvalidArgument, format!("class_source: {v}"))),
        };
        let r = Evaluator::new(&t.0)
            .with_class_source(source)
            .robustness(&f.0)
            .map_err(|e| Failure::new(PtqStatus::EvalError, e))?;
        if !out_robustness.is_null() {
            *out_robustness = r.to_f64();
        }
        if !out_verdict.is_null() {
            *out_verdict = match Verdict::from_robustness(r) {
                Verdict::Sat => PtqVerdict::Sat,
                Verdict::Unsat => PtqVerdict::Unsat,
                Verdict::Inconclusive => PtqVerdict::Inconclusive,
            };
        }
        Ok(())
    })
}

/// Message for the last call on this thread; empty after a success. The
/// pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn ptq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn ptq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
