use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use proto_tqtl::synth::script_trace;
use proto_tqtl::{write_trace, Label};
use proto_tqtl_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ptq_last_error_message()) }.to_string_lossy().into_owned()
}

fn formula(src: &str) -> (PtqStatus, *mut PtqFormula) {
    let src = CString::new(src).unwrap();
    let mut f = ptr::null_mut();
    (unsafe { ptq_formula_parse(src.as_ptr(), &mut f) }, f)
}

fn flat_trace(ground_truth: PtqLabel, predicted: PtqLabel) -> *mut PtqTrace {
    let scores = [0.9, 0.2, 0.9, 0.2, 0.9, 0.2];
    let classes = [PtqLabel::Fake as i32, PtqLabel::Real as i32];
    let id = CString::new("flat").unwrap();
    let mut t = ptr::null_mut();
    let s = unsafe {
        ptq_trace_from_scores(id.as_ptr(), scores.as_ptr(), 3, 2, classes.as_ptr(), ground_truth as i32, predicted as i32, &mut t)
    };
    assert_eq!(s, PtqStatus::Ok, "{}", last_error());
    t
}

fn evaluate(f: *const PtqFormula, t: *const PtqTrace, source: PtqClassSource) -> (f64, PtqVerdict) {
    let mut r = f64::NAN;
    let mut v = PtqVerdict::Inconclusive;
    assert_eq!(unsafe { ptq_evaluate(f, t, source as i32, &mut r, &mut v) }, PtqStatus::Ok, "{}", last_error());
    (r, v)
}

#[test]
fn parse_print_and_free() {
    let (s, f) = formula("freeze t . exists p at t . S(t, p) > 0.5");
    assert_eq!(s, PtqStatus::Ok);
    assert_eq!(last_error(), "");
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { ptq_formula_to_string(f, &mut text) }, PtqStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(text) }.to_str().unwrap(), "freeze t . exists p at t . S(t, p) > 0.5");
    unsafe {
        ptq_string_free(text);
        ptq_formula_free(f);
        ptq_string_free(ptr::null_mut());
        ptq_formula_free(ptr::null_mut());
        ptq_trace_free(ptr::null_mut());
    }
}

#[test]
fn parse_failures_have_codes_and_messages() {
    let (s, f) = formula("always (true");
    assert_eq!(s, PtqStatus::ParseError);
    assert!(f.is_null());
    assert!(last_error().contains("syntax error at 1:13"), "{}", last_error());

    let (s, _) = formula("always freeze t . S(t, q) < 0.4");
    assert_eq!(s, PtqStatus::ScopeError);
    assert!(last_error().contains("`q`"));

    let mut f = ptr::null_mut();
    assert_eq!(unsafe { ptq_formula_parse(ptr::null(), &mut f) }, PtqStatus::NullPointer);
    let bad = [0xffu8, 0];
    assert_eq!(unsafe { ptq_formula_parse(bad.as_ptr().cast(), &mut f) }, PtqStatus::InvalidUtf8);
    let src = CString::new("true").unwrap();
    assert_eq!(unsafe { ptq_formula_parse(src.as_ptr(), ptr::null_mut()) }, PtqStatus::NullPointer);

    let deep = "(".repeat(100_000);
    assert_eq!(formula(&deep).0, PtqStatus::ParseError);
}

#[test]
fn builtin_specs_match_their_sources() {
    let name = CString::new("phi2").unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { ptq_formula_builtin(name.as_ptr(), PtqLabel::Fake as i32, &mut f) }, PtqStatus::Ok);
    let t = flat_trace(PtqLabel::Fake, PtqLabel::Fake);
    let (r, v) = evaluate(f, t, PtqClassSource::Predicted);
    assert_eq!(v, PtqVerdict::Sat);
    assert!((r - 0.1).abs() < 1e-12, "{r}");

    let real = flat_trace(PtqLabel::Real, PtqLabel::Real);
    assert_eq!(evaluate(f, real, PtqClassSource::Predicted), (f64::INFINITY, PtqVerdict::Sat));

    let unknown = CString::new("phi9").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { ptq_formula_builtin(unknown.as_ptr(), 1, &mut g) }, PtqStatus::InvalidArgument);
    assert_eq!(unsafe { ptq_formula_builtin(name.as_ptr(), 7, &mut g) }, PtqStatus::InvalidArgument);
    assert!(g.is_null());
    unsafe {
        ptq_formula_free(f);
        ptq_trace_free(t);
        ptq_trace_free(real);
    }
}

#[test]
fn evaluation_reports_infinities_and_zero() {
    let t = flat_trace(PtqLabel::Real, PtqLabel::Fake);
    let (_, f) = formula("class() == FAKE");
    assert_eq!(evaluate(f, t, PtqClassSource::Predicted), (f64::INFINITY, PtqVerdict::Sat));
    assert_eq!(evaluate(f, t, PtqClassSource::GroundTruth), (f64::NEG_INFINITY, PtqVerdict::Unsat));
    let (_, g) = formula("freeze t . exists p at t . S(t, p) == 0.9");
    assert_eq!(evaluate(g, t, PtqClassSource::Predicted), (0.0, PtqVerdict::Inconclusive));

    let mut r = 0.0;
    assert_eq!(unsafe { ptq_evaluate(f, t, 5, &mut r, ptr::null_mut()) }, PtqStatus::InvalidArgument);
    assert_eq!(unsafe { ptq_evaluate(ptr::null(), t, 0, &mut r, ptr::null_mut()) }, PtqStatus::NullPointer);
    assert_eq!(unsafe { ptq_evaluate(f, t, 0, ptr::null_mut(), ptr::null_mut()) }, PtqStatus::Ok);
    unsafe {
        ptq_formula_free(f);
        ptq_formula_free(g);
        ptq_trace_free(t);
    }
}

#[test]
fn invalid_traces_are_rejected() {
    let id = CString::new("x").unwrap();
    let mut t = ptr::null_mut();
    let scores = [1.5];
    let classes = [0];
    let s = unsafe { ptq_trace_from_scores(id.as_ptr(), scores.as_ptr(), 1, 1, classes.as_ptr(), 0, 0, &mut t) };
    assert_eq!(s, PtqStatus::InvalidTrace);
    assert!(!last_error().is_empty());
    let s = unsafe { ptq_trace_from_scores(id.as_ptr(), ptr::null(), 0, 1, classes.as_ptr(), 0, 0, &mut t) };
    assert_eq!(s, PtqStatus::InvalidTrace);
    let bad_class = [3];
    let scores = [0.5];
    let s = unsafe { ptq_trace_from_scores(id.as_ptr(), scores.as_ptr(), 1, 1, bad_class.as_ptr(), 0, 0, &mut t) };
    assert_eq!(s, PtqStatus::InvalidArgument);
    let s = unsafe { ptq_trace_from_scores(id.as_ptr(), ptr::null(), 1, 1, classes.as_ptr(), 0, 0, &mut t) };
    assert_eq!(s, PtqStatus::NullPointer);
    assert!(t.is_null());
}

#[test]
fn trace_files_load_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.jsonl");
    let trace = script_trace("v", vec![vec![0.9, 0.2]; 5], &[Label::Fake, Label::Real], Label::Fake, Label::Fake).unwrap();
    write_trace(&trace, &path).unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { ptq_trace_read(c.as_ptr(), &mut t) }, PtqStatus::Ok);
    assert_eq!(unsafe { ptq_trace_len(t) }, 5);
    unsafe { ptq_trace_free(t) };

    let missing = CString::new(dir.path().join("nope.jsonl").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ptq_trace_read(missing.as_ptr(), &mut t) }, PtqStatus::IoError);
    assert!(last_error().contains("nope.jsonl"));
    std::fs::write(dir.path().join("bad.jsonl"), "{}\n").unwrap();
    let bad = CString::new(dir.path().join("bad.jsonl").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ptq_trace_read(bad.as_ptr(), &mut t) }, PtqStatus::InvalidTrace);
    assert!(t.is_null());
}

#[test]
fn errors_are_per_thread() {
    let _ = formula("(");
    assert!(!last_error().is_empty());
    std::thread::spawn(|| assert_eq!(last_error(), "")).join().unwrap();
    assert!(!last_error().is_empty());
}

#[test]
fn version_matches_the_package() {
    let v = unsafe { CStr::from_ptr(ptq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/proto_tqtl.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["ptq_formula_parse", "ptq_evaluate", "ptq_trace_from_scores", "PTQ_STATUS_PANIC", "PTQ_LABEL_FAKE"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-std=c99", "-fsyntax-only", "-x", "c"]).arg(&header).output() else {
        eprintln!("no C compiler, skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn c_example_links_and_runs() {
    let lib_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    if !lib_dir.join("libproto_tqtl_ffi.so").exists() {
        eprintln!("shared library not built, skipping");
        return;
    }
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("verify");
    let Ok(out) = Command::new("cc")
        .arg(root.join("examples/verify.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .args(["-lproto_tqtl_ffi", "-o"])
        .arg(&exe)
        .output()
    else {
        eprintln!("no C compiler, skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let path = dir.path().join("v.jsonl");
    let trace = script_trace("v", vec![vec![0.9, 0.2]; 5], &[Label::Fake, Label::Real], Label::Fake, Label::Fake).unwrap();
    write_trace(&trace, &path).unwrap();
    let run = |f: &str| Command::new(&exe).arg(&path).arg(f).env("LD_LIBRARY_PATH", &lib_dir).output().unwrap();
    let out = run("always freeze t . forall p at t . S(t, p) < 0.95");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "SAT\t0.05\n");
    let out = run("S(t, p) < 1");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unbound"));
}
