//! C ABI over the scholmetrics core.
//!
//! The contract mirrors `include/scholmetrics.h`: every fallible function
//! returns an [`SmStatus`], writes its result through an out-pointer only on
//! `SM_OK`, and records a human-readable message retrievable with
//! [`sm_last_error_message`] on any other status. Handles are opaque and
//! must be released with their matching `_free` function; strings returned
//! through out-pointers are owned by the caller and released with
//! [`sm_string_free`].
//!
//! All functions are thread-safe. The last-error buffer is thread-local, so
//! concurrent callers never see each other's messages.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use scholmetrics::classifier::{
    levenshtein_distance, levenshtein_similarity, Classifier, ClassifyError, Stopwords,
};
use scholmetrics::metrics::spearman_rho;
use scholmetrics::ontology::{load_ontology, OntologyError, TopicOntology};

/// Result of every fallible call. Values are stable ABI constants; see the
/// header for the C-side names.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmStatus {
    /// The call succeeded and any out-parameter was written.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// An argument was outside its documented domain.
    InvalidArgument = 3,
    /// Input text could not be parsed; the message names the line.
    ParseError = 4,
    /// The underlying file operation failed.
    IoError = 5,
    /// The requested quantity has no defined value for this input.
    Undefined = 6,
}

/// Opaque handle over a loaded topic ontology.
pub struct SmOntology(Arc<TopicOntology>);

/// Opaque handle over a configured classifier.
pub struct SmClassifier(Classifier);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    // Interior NULs cannot survive the C boundary.
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NULs were stripped");
    });
}

fn fail(status: SmStatus, message: &str) -> SmStatus {
    set_error(message);
    status
}

fn ontology_error(err: &OntologyError) -> SmStatus {
    match err {
        OntologyError::Io(_) => SmStatus::IoError,
        _ => SmStatus::ParseError,
    }
}

/// Borrows a C string as UTF-8, recording the failure on error.
///
/// # Safety
/// `ptr` must be null or a NUL-terminated string valid for the duration of
/// the call.
unsafe fn utf8_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, SmStatus> {
    if ptr.is_null() {
        return Err(fail(SmStatus::NullArgument, &format!("{name} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(SmStatus::InvalidUtf8, &format!("{name} is not valid UTF-8")))
}

fn require<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, SmStatus> {
    // Deref happens here so every handle access shares one null check.
    unsafe { ptr.as_ref() }
        .ok_or_else(|| fail(SmStatus::NullArgument, &format!("{name} is null")))
}

fn store<T>(out: *mut T, value: T, name: &str) -> SmStatus {
    if out.is_null() {
        return fail(SmStatus::NullArgument, &format!("{name} is null"));
    }
    unsafe { out.write(value) };
    SmStatus::Ok
}

/// Returns the library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Returns the message recorded by the last failing call on this thread,
/// or an empty string. The pointer stays valid until the next failing call
/// on the same thread.
#[no_mangle]
pub extern "C" fn sm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses an ontology from in-memory text (the tab-separated triple format).
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be a valid
/// destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_ontology_parse(
    text: *const c_char,
    out: *mut *mut SmOntology,
) -> SmStatus {
    let text = match utf8_arg(text, "text") {
        Ok(t) => t,
        Err(status) => return status,
    };
    match load_ontology(text.as_bytes()) {
        Ok(ontology) => store(
            out,
            Box::into_raw(Box::new(SmOntology(Arc::new(ontology)))),
            "out",
        ),
        Err(e) => fail(ontology_error(&e), &e.to_string()),
    }
}

/// Loads an ontology from a file path.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be a valid
/// destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_ontology_load_file(
    path: *const c_char,
    out: *mut *mut SmOntology,
) -> SmStatus {
    let path = match utf8_arg(path, "path") {
        Ok(p) => p,
        Err(status) => return status,
    };
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) => return fail(SmStatus::IoError, &format!("open {path}: {e}")),
    };
    match load_ontology(BufReader::new(file)) {
        Ok(ontology) => store(
            out,
            Box::into_raw(Box::new(SmOntology(Arc::new(ontology)))),
            "out",
        ),
        Err(e) => fail(ontology_error(&e), &format!("{path}: {e}")),
    }
}

/// Writes the number of topics in the ontology to `out_count`.
#[no_mangle]
pub extern "C" fn sm_ontology_topic_count(
    ontology: *const SmOntology,
    out_count: *mut usize,
) -> SmStatus {
    let ontology = match require(ontology, "ontology") {
        Ok(o) => o,
        Err(status) => return status,
    };
    store(out_count, ontology.0.len(), "out_count")
}

/// Releases an ontology handle. Null is a no-op. Classifiers created from
/// the handle stay valid; they hold their own reference.
///
/// # Safety
/// `ontology` must be null or a pointer obtained from an `sm_ontology_*`
/// constructor that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn sm_ontology_free(ontology: *mut SmOntology) {
    if !ontology.is_null() {
        drop(Box::from_raw(ontology));
    }
}

fn build_classifier(
    ontology: &SmOntology,
    stopwords: Stopwords,
    threshold: f64,
    out: *mut *mut SmClassifier,
) -> SmStatus {
    match Classifier::new(Arc::clone(&ontology.0), stopwords, threshold) {
        Ok(classifier) => store(out, Box::into_raw(Box::new(SmClassifier(classifier))), "out"),
        Err(e @ ClassifyError::InvalidThreshold(_)) => {
            fail(SmStatus::InvalidArgument, &e.to_string())
        }
    }
}

/// Creates a classifier with the built-in stopword list. `threshold` is the
/// minimum label similarity in (0, 1]; 1.0 means exact matching only.
#[no_mangle]
pub extern "C" fn sm_classifier_new(
    ontology: *const SmOntology,
    threshold: f64,
    out: *mut *mut SmClassifier,
) -> SmStatus {
    let ontology = match require(ontology, "ontology") {
        Ok(o) => o,
        Err(status) => return status,
    };
    build_classifier(ontology, Stopwords::builtin(), threshold, out)
}

/// Creates a classifier with a caller-supplied stopword list: one word per
/// line, `#` comments and blank lines ignored.
///
/// # Safety
/// `stopwords` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sm_classifier_new_with_stopwords(
    ontology: *const SmOntology,
    stopwords: *const c_char,
    threshold: f64,
    out: *mut *mut SmClassifier,
) -> SmStatus {
    let ontology = match require(ontology, "ontology") {
        Ok(o) => o,
        Err(status) => return status,
    };
    let text = match utf8_arg(stopwords, "stopwords") {
        Ok(t) => t,
        Err(status) => return status,
    };
    build_classifier(ontology, Stopwords::from_list("caller", text), threshold, out)
}

/// Classifies a text and writes one allocated annotation line to `out_line`:
/// `paper_id`, the direct topics, and the enrichment-only topics, separated
/// by tabs, each topic list joined with `;`. Release with `sm_string_free`.
///
/// # Safety
/// `paper_id` and `text` must be valid NUL-terminated strings; `out_line`
/// must be a valid destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_classifier_classify(
    classifier: *const SmClassifier,
    paper_id: *const c_char,
    text: *const c_char,
    out_line: *mut *mut c_char,
) -> SmStatus {
    let classifier = match require(classifier, "classifier") {
        Ok(c) => c,
        Err(status) => return status,
    };
    let paper_id = match utf8_arg(paper_id, "paper_id") {
        Ok(p) => p,
        Err(status) => return status,
    };
    let text = match utf8_arg(text, "text") {
        Ok(t) => t,
        Err(status) => return status,
    };
    let annotation = classifier.0.classify_text(paper_id, text);
    let join = |topics: &std::collections::BTreeSet<String>| {
        topics.iter().cloned().collect::<Vec<_>>().join(";")
    };
    let line = format!(
        "{}\t{}\t{}",
        annotation.paper_id,
        join(&annotation.direct_topics),
        join(&annotation.enriched_topics)
    );
    match CString::new(line) {
        Ok(cstring) => store(out_line, cstring.into_raw(), "out_line"),
        Err(_) => fail(
            SmStatus::InvalidArgument,
            "paper_id contains an interior NUL",
        ),
    }
}

/// Releases a classifier handle. Null is a no-op.
///
/// # Safety
/// `classifier` must be null or a pointer obtained from an
/// `sm_classifier_new*` constructor that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn sm_classifier_free(classifier: *mut SmClassifier) {
    if !classifier.is_null() {
        drop(Box::from_raw(classifier));
    }
}

/// Releases a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be null or a pointer this library returned through an
/// out-parameter that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn sm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Writes the Levenshtein edit distance between two UTF-8 strings, counted
/// over Unicode scalar values.
///
/// # Safety
/// `a` and `b` must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn sm_levenshtein_distance(
    a: *const c_char,
    b: *const c_char,
    out_distance: *mut usize,
) -> SmStatus {
    let a = match utf8_arg(a, "a") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let b = match utf8_arg(b, "b") {
        Ok(s) => s,
        Err(status) => return status,
    };
    store(out_distance, levenshtein_distance(a, b), "out_distance")
}

/// Writes the normalized Levenshtein similarity in [0, 1]; two empty
/// strings are fully similar.
///
/// # Safety
/// `a` and `b` must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn sm_levenshtein_similarity(
    a: *const c_char,
    b: *const c_char,
    out_similarity: *mut f64,
) -> SmStatus {
    let a = match utf8_arg(a, "a") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let b = match utf8_arg(b, "b") {
        Ok(s) => s,
        Err(status) => return status,
    };
    store(out_similarity, levenshtein_similarity(a, b), "out_similarity")
}

/// Writes Spearman's rank correlation between two length-`len` arrays.
/// Returns `SM_UNDEFINED` when either array has zero rank variance and
/// `SM_INVALID_ARGUMENT` when `len < 2` or a value is not finite.
///
/// # Safety
/// `xs` and `ys` must point to `len` readable doubles each.
#[no_mangle]
pub unsafe extern "C" fn sm_spearman_rho(
    xs: *const f64,
    ys: *const f64,
    len: usize,
    out_rho: *mut f64,
) -> SmStatus {
    if xs.is_null() || ys.is_null() {
        return fail(SmStatus::NullArgument, "xs or ys is null");
    }
    let xs = std::slice::from_raw_parts(xs, len);
    let ys = std::slice::from_raw_parts(ys, len);
    match spearman_rho(xs, ys) {
        Ok(Some(rho)) => store(out_rho, rho, "out_rho"),
        Ok(None) => fail(
            SmStatus::Undefined,
            "correlation is undefined: zero rank variance",
        ),
        Err(e) => fail(SmStatus::InvalidArgument, &e.to_string()),
    }
}
