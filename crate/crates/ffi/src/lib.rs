//! C ABI over the `autoseq` core.
//!
//! Every fallible call returns an `AutoseqStatus`; on failure the message is
//! kept per thread and read with `autoseq_last_error`. Automata live behind
//! the opaque `AutoseqDfa` handle, released with `autoseq_dfa_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use autoseq::automaton::{self, Dfa, LeadingZeroPolicy};
use autoseq::complexity;
use autoseq::exactmath::{self, ExponentC};
use autoseq::sequences::{self, SequenceSpec};
use autoseq::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AutoseqStatus {
    Ok = 0,
    InvalidArgument = 1,
    ResourceLimit = 2,
    Domain = 3,
    Parse = 4,
    Io = 5,
    NullPointer = 6,
    Panic = 7,
}

/// Opaque automaton handle.
pub struct AutoseqDfa {
    dfa: Dfa,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> AutoseqStatus {
    match e {
        Error::InvalidArgument(_) => AutoseqStatus::InvalidArgument,
        Error::ResourceLimit(_) => AutoseqStatus::ResourceLimit,
        Error::Domain(_) => AutoseqStatus::Domain,
        Error::Parse(_) => AutoseqStatus::Parse,
        Error::Io(_) => AutoseqStatus::Io,
    }
}

fn guard<F>(f: F) -> AutoseqStatus
where
    F: FnOnce() -> Result<(), (AutoseqStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AutoseqStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AutoseqStatus::Panic
        }
    }
}

fn lift<T>(r: autoseq::Result<T>) -> Result<T, (AutoseqStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (AutoseqStatus, String) {
    (AutoseqStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (AutoseqStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (AutoseqStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn dfa_arg<'a>(p: *const AutoseqDfa) -> Result<&'a Dfa, (AutoseqStatus, String)> {
    p.as_ref().map(|h| &h.dfa).ok_or_else(|| null("automaton handle"))
}

fn exponent(p: u32, q: u32) -> Result<ExponentC, (AutoseqStatus, String)> {
    lift(ExponentC::new(p, q))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), (AutoseqStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn autoseq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn autoseq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a builtin automaton: `thue-morse`, `mod:M:K`, `cerny:N`, `const:A:K`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn autoseq_dfa_builtin(name: *const c_char, out: *mut *mut AutoseqDfa) -> AutoseqStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let dfa = lift(automaton::builtin(name))?;
        put(out, Box::into_raw(Box::new(AutoseqDfa { dfa })), "out")
    })
}

/// Parses an automaton in the text format. With `repair_leading_zeros` the
/// initial state's 0-transition is redirected to itself instead of rejected.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn autoseq_dfa_parse(
    text: *const c_char,
    repair_leading_zeros: bool,
    out: *mut *mut AutoseqDfa,
) -> AutoseqStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let policy = if repair_leading_zeros { LeadingZeroPolicy::Repair } else { LeadingZeroPolicy::Reject };
        let dfa = lift(Dfa::parse(text, policy))?;
        put(out, Box::into_raw(Box::new(AutoseqDfa { dfa })), "out")
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `dfa` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn autoseq_dfa_free(dfa: *mut AutoseqDfa) {
    if !dfa.is_null() {
        drop(Box::from_raw(dfa));
    }
}

/// # Safety
/// `dfa` must be a live handle; `base` and `states` writable pointers.
#[no_mangle]
pub unsafe extern "C" fn autoseq_dfa_info(dfa: *const AutoseqDfa, base: *mut u32, states: *mut usize) -> AutoseqStatus {
    guard(|| {
        let d = dfa_arg(dfa)?;
        put(base, d.base(), "base")?;
        put(states, d.num_states(), "states")
    })
}

/// `a(n)`, the output after reading the base-`k` digits of `n`.
///
/// # Safety
/// `dfa` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn autoseq_dfa_eval(dfa: *const AutoseqDfa, n: u64, out: *mut u32) -> AutoseqStatus {
    guard(|| {
        let d = dfa_arg(dfa)?;
        put(out, d.eval(n as u128), "out")
    })
}

/// Synchronization of the minimal automaton. `reset_len` receives the
/// length of the reset word found, or -1 when there is none.
///
/// # Safety
/// `dfa` must be a live handle; the out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn autoseq_dfa_sync(
    dfa: *const AutoseqDfa,
    synchronizing: *mut bool,
    reset_len: *mut i64,
) -> AutoseqStatus {
    guard(|| {
        let d = dfa_arg(dfa)?;
        let r = automaton::is_synchronizing(d);
        put(synchronizing, r.synchronizing, "synchronizing")?;
        put(reset_len, r.reset_word.map_or(-1, |w| w.len() as i64), "reset_len")
    })
}

/// `⌊n^{p/q}⌋`; fails with `ResourceLimit` if it does not fit in 64 bits.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn autoseq_ps_floor(n: u64, p: u32, q: u32, out: *mut u64) -> AutoseqStatus {
    guard(|| {
        let c = exponent(p, q)?;
        let v = exactmath::ps_floor_u128(n, c)
            .and_then(|v| u64::try_from(v).ok())
            .ok_or_else(|| (AutoseqStatus::ResourceLimit, format!("floor(n^{c}) exceeds 64 bits for n = {n}")))?;
        put(out, v, "out")
    })
}

/// `a(⌊n^{p/q}⌋)`.
///
/// # Safety
/// `dfa` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn autoseq_ps_letter(dfa: *const AutoseqDfa, p: u32, q: u32, n: u64, out: *mut u32) -> AutoseqStatus {
    guard(|| {
        let d = dfa_arg(dfa)?;
        let spec = SequenceSpec::piatetski(d.clone(), exponent(p, q)?);
        put(out, lift(spec.letter_at(n))?, "out")
    })
}

/// Letter counts of `a(⌊n^{p/q}⌋)` over `n = 1..=N`. `counts[a]` receives the
/// count of letter `a`; every letter must be below `counts_len`.
///
/// # Safety
/// `dfa` must be a live handle and `counts` point to `counts_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn autoseq_letter_counts(
    dfa: *const AutoseqDfa,
    p: u32,
    q: u32,
    n: u64,
    workers: usize,
    counts: *mut u64,
    counts_len: usize,
) -> AutoseqStatus {
    guard(|| {
        let d = dfa_arg(dfa)?;
        if counts.is_null() {
            return Err(null("counts"));
        }
        let spec = SequenceSpec::piatetski(d.clone(), exponent(p, q)?);
        let f = lift(sequences::letter_frequencies_with(&spec, n, workers.max(1)))?;
        let out = std::slice::from_raw_parts_mut(counts, counts_len);
        out.fill(0);
        for (&a, &c) in &f.counts {
            let slot = out
                .get_mut(a as usize)
                .ok_or_else(|| (AutoseqStatus::InvalidArgument, format!("letter {a} does not fit in {counts_len} slots")))?;
            *slot = c;
        }
        Ok(())
    })
}

/// Subword counts `N_1..N_{h_max}` of `a(⌊n^{p/q}⌋)` over windows starting
/// at `start..start+N`, written to `out[0..h_max]`.
///
/// # Safety
/// `dfa` must be a live handle and `out` point to `h_max` writable values.
#[no_mangle]
pub unsafe extern "C" fn autoseq_subword_counts(
    dfa: *const AutoseqDfa,
    p: u32,
    q: u32,
    start: u64,
    n: u64,
    h_max: usize,
    out: *mut u64,
) -> AutoseqStatus {
    guard(|| {
        let d = dfa_arg(dfa)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = SequenceSpec::piatetski(d.clone(), exponent(p, q)?);
        let prof = lift(complexity::subword_count(&spec, start, n, h_max))?;
        std::slice::from_raw_parts_mut(out, h_max).copy_from_slice(&prof.counts);
        Ok(())
    })
}
