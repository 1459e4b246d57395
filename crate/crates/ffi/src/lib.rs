//! C ABI over the hitfuzz core.
//!
//! Every fallible call returns an [`HfStatus`]. On failure the message is kept per thread and
//! read with [`hf_last_error`]. Objects cross the boundary as opaque handles that the caller
//! frees with the matching `*_free` function. Strings are NUL-terminated UTF-8 in both directions.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hitfuzz::fuzzer::{Scenario, ScenarioConstraint};
use hitfuzz::gateway::{ledger_gate, parse_entry, GateVerdict, LedgerEntry};
use hitfuzz::model::{parse_fuzz_space, parse_test, FuzzSpace};
use hitfuzz::oracle::{directed_hausdorff, ProfileRow, TestOutcomeKind, Thresholds};
use hitfuzz::runner::{blueprint_for, evaluate, execute_test, ExecOptions, ProxyHuman, TestExecution, Unpaced};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    OutOfRange = 4,
    Run = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfOutcome {
    ValidNominal = 0,
    ValidAbnormal = 1,
    InvalidUntested = 2,
    Aborted = 3,
}

impl From<TestOutcomeKind> for HfOutcome {
    fn from(k: TestOutcomeKind) -> Self {
        match k {
            TestOutcomeKind::ValidNominal => HfOutcome::ValidNominal,
            TestOutcomeKind::ValidAbnormal => HfOutcome::ValidAbnormal,
            TestOutcomeKind::InvalidUntested => HfOutcome::InvalidUntested,
            TestOutcomeKind::Aborted => HfOutcome::Aborted,
        }
    }
}

/// A fuzzing space.
pub struct HfSpace(FuzzSpace);

/// An indexable scenario over a space.
pub struct HfScenario(Scenario);

/// One executed test with its profile row.
pub struct HfRun {
    exec: TestExecution,
    row: ProfileRow,
}

/// A safety ledger entry.
pub struct HfLedger(LedgerEntry);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("no interior NUL"));
}

struct Fail(HfStatus, String);

impl Fail {
    fn new(status: HfStatus, e: impl std::fmt::Display) -> Fail {
        Fail(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HfStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside hitfuzz");
            HfStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(HfStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(HfStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(HfStatus::NullArgument, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(HfStatus::NullArgument, format!("{what} is null")))
}

/// Copies `s` plus a NUL into `buf`. `needed` always receives the full size.
unsafe fn copy_out(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), Fail> {
    let n = s.len() + 1;
    if !needed.is_null() {
        *needed = n;
    }
    if buf.is_null() || cap < n {
        return Err(Fail(HfStatus::BufferTooSmall, format!("{n} bytes needed, {cap} given")));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

unsafe fn free_box<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn hf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn hf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn hf_space_default(out_space: *mut *mut HfSpace) -> HfStatus {
    guard(|| {
        *out(out_space, "out_space")? = Box::into_raw(Box::new(HfSpace(FuzzSpace::default_space())));
        Ok(())
    })
}

/// Parses a fuzzing space document (JSON).
#[no_mangle]
pub unsafe extern "C" fn hf_space_parse(json: *const c_char, out_space: *mut *mut HfSpace) -> HfStatus {
    guard(|| {
        let slot = out(out_space, "out_space")?;
        let space = parse_fuzz_space(text(json, "json")?).map_err(|e| Fail::new(HfStatus::Parse, e))?;
        *slot = Box::into_raw(Box::new(HfSpace(space)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hf_space_free(space: *mut HfSpace) {
    free_box(space)
}

/// Scenario over `space`. A null constraint means the whole legal space.
#[no_mangle]
pub unsafe extern "C" fn hf_scenario_new(
    space: *const HfSpace,
    constraint_json: *const c_char,
    out_scenario: *mut *mut HfScenario,
) -> HfStatus {
    guard(|| {
        let space = handle(space, "space")?;
        let slot = out(out_scenario, "out_scenario")?;
        let c = if constraint_json.is_null() {
            ScenarioConstraint::default()
        } else {
            ScenarioConstraint::parse(text(constraint_json, "constraint_json")?).map_err(|e| Fail::new(HfStatus::Parse, e))?
        };
        let sc = Scenario::new(&space.0, &c).map_err(|e| Fail::new(HfStatus::Parse, e))?;
        *slot = Box::into_raw(Box::new(HfScenario(sc)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hf_scenario_count(scenario: *const HfScenario, out_count: *mut u64) -> HfStatus {
    guard(|| {
        *out(out_count, "out_count")? = handle(scenario, "scenario")?.0.count();
        Ok(())
    })
}

/// Test document at `index` as compact JSON.
#[no_mangle]
pub unsafe extern "C" fn hf_scenario_test_json(
    scenario: *const HfScenario,
    index: u64,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> HfStatus {
    guard(|| {
        let sc = handle(scenario, "scenario")?;
        let t = sc
            .0
            .test_at(index)
            .ok_or_else(|| Fail(HfStatus::OutOfRange, format!("index {index} out of {}", sc.0.count())))?;
        copy_out(&t.to_json(), buf, cap, needed)
    })
}

#[no_mangle]
pub unsafe extern "C" fn hf_scenario_free(scenario: *mut HfScenario) {
    free_box(scenario)
}

/// Runs one test document with the proxy human and scores it against its blueprint.
#[no_mangle]
pub unsafe extern "C" fn hf_run_test(space: *const HfSpace, test_json: *const c_char, out_run: *mut *mut HfRun) -> HfStatus {
    guard(|| {
        let space = &handle(space, "space")?.0;
        let slot = out(out_run, "out_run")?;
        let test = parse_test(text(test_json, "test_json")?).map_err(|e| Fail::new(HfStatus::Parse, e))?;
        let opts = ExecOptions::default();
        let exec = execute_test(&test, space, &mut ProxyHuman::new(), &mut Unpaced, &opts)
            .map_err(|e| Fail::new(HfStatus::Run, e))?;
        let bp = blueprint_for(space, &test.mission, test.environment.wind_or_calm(), opts.params)
            .map_err(|e| Fail::new(HfStatus::Run, e))?;
        let row = evaluate(&test, &exec, &bp, &Thresholds::default());
        *slot = Box::into_raw(Box::new(HfRun { exec, row }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hf_run_outcome(run: *const HfRun, out_outcome: *mut HfOutcome) -> HfStatus {
    guard(|| {
        *out(out_outcome, "out_outcome")? = handle(run, "run")?.row.outcome().into();
        Ok(())
    })
}

/// Directed Hausdorff distance from the blueprint to this run.
#[no_mangle]
pub unsafe extern "C" fn hf_run_max_deviation(run: *const HfRun, out_meters: *mut f64) -> HfStatus {
    guard(|| {
        *out(out_meters, "out_meters")? = handle(run, "run")?.row.record.max_deviation;
        Ok(())
    })
}

/// Flight log in its text format.
#[no_mangle]
pub unsafe extern "C" fn hf_run_log(run: *const HfRun, buf: *mut c_char, cap: usize, needed: *mut usize) -> HfStatus {
    guard(|| copy_out(&handle(run, "run")?.exec.log.to_text(), buf, cap, needed))
}

#[no_mangle]
pub unsafe extern "C" fn hf_run_free(run: *mut HfRun) {
    free_box(run)
}

/// Max over `from` of the distance to the nearest point of `to`. Points are packed xyz triples.
#[no_mangle]
pub unsafe extern "C" fn hf_directed_hausdorff(
    from: *const f64,
    n_from: usize,
    to: *const f64,
    n_to: usize,
    out_meters: *mut f64,
) -> HfStatus {
    guard(|| {
        let slot = out(out_meters, "out_meters")?;
        if n_from == 0 || n_to == 0 {
            return Err(Fail(HfStatus::OutOfRange, "point sets must be non-empty".into()));
        }
        let a = std::slice::from_raw_parts(handle(from, "from")? as *const f64 as *const [f64; 3], n_from);
        let b = std::slice::from_raw_parts(handle(to, "to")? as *const f64 as *const [f64; 3], n_to);
        *slot = directed_hausdorff(a, b);
        Ok(())
    })
}

/// Parses a ledger entry (TOML).
#[no_mangle]
pub unsafe extern "C" fn hf_ledger_parse(toml: *const c_char, out_entry: *mut *mut HfLedger) -> HfStatus {
    guard(|| {
        let slot = out(out_entry, "out_entry")?;
        let e = parse_entry(text(toml, "toml")?).map_err(|e| Fail::new(HfStatus::Parse, e))?;
        *slot = Box::into_raw(Box::new(HfLedger(e)));
        Ok(())
    })
}

/// Writes 1 when the entry is ready for field testing, else 0.
#[no_mangle]
pub unsafe extern "C" fn hf_ledger_gate(entry: *const HfLedger, out_ready: *mut i32) -> HfStatus {
    guard(|| {
        let ready = ledger_gate(&handle(entry, "entry")?.0).verdict == GateVerdict::Ready;
        *out(out_ready, "out_ready")? = i32::from(ready);
        Ok(())
    })
}

/// Plain-text readiness table ending with the gate line.
#[no_mangle]
pub unsafe extern "C" fn hf_ledger_report(entry: *const HfLedger, buf: *mut c_char, cap: usize, needed: *mut usize) -> HfStatus {
    guard(|| copy_out(&ledger_gate(&handle(entry, "entry")?.0).text, buf, cap, needed))
}

#[no_mangle]
pub unsafe extern "C" fn hf_ledger_free(entry: *mut HfLedger) {
    free_box(entry)
}
