//! C ABI over `auxsbm`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_from_*`
//! functions and released with the matching `*_free`. Every fallible function
//! returns an [`AuxsbmStatus`]; on failure [`auxsbm_last_error`] describes the
//! cause for the calling thread. Panics are caught and reported as
//! [`AuxsbmStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use auxsbm::divergence::{ch_divergence, eta1, eta2, sdp_threshold};
use auxsbm::model::{BinaryModelParams, LabeledGraph, Scenario};
use auxsbm::sdp::{build_adjacency_objective, build_objective, certify_objective, solve, SdpSolution, SolverOptions};
use auxsbm::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxsbmStatus {
    Ok = 0,
    NullPointer = 1,
    /// Arguments violate a precondition.
    Domain = 2,
    InvalidJson = 3,
    InvalidUtf8 = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxsbmScenario {
    SbmKnownY = 0,
    SbmUnknownY = 1,
    CbmKnownY = 2,
    CbmUnknownY = 3,
}

impl From<AuxsbmScenario> for Scenario {
    fn from(s: AuxsbmScenario) -> Self {
        match s {
            AuxsbmScenario::SbmKnownY => Scenario::SbmKnownY,
            AuxsbmScenario::SbmUnknownY => Scenario::SbmUnknownY,
            AuxsbmScenario::CbmKnownY => Scenario::CbmKnownY,
            AuxsbmScenario::CbmUnknownY => Scenario::CbmUnknownY,
        }
    }
}

/// Binary model parameters.
pub struct AuxsbmParams(BinaryModelParams);

/// Labelled graph.
pub struct AuxsbmGraph(LabeledGraph);

/// SDP solution together with the certificate outcome, if requested.
pub struct AuxsbmSolution {
    solution: SdpSolution,
    certified: Option<bool>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: AuxsbmStatus, msg: impl Into<String>) -> AuxsbmStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> AuxsbmStatus {
    let status = match &e {
        Error::Domain(_) => AuxsbmStatus::Domain,
        Error::Json(_) => AuxsbmStatus::InvalidJson,
        Error::Io(_) | Error::Csv(_) => AuxsbmStatus::Io,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), AuxsbmStatus>) -> AuxsbmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AuxsbmStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(AuxsbmStatus::Panic, "panic inside auxsbm"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, AuxsbmStatus>;
}

impl<T> OrStatus<T> for auxsbm::Result<T> {
    fn or_status(self) -> Result<T, AuxsbmStatus> {
        self.map_err(from_error)
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), AuxsbmStatus> {
    if p.is_null() {
        Err(fail(AuxsbmStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, AuxsbmStatus> {
    non_null(p, name)?;
    CStr::from_ptr(p).to_str().map_err(|_| fail(AuxsbmStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

fn into_c_string(s: String) -> Result<*mut c_char, AuxsbmStatus> {
    CString::new(s).map(CString::into_raw).map_err(|_| fail(AuxsbmStatus::Domain, "string contains NUL"))
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn auxsbm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn auxsbm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Binary parameters; pass `xi = NaN` for an uncensored model.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_params_new(
    q0: f64,
    q1: f64,
    q2: f64,
    q3: f64,
    rho: f64,
    xi: f64,
    out: *mut *mut AuxsbmParams,
) -> AuxsbmStatus {
    guard(|| {
        non_null(out, "out")?;
        let xi = (!xi.is_nan()).then_some(xi);
        let p = BinaryModelParams::new([q0, q1, q2, q3], rho, xi).or_status()?;
        *out = Box::into_raw(Box::new(AuxsbmParams(p)));
        Ok(())
    })
}

/// Binary parameters from JSON (`{"q0":..,"q1":..,"q2":..,"q3":..,"rho":..,"xi":..}`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_params_from_json(json: *const c_char, out: *mut *mut AuxsbmParams) -> AuxsbmStatus {
    guard(|| {
        non_null(out, "out")?;
        let s = read_str(json, "json")?;
        let p: BinaryModelParams = serde_json::from_str(s).map_err(|e| from_error(e.into()))?;
        *out = Box::into_raw(Box::new(AuxsbmParams(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_params_free(p: *mut AuxsbmParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Sample a graph with balanced `x`.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_sample(
    params: *const AuxsbmParams,
    n: usize,
    seed: u64,
    out: *mut *mut AuxsbmGraph,
) -> AuxsbmStatus {
    guard(|| {
        non_null(params, "params")?;
        non_null(out, "out")?;
        let s = (*params).0.sample(n, seed, false).or_status()?;
        *out = Box::into_raw(Box::new(AuxsbmGraph(s.graph)));
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_graph_from_json(json: *const c_char, out: *mut *mut AuxsbmGraph) -> AuxsbmStatus {
    guard(|| {
        non_null(out, "out")?;
        let g = LabeledGraph::from_json_str(read_str(json, "json")?).or_status()?;
        *out = Box::into_raw(Box::new(AuxsbmGraph(g)));
        Ok(())
    })
}

/// Graph JSON; release the string with [`auxsbm_string_free`].
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_graph_to_json(graph: *const AuxsbmGraph, out: *mut *mut c_char) -> AuxsbmStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(out, "out")?;
        *out = into_c_string((*graph).0.to_json_string().or_status()?)?;
        Ok(())
    })
}

/// Node count, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_graph_n(graph: *const AuxsbmGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n())
}

/// Edge count, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_graph_num_edges(graph: *const AuxsbmGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_edges())
}

/// # Safety
/// `g` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_graph_free(g: *mut AuxsbmGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Chernoff-Hellinger divergence of two rate vectors of length `len`.
///
/// # Safety
/// `a` and `b` must point to `len` doubles; `value` and `t_star` must be
/// valid pointers (`t_star` may be null).
#[no_mangle]
pub unsafe extern "C" fn auxsbm_ch_divergence(
    a: *const f64,
    b: *const f64,
    len: usize,
    value: *mut f64,
    t_star: *mut f64,
) -> AuxsbmStatus {
    guard(|| {
        non_null(a, "a")?;
        non_null(b, "b")?;
        non_null(value, "value")?;
        let r = ch_divergence(std::slice::from_raw_parts(a, len), std::slice::from_raw_parts(b, len)).or_status()?;
        *value = r.value;
        if !t_star.is_null() {
            *t_star = r.t_star;
        }
        Ok(())
    })
}

/// Known-`y` exponent `η₁` of the parameters.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_eta1(params: *const AuxsbmParams, out: *mut f64) -> AuxsbmStatus {
    guard(|| {
        non_null(params, "params")?;
        non_null(out, "out")?;
        *out = eta1((*params).0.q(), (*params).0.rho);
        Ok(())
    })
}

/// Unknown-`y` exponent `η₂` of the parameters.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_eta2(params: *const AuxsbmParams, out: *mut f64) -> AuxsbmStatus {
    guard(|| {
        non_null(params, "params")?;
        non_null(out, "out")?;
        *out = eta2((*params).0.q(), (*params).0.rho);
        Ok(())
    })
}

/// Binary SDP threshold; `exact_recovery` is set when it exceeds 1.
///
/// # Safety
/// `params` must be a live handle; `value` must be valid and
/// `exact_recovery` valid or null.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_sdp_threshold(
    params: *const AuxsbmParams,
    known_y: bool,
    value: *mut f64,
    exact_recovery: *mut bool,
) -> AuxsbmStatus {
    guard(|| {
        non_null(params, "params")?;
        non_null(value, "value")?;
        let r = sdp_threshold(&(*params).0, known_y);
        *value = r.value;
        if !exact_recovery.is_null() {
            *exact_recovery = r.exact_recovery;
        }
        Ok(())
    })
}

/// Solve the relaxation of `scenario` on `graph`. `params` may be null for
/// `SBM_UNKNOWN_Y`; with `certify` the dual certificate is also checked.
///
/// # Safety
/// `graph` must be a live handle, `params` null or live, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_solve(
    graph: *const AuxsbmGraph,
    params: *const AuxsbmParams,
    scenario: AuxsbmScenario,
    seed: u64,
    certify: bool,
    out: *mut *mut AuxsbmSolution,
) -> AuxsbmStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(out, "out")?;
        let g = &(*graph).0;
        let scenario = Scenario::from(scenario);
        let params = params.as_ref().map(|p| &p.0);
        let objective = match params {
            Some(p) => build_objective(g, p, scenario),
            None if scenario == Scenario::SbmUnknownY => build_adjacency_objective(g),
            None => return Err(fail(AuxsbmStatus::NullPointer, format!("scenario {scenario} needs params"))),
        }
        .or_status()?;
        let mut solution = solve(&objective, &SolverOptions { seed, ..SolverOptions::default() }).or_status()?;
        solution.v = None;
        let certified = if certify {
            let rho_hat = g.y().map(|y| y.iter().filter(|&&l| l == 1).count() as f64 / y.len().max(1) as f64);
            Some(certify_objective(&objective, params, &solution.x_hat, rho_hat).or_status()?.is_certified)
        } else {
            None
        };
        *out = Box::into_raw(Box::new(AuxsbmSolution { solution, certified }));
        Ok(())
    })
}

/// Copy the `±1` labels into `buf`, which must hold at least `len` entries.
///
/// # Safety
/// `solution` must be a live handle and `buf` must point to `len` writable
/// bytes.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_solution_labels(solution: *const AuxsbmSolution, buf: *mut i8, len: usize) -> AuxsbmStatus {
    guard(|| {
        non_null(solution, "solution")?;
        non_null(buf, "buf")?;
        let x = &(*solution).solution.x_hat;
        if len < x.len() {
            return Err(fail(AuxsbmStatus::BufferTooSmall, format!("need {} entries, got {len}", x.len())));
        }
        ptr::copy_nonoverlapping(x.as_ptr(), buf, x.len());
        Ok(())
    })
}

/// Number of labels, or 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_solution_len(solution: *const AuxsbmSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.solution.x_hat.len())
}

/// `⟨Z, C⟩` at the solver's optimum, NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_solution_objective(solution: *const AuxsbmSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.solution.objective)
}

/// 1 if certified, 0 if the certificate failed, -1 if it was not requested.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_solution_certified(solution: *const AuxsbmSolution) -> i32 {
    match solution.as_ref().and_then(|s| s.certified) {
        Some(true) => 1,
        Some(false) => 0,
        None => -1,
    }
}

/// Full solution JSON (without the factor); release with
/// [`auxsbm_string_free`].
///
/// # Safety
/// `solution` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_solution_to_json(solution: *const AuxsbmSolution, out: *mut *mut c_char) -> AuxsbmStatus {
    guard(|| {
        non_null(solution, "solution")?;
        non_null(out, "out")?;
        let s = serde_json::to_string(&(*solution).solution).map_err(|e| from_error(e.into()))?;
        *out = into_c_string(s)?;
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn auxsbm_solution_free(s: *mut AuxsbmSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}
