//! C ABI over `fpp-core`.
//!
//! Models and environments are opaque heap handles created from the text of
//! a config file (`[model]` and `[distribution]` tables; missing tables take
//! the defaults, free rank 2 and uniform(0, 1)). Every function returns an
//! [`FppStatus`]; on failure a message is kept per thread and can be copied
//! out with [`fpp_last_error_message`]. Elements are passed as words in the
//! generator labels (`"ab^-1"`, `"1"`). Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;

use fpp_core::combing::{analyze, builtin_automaton, cone_measure, AnalysisOptions, CombingAnalysis};
use fpp_core::environment::Environment;
use fpp_core::experiments::SetupConfig;
use fpp_core::geometry::gromov_product;
use fpp_core::group::{Element, GroupModel};
use fpp_core::metric::{restricted_passage_time, DEFAULT_RELAXATION_BUDGET};
use fpp_core::FppError;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FppStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Config = 4,
    Domain = 5,
    Resource = 6,
    Unreachable = 7,
    Numeric = 8,
    Panic = 9,
}

/// A group with its generating set; the combing analysis is computed on
/// first use.
pub struct FppModel {
    model: GroupModel,
    analysis: OnceLock<CombingAnalysis>,
}

/// An i.i.d. weight environment.
pub struct FppEnvironment {
    env: Environment,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(FppStatus, String);

impl From<FppError> for Failure {
    fn from(e: FppError) -> Self {
        let status = match &e {
            FppError::UnknownLabel(_) | FppError::Parse(_) | FppError::Format { .. } => FppStatus::Parse,
            FppError::Config(_) | FppError::Io { .. } => FppStatus::Config,
            FppError::Domain(_) | FppError::Sampling(_) => FppStatus::Domain,
            FppError::Resource { .. } => FppStatus::Resource,
            FppError::Unreachable(_) => FppStatus::Unreachable,
            FppError::Numeric { .. } => FppStatus::Numeric,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FppStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FppStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            FppStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            FppStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(FppStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn element(model: &GroupModel, p: *const c_char, what: &str) -> Result<Element, Failure> {
    Ok(model.parse_element(text(p, what)?)?)
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn model_ref<'a>(m: *const FppModel) -> Result<&'a FppModel, Failure> {
    m.as_ref().ok_or_else(|| null("model"))
}

impl FppModel {
    fn analysis(&self) -> Result<&CombingAnalysis, Failure> {
        if let Some(a) = self.analysis.get() {
            return Ok(a);
        }
        let a = analyze(&builtin_automaton(&self.model)?, &AnalysisOptions::default())?;
        Ok(self.analysis.get_or_init(|| a))
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fpp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`) and returns the full message length
/// in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fpp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            buf.add(n).write(0);
        }
        msg.len()
    })
}

/// Builds a model from config text.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fpp_model_new(config: *const c_char, out: *mut *mut FppModel) -> FppStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = SetupConfig::parse(text(config, "config")?)?;
        let model = cfg.model.build()?;
        out.write(Box::into_raw(Box::new(FppModel { model, analysis: OnceLock::new() })));
        Ok(())
    })
}

/// Builds the free group of the given rank with its standard generators.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fpp_model_new_free(rank: u32, out: *mut *mut FppModel) -> FppStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if rank == 0 || rank > 26 {
            return Err(Failure(FppStatus::InvalidArgument, format!("rank {rank} outside 1..=26")));
        }
        let model = GroupModel::free(rank as usize);
        out.write(Box::into_raw(Box::new(FppModel { model, analysis: OnceLock::new() })));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from `fpp_model_new*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpp_model_free(model: *mut FppModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Word distance `d(x, y)`.
///
/// # Safety
/// Pointers must be valid; `x`, `y` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fpp_distance(
    model: *const FppModel,
    x: *const c_char,
    y: *const c_char,
    out: *mut u64,
) -> FppStatus {
    guard(|| {
        let m = &model_ref(model)?.model;
        let d = m.distance(&element(m, x, "x")?, &element(m, y, "y")?)?;
        write_out(out, d, "out")
    })
}

/// Growth rate λ of the geodesic automaton.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fpp_lambda(model: *const FppModel, out: *mut f64) -> FppStatus {
    guard(|| {
        let lambda = model_ref(model)?.analysis()?.lambda();
        write_out(out, lambda, "out")
    })
}

/// Boundary measure of the cone of `g`.
///
/// # Safety
/// Pointers must be valid; `g` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fpp_cone_measure(model: *const FppModel, g: *const c_char, out: *mut f64) -> FppStatus {
    guard(|| {
        let h = model_ref(model)?;
        let g = element(&h.model, g, "g")?;
        let v = cone_measure(h.analysis()?, &h.model, &g)?;
        write_out(out, v, "out")
    })
}

/// Gromov product `⟨x, y⟩_o`.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fpp_gromov_product(
    model: *const FppModel,
    x: *const c_char,
    y: *const c_char,
    o: *const c_char,
    out: *mut f64,
) -> FppStatus {
    guard(|| {
        let m = &model_ref(model)?.model;
        let v = gromov_product(m, &element(m, x, "x")?, &element(m, y, "y")?, &element(m, o, "o")?)?;
        write_out(out, v, "out")
    })
}

/// Builds an environment from the `[distribution]` table of config text.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fpp_environment_new(
    config: *const c_char,
    seed: u64,
    out: *mut *mut FppEnvironment,
) -> FppStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = SetupConfig::parse(text(config, "config")?)?;
        let env = Environment::new(seed, cfg.distribution.build()?);
        out.write(Box::into_raw(Box::new(FppEnvironment { env })));
        Ok(())
    })
}

/// # Safety
/// `env` must be null or a handle from `fpp_environment_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpp_environment_free(env: *mut FppEnvironment) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Passage time from `x` to `y` inside the cylinder of the given radius
/// around the word geodesic `[x, y]`. `edges` may be null; otherwise it
/// receives the number of edges on the ω-geodesic.
///
/// # Safety
/// Handles must be valid; strings NUL-terminated; `time` valid.
#[no_mangle]
pub unsafe extern "C" fn fpp_passage_time(
    model: *const FppModel,
    env: *const FppEnvironment,
    x: *const c_char,
    y: *const c_char,
    radius: u64,
    time: *mut f64,
    edges: *mut u64,
) -> FppStatus {
    guard(|| {
        let m = &model_ref(model)?.model;
        let env = &env.as_ref().ok_or_else(|| null("env"))?.env;
        let (x, y) = (element(m, x, "x")?, element(m, y, "y")?);
        let res = restricted_passage_time(m, env, &x, &y, radius, DEFAULT_RELAXATION_BUDGET)?;
        write_out(time, res.time, "time")?;
        if !edges.is_null() {
            edges.write(res.n_edges() as u64);
        }
        Ok(())
    })
}
