//! C interface to `hiv-latency`.
//!
//! Every fallible function returns an [`HivStatus`]; on failure a message is
//! available from [`hiv_last_error_message`] on the same thread. Models and
//! trajectories are opaque heap objects released with their `_free`
//! functions. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hiv_latency::analysis::{self, EquilibriumKind};
use hiv_latency::integrator::{integrate, SolverConfig, Trajectory};
use hiv_latency::model::{CoreParams, Efficacy, LatentModel, LatentParams, State4};
use hiv_latency::stability::{self, Verdict};
use hiv_latency::thresholds;
use hiv_latency::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HivStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    EndemicAbsent = 3,
    Numeric = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HivVerdict {
    LocallyStable = 0,
    Unstable = 1,
    Marginal = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HivEquilibrium {
    NonInfective = 0,
    Endemic = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HivMetric {
    /// Three-compartment model.
    P = 0,
    /// Latent model.
    Q = 1,
}

/// Model constants; rates per day, densities per ml.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HivParams {
    pub lambda: f64,
    pub d_t: f64,
    pub d_i: f64,
    pub d_v: f64,
    pub k: f64,
    pub n: f64,
    pub p: f64,
    pub alpha: f64,
    pub d_l: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HivEfficacy {
    pub rt: f64,
    pub pi: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HivState {
    pub t: f64,
    pub i: f64,
    pub l: f64,
    pub v: f64,
}

/// Latent model with fixed therapy.
pub struct HivModel {
    params: LatentParams,
    efficacy: Efficacy,
}

pub struct HivTrajectory {
    inner: Trajectory<4>,
}

impl From<HivParams> for LatentParams {
    fn from(p: HivParams) -> Self {
        LatentParams {
            core: CoreParams {
                lambda: p.lambda,
                d_t: p.d_t,
                d_i: p.d_i,
                d_v: p.d_v,
                k: p.k,
                n: p.n,
            },
            p: p.p,
            alpha: p.alpha,
            d_l: p.d_l,
        }
    }
}

impl From<State4> for HivState {
    fn from(s: State4) -> Self {
        HivState {
            t: s.healthy,
            i: s.infected,
            l: s.latent,
            v: s.virus,
        }
    }
}

impl From<HivState> for State4 {
    fn from(s: HivState) -> Self {
        State4::new(s.t, s.i, s.l, s.v)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> HivStatus {
    match err {
        Error::EndemicAbsent { .. } => HivStatus::EndemicAbsent,
        e if e.is_numeric() => HivStatus::Numeric,
        _ => HivStatus::InvalidArgument,
    }
}

struct Fail(HivStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(HivStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HivStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HivStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HivStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// Message describing the last failure on this thread; empty after success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn hiv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Reference parameter set.
#[no_mangle]
pub extern "C" fn hiv_params_table1() -> HivParams {
    let lp = LatentParams::table1();
    let c = lp.core;
    HivParams {
        lambda: c.lambda,
        d_t: c.d_t,
        d_i: c.d_i,
        d_v: c.d_v,
        k: c.k,
        n: c.n,
        p: lp.p,
        alpha: lp.alpha,
        d_l: lp.d_l,
    }
}

/// T = 4e5, I = 0, L = 0, V = 1e5.
#[no_mangle]
pub extern "C" fn hiv_default_initials() -> HivState {
    State4::default_initials().into()
}

/// # Safety
/// `params` and `efficacy` must be valid or null; `out` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn hiv_model_new(
    params: *const HivParams,
    efficacy: *const HivEfficacy,
    out: *mut *mut HivModel,
) -> HivStatus {
    guard(|| {
        let p: LatentParams = (*deref(params, "params")?).into();
        let e = deref(efficacy, "efficacy")?;
        p.validate()?;
        let eff = Efficacy::new(e.rt, e.pi)?;
        let model = Box::new(HivModel {
            params: p,
            efficacy: eff,
        });
        write(out, Box::into_raw(model), "out")
    })
}

/// # Safety
/// `model` must come from [`hiv_model_new`] and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hiv_model_free(model: *mut HivModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Treated reproduction number of the three-compartment model.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hiv_model_r0(model: *const HivModel, out: *mut f64) -> HivStatus {
    guard(|| {
        let m = deref(model, "model")?;
        write(out, analysis::r0(&m.params.core, &m.efficacy), "out")
    })
}

/// Treated reproduction number of the latent model.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hiv_model_r_l(model: *const HivModel, out: *mut f64) -> HivStatus {
    guard(|| {
        let m = deref(model, "model")?;
        write(out, analysis::r_l(&m.params, &m.efficacy), "out")
    })
}

/// Endemic steady state; `HIV_STATUS_ENDEMIC_ABSENT` when `R_L <= 1`.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hiv_model_endemic_state(model: *const HivModel, out: *mut HivState) -> HivStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let s = analysis::endemic_state_4cm(&m.params, &m.efficacy).ok_or(Error::EndemicAbsent {
            r: analysis::r_l(&m.params, &m.efficacy),
        })?;
        write(out, s.into(), "out")
    })
}

/// Local stability of an equilibrium, checked both by Routh–Hurwitz and by
/// the eigenvalues of the Jacobian.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hiv_model_classify(
    model: *const HivModel,
    which: HivEquilibrium,
    out: *mut HivVerdict,
) -> HivStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let kind = match which {
            HivEquilibrium::NonInfective => EquilibriumKind::NonInfective,
            HivEquilibrium::Endemic => EquilibriumKind::Endemic,
        };
        let rep = stability::classify_equilibrium(&m.params, &m.efficacy, kind)?;
        let v = match rep.verdict {
            Verdict::LocallyStable => HivVerdict::LocallyStable,
            Verdict::Unstable => HivVerdict::Unstable,
            Verdict::Marginal => HivVerdict::Marginal,
        };
        write(out, v, "out")
    })
}

/// Integrates the latent model over `[0, t_max]` with default tolerances.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hiv_simulate(
    model: *const HivModel,
    initial: *const HivState,
    t_max: f64,
    out: *mut *mut HivTrajectory,
) -> HivStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let s0: State4 = (*deref(initial, "initial")?).into();
        if s0.to_array().iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
            return Err(Fail(HivStatus::InvalidArgument, "initial state must be finite and >= 0".into()));
        }
        let field = LatentModel {
            params: m.params,
            efficacy: m.efficacy,
        };
        let traj = integrate(&field, s0.to_array(), &SolverConfig::latent(t_max), &[])?;
        write(out, Box::into_raw(Box::new(HivTrajectory { inner: traj })), "out")
    })
}

/// # Safety
/// `traj` must come from [`hiv_simulate`] and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hiv_trajectory_free(traj: *mut HivTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of stored solver points, including the initial state; 0 for null.
///
/// # Safety
/// `traj` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hiv_trajectory_len(traj: *const HivTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.times.len())
}

/// Stored point `index` and its time.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hiv_trajectory_point(
    traj: *const HivTrajectory,
    index: usize,
    time: *mut f64,
    state: *mut HivState,
) -> HivStatus {
    guard(|| {
        let t = &deref(traj, "traj")?.inner;
        if index >= t.times.len() {
            return Err(Fail(HivStatus::InvalidArgument, format!("index {index} out of range")));
        }
        write(time, t.times[index], "time")?;
        write(state, State4::from_array(t.states[index]).into(), "state")
    })
}

/// Dense-output value at time `t`, clamped to the integrated interval.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hiv_trajectory_eval(traj: *const HivTrajectory, t: f64, out: *mut HivState) -> HivStatus {
    guard(|| {
        let tr = &deref(traj, "traj")?.inner;
        if t.is_nan() {
            return Err(Fail(HivStatus::InvalidArgument, "t is NaN".into()));
        }
        write(out, State4::from_array(tr.eval(t)).into(), "out")
    })
}

/// Days until the viral load first drops to `10^-n` when protease inhibition
/// pins the model's reproduction number at `r`. Writes `INFINITY` when that
/// does not happen within `t_max` days.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hiv_threshold_time(
    params: *const HivParams,
    initial: *const HivState,
    metric: HivMetric,
    n: u32,
    r: f64,
    t_max: f64,
    out_days: *mut f64,
) -> HivStatus {
    guard(|| {
        let lp: LatentParams = (*deref(params, "params")?).into();
        let s0: State4 = (*deref(initial, "initial")?).into();
        let res = match metric {
            HivMetric::P => thresholds::p_n(&lp.core, &s0.without_latent(), n, r, &SolverConfig::three_component(t_max))?,
            HivMetric::Q => {
                lp.validate()?;
                thresholds::q_n(&lp, &s0, n, r, &SolverConfig::latent(t_max))?
            }
        };
        write(out_days, res.days(), "out_days")
    })
}

/// Library version, NUL-terminated.
#[no_mangle]
pub extern "C" fn hiv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
