//! C ABI over `repcut-core`.
//!
//! Scenarios are opaque heap handles created by `repcut_scenario_baseline`
//! or `repcut_scenario_new` and released with `repcut_scenario_free`. Every
//! fallible call returns a `RepcutStatus`; on failure the message is
//! available from `repcut_last_error_message` on the same thread. Setters
//! validate before committing, so a rejected update leaves the handle as it
//! was.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use repcut_core::belief_engine::FrictionSpec;
use repcut_core::committee::{pivotality, CommitteeSpec};
use repcut_core::contract::calibrate;
use repcut_core::equilibrium::{solve_equilibrium, Scenario};
use repcut_core::mc_oracle::{compare, simulate, SimSetup};
use repcut_core::payoffs::{PayoffFamily, PayoffSpec, TransferSpec};
use repcut_core::signal_model::{normal::normal_cdf, SignalModel, State};
use repcut_core::{BeliefState, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepcutStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    ComputationFailed = 3,
    Panic = 4,
}

/// Opaque model handle.
pub struct RepcutScenario {
    inner: Scenario,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RepcutSolution {
    /// Canonical cutoff; `±inf` at a corner.
    pub cutoff: f64,
    pub pi_success: f64,
    pub pi_failure: f64,
    pub pi_safe: f64,
    pub success_prob_at_cutoff: f64,
    pub experimentation_rate: f64,
    pub residual: f64,
    pub n_roots: u32,
    pub interior: bool,
    pub off_path: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RepcutCalibration {
    pub rho_star: f64,
    pub cutoff: f64,
    pub p_h: f64,
    pub beta1: f64,
    pub ll_violation: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RepcutSimulation {
    pub cutoff: f64,
    pub n_episodes: u64,
    pub rate_high: f64,
    pub post_success: f64,
    pub martingale: f64,
    /// Largest |z| across the analytic-vs-empirical checks.
    pub max_abs_z: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> RepcutStatus {
    match e {
        Error::InvalidParameter { .. } => RepcutStatus::InvalidInput,
        _ => RepcutStatus::ComputationFailed,
    }
}

fn guard(f: impl FnOnce() -> Result<(), RepcutStatus>) -> RepcutStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RepcutStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            RepcutStatus::Panic
        }
    }
}

fn fail(e: Error) -> RepcutStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(name: &str) -> RepcutStatus {
    set_error(format!("{name} is null"));
    RepcutStatus::NullPointer
}

unsafe fn handle<'a>(p: *mut RepcutScenario) -> Result<&'a mut RepcutScenario, RepcutStatus> {
    // SAFETY: the caller passes a handle from this library or null.
    unsafe { p.as_mut() }.ok_or_else(|| null("scenario"))
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, RepcutStatus> {
    // SAFETY: the caller passes writable storage for one `T` or null.
    unsafe { p.as_mut() }.ok_or_else(|| null(name))
}

/// Replace the scenario with `f(copy)` if the result validates.
fn update(h: &mut RepcutScenario, f: impl FnOnce(&mut Scenario)) -> Result<(), RepcutStatus> {
    let mut next = h.inner.clone();
    f(&mut next);
    next.validate().map_err(fail)?;
    h.inner = next;
    Ok(())
}

/// Baseline model `(0, 1, 1, 1.7)`, `α = π = 0.5`, `V = π²`, no transfers.
#[no_mangle]
pub extern "C" fn repcut_scenario_baseline() -> *mut RepcutScenario {
    Box::into_raw(Box::new(RepcutScenario {
        inner: Scenario::baseline(),
    }))
}

/// Build a power-payoff scenario. `*out` is set only on success.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn repcut_scenario_new(
    mu0: f64,
    mu1: f64,
    sigma_h: f64,
    sigma_l: f64,
    pi: f64,
    alpha: f64,
    k: f64,
    out: *mut *mut RepcutScenario,
) -> RepcutStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        let sc = Scenario::new(
            SignalModel {
                mu0,
                mu1,
                sigma_h,
                sigma_l,
            },
            BeliefState { pi, alpha },
            PayoffSpec {
                family: PayoffFamily::Power { k },
                phi: 0.0,
                kappa: 1.0,
            },
        );
        sc.validate().map_err(fail)?;
        *out = Box::into_raw(Box::new(RepcutScenario { inner: sc }));
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn repcut_scenario_free(scenario: *mut RepcutScenario) {
    if !scenario.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn repcut_scenario_set_beliefs(
    scenario: *mut RepcutScenario,
    pi: f64,
    alpha: f64,
) -> RepcutStatus {
    guard(|| {
        let h = unsafe { handle(scenario) }?;
        update(h, |s| s.beliefs = BeliefState { pi, alpha })
    })
}

/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn repcut_scenario_set_payoff_power(
    scenario: *mut RepcutScenario,
    k: f64,
    phi: f64,
    kappa: f64,
) -> RepcutStatus {
    guard(|| {
        let h = unsafe { handle(scenario) }?;
        update(h, |s| {
            s.payoff = PayoffSpec {
                family: PayoffFamily::Power { k },
                phi,
                kappa,
            }
        })
    })
}

/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn repcut_scenario_set_transfers(
    scenario: *mut RepcutScenario,
    beta1: f64,
    beta0: f64,
    limited_liability: bool,
) -> RepcutStatus {
    guard(|| {
        let h = unsafe { handle(scenario) }?;
        update(h, |s| {
            s.transfers = TransferSpec {
                beta1,
                beta0,
                limited_liability,
            }
        })
    })
}

/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn repcut_scenario_set_frictions(
    scenario: *mut RepcutScenario,
    lambda: f64,
    eps: f64,
    eta: f64,
) -> RepcutStatus {
    guard(|| {
        let h = unsafe { handle(scenario) }?;
        update(h, |s| {
            s.frictions = FrictionSpec {
                lambda_impl: lambda,
                eps_flip: eps,
                eta_base: eta,
                ..FrictionSpec::default()
            }
        })
    })
}

/// # Safety
/// `scenario` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn repcut_solve(
    scenario: *const RepcutScenario,
    out: *mut RepcutSolution,
) -> RepcutStatus {
    guard(|| {
        let h = unsafe { scenario.as_ref() }.ok_or_else(|| null("scenario"))?;
        let out = unsafe { out_ref(out, "out") }?;
        let sol = solve_equilibrium(&h.inner).map_err(fail)?;
        *out = RepcutSolution {
            cutoff: sol.cutoff,
            pi_success: sol.posteriors.pi_success,
            pi_failure: sol.posteriors.pi_failure,
            pi_safe: sol.posteriors.pi_safe,
            success_prob_at_cutoff: sol.success_prob_at_cutoff,
            experimentation_rate: sol.experimentation_rate,
            residual: sol.residual,
            n_roots: sol.all_roots.len() as u32,
            interior: sol.is_interior(),
            off_path: sol.off_path,
        };
        Ok(())
    })
}

/// Implementing bonus for a target high-type experimentation rate. The
/// handle's own transfers are ignored.
///
/// # Safety
/// `scenario` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn repcut_calibrate(
    scenario: *const RepcutScenario,
    rho_star: f64,
    out: *mut RepcutCalibration,
) -> RepcutStatus {
    guard(|| {
        let h = unsafe { scenario.as_ref() }.ok_or_else(|| null("scenario"))?;
        let out = unsafe { out_ref(out, "out") }?;
        let row = calibrate(&h.inner, rho_star).map_err(fail)?;
        *out = RepcutCalibration {
            rho_star: row.rho_star,
            cutoff: row.cutoff,
            p_h: row.p_h_at_cutoff,
            beta1: row.beta1,
            ll_violation: row.ll_violation,
        };
        Ok(())
    })
}

/// Simulate `episodes` draws at `cutoff`, or at the equilibrium cutoff when
/// `cutoff` is NaN. Deterministic in `seed`.
///
/// # Safety
/// `scenario` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn repcut_simulate(
    scenario: *const RepcutScenario,
    cutoff: f64,
    episodes: u64,
    seed: u64,
    out: *mut RepcutSimulation,
) -> RepcutStatus {
    guard(|| {
        let h = unsafe { scenario.as_ref() }.ok_or_else(|| null("scenario"))?;
        let out = unsafe { out_ref(out, "out") }?;
        let sc = &h.inner;
        let cutoff = if cutoff.is_nan() {
            solve_equilibrium(sc).map_err(fail)?.cutoff
        } else {
            cutoff
        };
        let setup = SimSetup {
            model: sc.model,
            beliefs: sc.beliefs,
            cutoff,
            frictions: sc.frictions,
        };
        let summary = simulate(&setup, episodes, seed).map_err(fail)?;
        let checks = compare(&setup, &summary).map_err(fail)?;
        let max_abs_z = checks
            .iter()
            .map(|c| c.z.abs())
            .filter(|z| z.is_finite())
            .fold(0.0, f64::max);
        *out = RepcutSimulation {
            cutoff,
            n_episodes: summary.n_episodes,
            rate_high: summary.rate(repcut_core::Ability::High).estimate,
            post_success: summary.post(repcut_core::History::Success).estimate,
            martingale: summary.martingale().estimate,
            max_abs_z,
        };
        Ok(())
    })
}

/// Probability that `member`'s yes vote is pivotal for a `k`-of-`n` vote in
/// state `omega` (0 or 1). `yes_bad[i]` and `yes_good[i]` are member `i`'s
/// yes probabilities in the bad and good state.
///
/// # Safety
/// `yes_bad` and `yes_good` must each be null or point to `n` readable
/// doubles; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn repcut_pivotality(
    k: usize,
    n: usize,
    yes_bad: *const f64,
    yes_good: *const f64,
    member: usize,
    omega: u32,
    out: *mut f64,
) -> RepcutStatus {
    guard(|| {
        if yes_bad.is_null() {
            return Err(null("yes_bad"));
        }
        if yes_good.is_null() {
            return Err(null("yes_good"));
        }
        let out = unsafe { out_ref(out, "out") }?;
        // SAFETY: both arrays hold `n` elements per the contract.
        let (bad, good) = unsafe {
            (
                std::slice::from_raw_parts(yes_bad, n),
                std::slice::from_raw_parts(yes_good, n),
            )
        };
        let omega = match omega {
            0 => State::Bad,
            1 => State::Good,
            _ => {
                set_error(format!("omega must be 0 or 1, got {omega}"));
                return Err(RepcutStatus::InvalidInput);
            }
        };
        let probs = bad.iter().zip(good).map(|(&b, &g)| [b, g]).collect();
        let spec = CommitteeSpec::new(k, probs).map_err(fail)?;
        *out = pivotality(&spec, member, omega).map_err(fail)?;
        Ok(())
    })
}

/// Standard normal CDF.
#[no_mangle]
pub extern "C" fn repcut_normal_cdf(x: f64) -> f64 {
    normal_cdf(x)
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next library call on the same thread.
#[no_mangle]
pub extern "C" fn repcut_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn repcut_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version contains NUL"),
        };
    VERSION.as_ptr()
}
