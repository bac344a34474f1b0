//! Likelihood ratios and posterior reputations after each public history.
//!
//! Everything is composed in log space: a history's likelihood ratio is
//! `ln Pr(h | H) - ln Pr(h | L)` and a posterior is
//! `logistic(ln odds(π) + ln LLR)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_open_unit, Error, Result};
use crate::signal_model::{logistic, Ability, SignalFamily, State};

/// Joint event probabilities below this are treated as off-path.
pub const OFF_PATH_FLOOR: f64 = 1e-12;

pub fn odds(pi: f64) -> Result<f64> {
    check_open_unit("pi", pi)?;
    Ok(pi / (1.0 - pi))
}

pub fn odds_inv(o: f64) -> Result<f64> {
    if !(o.is_finite() && o > 0.0) {
        return Err(Error::invalid(
            "odds",
            format!("must be positive and finite, got {o}"),
        ));
    }
    Ok(o / (1.0 + o))
}

/// Public reputation `π = Pr(θ = H)` and success prior `α = Pr(ω = 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefState {
    pub pi: f64,
    pub alpha: f64,
}

impl BeliefState {
    pub fn new(pi: f64, alpha: f64) -> Result<Self> {
        let b = BeliefState { pi, alpha };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        check_open_unit("beliefs.pi", self.pi)?;
        check_open_unit("beliefs.alpha", self.alpha)
    }

    pub fn log_odds(&self) -> f64 {
        (self.pi / (1.0 - self.pi)).ln()
    }

    pub fn with_pi(self, pi: f64) -> Self {
        BeliefState { pi, ..self }
    }
}

/// How outcome misclassification enters the outcome likelihood ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MisclassificationRule {
    /// `Pr(y_obs | a=1, θ) = (1-ε) Pr(y | θ) + ε Pr(1-y | θ)`, separately per type.
    #[default]
    LikelihoodMixture,
    /// `L⁺_ε = (1-ε) L⁺ + ε / L⁻` and `L⁻_ε = (1-ε) L⁻ + ε / L⁺`. Kept for comparison.
    LiteralRatioMix,
}

/// Implementation intensity λ, outcome misclassification ε and baseline
/// success probability η under the safe action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrictionSpec {
    #[serde(rename = "lambda")]
    pub lambda_impl: f64,
    #[serde(rename = "eps")]
    pub eps_flip: f64,
    #[serde(rename = "eta")]
    pub eta_base: f64,
    pub misclassification: MisclassificationRule,
}

impl Default for FrictionSpec {
    fn default() -> Self {
        FrictionSpec {
            lambda_impl: 1.0,
            eps_flip: 0.0,
            eta_base: 0.0,
            misclassification: MisclassificationRule::LikelihoodMixture,
        }
    }
}

impl FrictionSpec {
    pub fn validate(&self) -> Result<()> {
        let l = self.lambda_impl;
        if !(l.is_finite() && l > 0.0 && l <= 1.0) {
            return Err(Error::invalid(
                "frictions.lambda",
                format!("must lie in (0, 1], got {l}"),
            ));
        }
        let e = self.eps_flip;
        if !(e.is_finite() && (0.0..0.5).contains(&e)) {
            return Err(Error::invalid(
                "frictions.eps",
                format!("must lie in [0, 0.5), got {e}"),
            ));
        }
        let h = self.eta_base;
        if !(h.is_finite() && (0.0..1.0).contains(&h)) {
            return Err(Error::invalid(
                "frictions.eta",
                format!("must lie in [0, 1), got {h}"),
            ));
        }
        Ok(())
    }

    pub fn with_lambda(self, lambda_impl: f64) -> Self {
        FrictionSpec {
            lambda_impl,
            ..self
        }
    }

    pub fn with_eps(self, eps_flip: f64) -> Self {
        FrictionSpec { eps_flip, ..self }
    }
}

/// Public history `(a, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum History {
    /// (0,0): safe recommendation, no success.
    Safe,
    /// (0,1): safe recommendation, baseline success (only when η > 0).
    SafeSuccess,
    /// (1,1): risky recommendation implemented and observed to succeed.
    Success,
    /// (1,0): risky recommendation implemented and observed to fail.
    Failure,
    /// (1,∅): risky recommendation, outcome not observed (only when λ < 1).
    Unobserved,
}

impl History {
    pub const ALL: [History; 5] = [
        History::Safe,
        History::SafeSuccess,
        History::Success,
        History::Failure,
        History::Unobserved,
    ];

    pub fn label(self) -> &'static str {
        match self {
            History::Safe => "safe",
            History::SafeSuccess => "safe_success",
            History::Success => "success",
            History::Failure => "failure",
            History::Unobserved => "unobserved",
        }
    }

    pub fn index(self) -> usize {
        match self {
            History::Safe => 0,
            History::SafeSuccess => 1,
            History::Success => 2,
            History::Failure => 3,
            History::Unobserved => 4,
        }
    }
}

/// Treatment of events whose probability falls below [`OFF_PATH_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffPathPolicy {
    /// Floor both joint probabilities at the threshold before forming the ratio.
    #[default]
    Clamp,
    /// Keep the exact log-space ratio; only events of probability exactly zero
    /// under both types get ratio one. Used inside the fixed-point scan.
    Exact,
}

/// A likelihood ratio held in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Llr {
    pub log_value: f64,
    /// d/dc of `log_value` with respect to the conjectured cutoff.
    pub dlog_dc: f64,
    pub off_path: bool,
}

impl Llr {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    fn neutral(off_path: bool) -> Self {
        Llr {
            log_value: 0.0,
            dlog_dc: 0.0,
            off_path,
        }
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Per-type joint log-probability of one history together with its c-derivative.
#[derive(Debug, Clone, Copy)]
struct EventLog {
    ln_p: f64,
    dln_p: f64,
}

/// Building blocks for one type at conjectured cutoff `c`:
/// `S = α r(1|1)`, `F = (1-α) r(1|0)`, `N = 1 - S - F`, in logs, plus the
/// matching density terms `dS/dc = -α f(c|1)`, `dF/dc = -(1-α) f(c|0)`.
#[derive(Debug, Clone, Copy)]
struct TypeBlocks {
    ln_s: f64,
    ln_f: f64,
    ln_n: f64,
    ln_ds: f64,
    ln_df: f64,
}

impl TypeBlocks {
    fn new<S: SignalFamily + ?Sized>(model: &S, theta: Ability, alpha: f64, c: f64) -> Self {
        let (la, lna) = (alpha.ln(), (1.0 - alpha).ln());
        let ln_s = la + model.log_survival(theta, State::Good, c);
        let ln_f = lna + model.log_survival(theta, State::Bad, c);
        let ln_n = log_sum_exp(
            la + model.log_cdf(theta, State::Good, c),
            lna + model.log_cdf(theta, State::Bad, c),
        );
        let (ln_ds, ln_df) = if c.is_finite() {
            (
                la + model.log_density(theta, State::Good, c),
                lna + model.log_density(theta, State::Bad, c),
            )
        } else {
            (f64::NEG_INFINITY, f64::NEG_INFINITY)
        };
        TypeBlocks {
            ln_s,
            ln_f,
            ln_n,
            ln_ds,
            ln_df,
        }
    }

    /// `ln(w_s S + w_f F)` and its derivative.
    fn risky_mix(&self, w_s: f64, w_f: f64) -> EventLog {
        let term = |w: f64, ln: f64| {
            if w > 0.0 {
                w.ln() + ln
            } else {
                f64::NEG_INFINITY
            }
        };
        let ln_p = log_sum_exp(term(w_s, self.ln_s), term(w_f, self.ln_f));
        let ln_dp = log_sum_exp(term(w_s, self.ln_ds), term(w_f, self.ln_df));
        EventLog {
            ln_p,
            dln_p: ratio_exp(ln_dp, ln_p, -1.0),
        }
    }

    fn safe(&self) -> EventLog {
        let ln_dp = log_sum_exp(self.ln_ds, self.ln_df);
        EventLog {
            ln_p: self.ln_n,
            dln_p: ratio_exp(ln_dp, self.ln_n, 1.0),
        }
    }
}

/// `sign * exp(ln_num - ln_den)`, zero when the numerator vanishes.
fn ratio_exp(ln_num: f64, ln_den: f64, sign: f64) -> f64 {
    if ln_num == f64::NEG_INFINITY || ln_den == f64::NEG_INFINITY {
        0.0
    } else {
        sign * (ln_num - ln_den).exp()
    }
}

/// Joint log-probabilities of a history under (H, L), including θ-independent
/// factors (λ, η, ε) so the off-path test sees the real event probability.
fn joint_event<S: SignalFamily + ?Sized>(
    model: &S,
    alpha: f64,
    c: f64,
    history: History,
    frictions: &FrictionSpec,
) -> [EventLog; 2] {
    let eps = frictions.eps_flip;
    let lam = frictions.lambda_impl;
    let eta = frictions.eta_base;
    let mut out = [EventLog {
        ln_p: 0.0,
        dln_p: 0.0,
    }; 2];
    for (i, theta) in Ability::BOTH.into_iter().enumerate() {
        let b = TypeBlocks::new(model, theta, alpha, c);
        let (mut ev, scale) = match history {
            History::Success => (b.risky_mix(1.0 - eps, eps), lam),
            History::Failure => (b.risky_mix(eps, 1.0 - eps), lam),
            History::Unobserved => (b.risky_mix(1.0, 1.0), 1.0 - lam),
            History::Safe => (b.safe(), 1.0 - eta),
            History::SafeSuccess => (b.safe(), eta),
        };
        ev.ln_p += if scale > 0.0 {
            scale.ln()
        } else {
            f64::NEG_INFINITY
        };
        out[i] = ev;
    }
    out
}

fn event_llr(ev: [EventLog; 2], policy: OffPathPolicy) -> Llr {
    let floor = OFF_PATH_FLOOR.ln();
    let [h, l] = ev;
    let off_path = h.ln_p < floor || l.ln_p < floor;
    if h.ln_p == f64::NEG_INFINITY && l.ln_p == f64::NEG_INFINITY {
        return Llr::neutral(true);
    }
    match policy {
        OffPathPolicy::Clamp if off_path => {
            let (lh, dh) = if h.ln_p < floor {
                (floor, 0.0)
            } else {
                (h.ln_p, h.dln_p)
            };
            let (ll, dl) = if l.ln_p < floor {
                (floor, 0.0)
            } else {
                (l.ln_p, l.dln_p)
            };
            Llr {
                log_value: lh - ll,
                dlog_dc: dh - dl,
                off_path,
            }
        }
        _ => Llr {
            log_value: h.ln_p - l.ln_p,
            dlog_dc: h.dln_p - l.dln_p,
            off_path,
        },
    }
}

/// Outcome likelihood ratios `(L⁺, L⁻)` at cutoff `c`: survival-probability
/// ratios `r_H(1|ω) / r_L(1|ω)` for ω = 1 and ω = 0.
pub fn outcome_llrs<S: SignalFamily + ?Sized>(model: &S, c: f64) -> Result<(f64, f64)> {
    if c.is_nan() {
        return Err(Error::invalid("c", "must not be NaN"));
    }
    let (p, m) = outcome_log_llrs(model, c);
    Ok((p.value(), m.value()))
}

fn outcome_log_llrs<S: SignalFamily + ?Sized>(model: &S, c: f64) -> (Llr, Llr) {
    let one = |omega: State| {
        let lh = model.log_survival(Ability::High, omega, c);
        let ll = model.log_survival(Ability::Low, omega, c);
        if lh == f64::NEG_INFINITY && ll == f64::NEG_INFINITY {
            return Llr::neutral(true);
        }
        let haz = |theta: Ability| {
            if c.is_finite() {
                (model.log_density(theta, omega, c) - model.log_survival(theta, omega, c)).exp()
            } else {
                0.0
            }
        };
        Llr {
            log_value: lh - ll,
            dlog_dc: haz(Ability::Low) - haz(Ability::High),
            off_path: false,
        }
    };
    (one(State::Good), one(State::Bad))
}

/// Frictionless joint likelihood ratio `Pr(h | H) / Pr(h | L)` at the
/// conjectured cutoff, with off-path events clamped and flagged.
pub fn history_llr<S: SignalFamily + ?Sized>(
    model: &S,
    beliefs: &BeliefState,
    conjectured_cutoff: f64,
    history: History,
) -> Result<Llr> {
    beliefs.validate()?;
    if conjectured_cutoff.is_nan() {
        return Err(Error::invalid("conjectured_cutoff", "must not be NaN"));
    }
    let frictions = match history {
        History::Unobserved => FrictionSpec::default().with_lambda(0.5),
        History::SafeSuccess => FrictionSpec {
            eta_base: 0.5,
            ..FrictionSpec::default()
        },
        _ => FrictionSpec::default(),
    };
    Ok(llr_with(
        model,
        beliefs.alpha,
        conjectured_cutoff,
        history,
        &frictions,
        OffPathPolicy::Clamp,
    ))
}

/// Likelihood ratio of one history under the given frictions and policy.
///
/// With ε = 0 the outcome histories are formed directly as log-survival
/// differences, so λ and η never perturb them.
pub fn llr_with<S: SignalFamily + ?Sized>(
    model: &S,
    alpha: f64,
    c: f64,
    history: History,
    frictions: &FrictionSpec,
    policy: OffPathPolicy,
) -> Llr {
    let outcome = matches!(history, History::Success | History::Failure);
    let eps = frictions.eps_flip;
    if outcome && eps > 0.0 && frictions.misclassification == MisclassificationRule::LiteralRatioMix
    {
        return literal_ratio_mix(model, alpha, c, history, frictions, policy);
    }
    if outcome && eps == 0.0 {
        let flagged = event_llr(joint_event(model, alpha, c, history, frictions), policy);
        if flagged.off_path && policy == OffPathPolicy::Clamp {
            return flagged;
        }
        let (p, m) = outcome_log_llrs(model, c);
        let exact = if history == History::Success { p } else { m };
        return Llr {
            off_path: flagged.off_path,
            ..exact
        };
    }
    event_llr(joint_event(model, alpha, c, history, frictions), policy)
}

fn literal_ratio_mix<S: SignalFamily + ?Sized>(
    model: &S,
    alpha: f64,
    c: f64,
    history: History,
    frictions: &FrictionSpec,
    policy: OffPathPolicy,
) -> Llr {
    let clean = FrictionSpec {
        eps_flip: 0.0,
        ..*frictions
    };
    let lp = llr_with(model, alpha, c, History::Success, &clean, policy);
    let lm = llr_with(model, alpha, c, History::Failure, &clean, policy);
    let (same, other) = if history == History::Success {
        (lp, lm)
    } else {
        (lm, lp)
    };
    let eps = frictions.eps_flip;
    // (1-ε) e^{a} + ε e^{-b}
    let t1 = (1.0 - eps).ln() + same.log_value;
    let t2 = eps.ln() - other.log_value;
    let log_value = log_sum_exp(t1, t2);
    let w1 = (t1 - log_value).exp();
    let w2 = (t2 - log_value).exp();
    Llr {
        log_value,
        dlog_dc: w1 * same.dlog_dc - w2 * other.dlog_dc,
        off_path: same.off_path || other.off_path,
    }
}

/// Posterior reputations after each public history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorSet {
    /// π⁺ = π^{1,1}
    pub pi_success: f64,
    /// π⁻ = π^{1,0}
    pub pi_failure: f64,
    /// π̃ = π^{0,0}
    pub pi_safe: f64,
    /// π^{0,1}, present when η > 0. Equal to π̃.
    pub pi_safe_success: Option<f64>,
    /// π^{1,∅}, present when λ < 1.
    pub pi_norec_outcome: Option<f64>,
    pub off_path: bool,
}

/// Posteriors together with their derivatives in the conjectured cutoff.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PosteriorDetail {
    pub set: PosteriorSet,
    pub d_success: f64,
    pub d_failure: f64,
    pub d_safe: f64,
}

fn posterior_from(log_odds: f64, llr: &Llr) -> (f64, f64) {
    let p = logistic(log_odds + llr.log_value);
    (p, p * (1.0 - p) * llr.dlog_dc)
}

pub(crate) fn posterior_detail<S: SignalFamily + ?Sized>(
    model: &S,
    beliefs: &BeliefState,
    c: f64,
    frictions: &FrictionSpec,
    policy: OffPathPolicy,
) -> PosteriorDetail {
    let lo = beliefs.log_odds();
    let llr = |h| llr_with(model, beliefs.alpha, c, h, frictions, policy);
    let (ls, lf, l0) = (
        llr(History::Success),
        llr(History::Failure),
        llr(History::Safe),
    );
    let (pi_success, d_success) = posterior_from(lo, &ls);
    let (pi_failure, d_failure) = posterior_from(lo, &lf);
    let (pi_safe, d_safe) = posterior_from(lo, &l0);
    let mut off_path = ls.off_path || lf.off_path || l0.off_path;
    let pi_safe_success = (frictions.eta_base > 0.0).then(|| {
        let l = llr(History::SafeSuccess);
        off_path |= l.off_path;
        posterior_from(lo, &l).0
    });
    let pi_norec_outcome = (frictions.lambda_impl < 1.0).then(|| {
        let l = llr(History::Unobserved);
        off_path |= l.off_path;
        posterior_from(lo, &l).0
    });
    PosteriorDetail {
        set: PosteriorSet {
            pi_success,
            pi_failure,
            pi_safe,
            pi_safe_success,
            pi_norec_outcome,
            off_path,
        },
        d_success,
        d_failure,
        d_safe,
    }
}

/// Posterior reputations at the conjectured cutoff, with off-path clamping.
pub fn posteriors<S: SignalFamily + ?Sized>(
    model: &S,
    beliefs: &BeliefState,
    conjectured_cutoff: f64,
    frictions: &FrictionSpec,
) -> Result<PosteriorSet> {
    posteriors_with(
        model,
        beliefs,
        conjectured_cutoff,
        frictions,
        OffPathPolicy::Clamp,
    )
}

pub fn posteriors_with<S: SignalFamily + ?Sized>(
    model: &S,
    beliefs: &BeliefState,
    conjectured_cutoff: f64,
    frictions: &FrictionSpec,
    policy: OffPathPolicy,
) -> Result<PosteriorSet> {
    beliefs.validate()?;
    frictions.validate()?;
    if conjectured_cutoff.is_nan() {
        return Err(Error::invalid("conjectured_cutoff", "must not be NaN"));
    }
    Ok(posterior_detail(model, beliefs, conjectured_cutoff, frictions, policy).set)
}

/// One cell of the public-history partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryCell {
    pub history: History,
    pub prob_high: f64,
    pub prob_low: f64,
    /// `π Pr(h|H) + (1-π) Pr(h|L)`
    pub prob: f64,
    pub posterior: f64,
}

/// The histories with positive probability under the frictions, with their
/// type-conditional probabilities and posteriors. Probabilities sum to one.
pub fn history_partition<S: SignalFamily + ?Sized>(
    model: &S,
    beliefs: &BeliefState,
    c: f64,
    frictions: &FrictionSpec,
) -> Result<Vec<HistoryCell>> {
    beliefs.validate()?;
    frictions.validate()?;
    if c.is_nan() {
        return Err(Error::invalid("cutoff", "must not be NaN"));
    }
    let mut cells = Vec::with_capacity(5);
    for h in History::ALL {
        let live = match h {
            History::SafeSuccess => frictions.eta_base > 0.0,
            History::Unobserved => frictions.lambda_impl < 1.0,
            _ => true,
        };
        if !live {
            continue;
        }
        let [eh, el] = joint_event(model, beliefs.alpha, c, h, frictions);
        let (ph, pl) = (eh.ln_p.exp(), el.ln_p.exp());
        let prob = beliefs.pi * ph + (1.0 - beliefs.pi) * pl;
        let llr = llr_with(model, beliefs.alpha, c, h, frictions, OffPathPolicy::Exact);
        cells.push(HistoryCell {
            history: h,
            prob_high: ph,
            prob_low: pl,
            prob,
            posterior: logistic(beliefs.log_odds() + llr.log_value),
        });
    }
    Ok(cells)
}
