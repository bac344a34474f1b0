//! Risky-safe advantage, the cutoff fixed point, and diagnostics built on it.
//!
//! The market forms posteriors from a conjectured cutoff `c`; the expert
//! compares risky and safe advice at its own signal `s`. An equilibrium is a
//! conjecture that is its own best response: `G(c) = advantage(c; c) = 0`.

use rayon::prelude::*;

use crate::belief_engine::{
    posterior_detail, BeliefState, FrictionSpec, OffPathPolicy, PosteriorSet,
};
use crate::error::{check_open_unit, CornerDirection, Error, Result};
use crate::payoffs::{PayoffSpec, TransferSpec};
use crate::signal_model::{Ability, SignalFamily, SignalModel, State};

pub const SCAN_POINTS: usize = 400;
pub const MAX_ITERATIONS: usize = 200;
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Everything the advantage depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<S = SignalModel> {
    pub model: S,
    pub beliefs: BeliefState,
    pub payoff: PayoffSpec,
    pub transfers: TransferSpec,
    pub frictions: FrictionSpec,
    /// Probability that a risky recommendation is carried out given the
    /// state, on top of λ: `[ζ0, ζ1]`. Both one outside committees.
    pub realization: [f64; 2],
    /// Signal model the expert uses for its own `p_H(s)`; `None` means the
    /// true one. The market always updates with `model`.
    pub perceived: Option<S>,
}

impl Scenario<SignalModel> {
    /// `(μ0, μ1, σH, σL, α, π) = (0, 1, 1, 1.7, 0.5, 0.5)`, `V = π²`, no
    /// flow payoff, transfers or frictions.
    pub fn baseline() -> Self {
        Scenario::new(
            SignalModel::baseline(),
            BeliefState {
                pi: 0.5,
                alpha: 0.5,
            },
            PayoffSpec::quadratic(),
        )
    }
}

impl<S: SignalFamily + Clone> Scenario<S> {
    pub fn new(model: S, beliefs: BeliefState, payoff: PayoffSpec) -> Self {
        Scenario {
            model,
            beliefs,
            payoff,
            transfers: TransferSpec::default(),
            frictions: FrictionSpec::default(),
            realization: [1.0, 1.0],
            perceived: None,
        }
    }

    pub fn with_transfers(mut self, transfers: TransferSpec) -> Self {
        self.transfers = transfers;
        self
    }

    pub fn with_beta1(mut self, beta1: f64) -> Self {
        self.transfers.beta1 = beta1;
        self
    }

    pub fn with_frictions(mut self, frictions: FrictionSpec) -> Self {
        self.frictions = frictions;
        self
    }

    pub fn with_pi(mut self, pi: f64) -> Self {
        self.beliefs.pi = pi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if let Some(p) = &self.perceived {
            p.validate()?;
        }
        self.beliefs.validate()?;
        self.payoff.validate()?;
        self.transfers.validate()?;
        self.frictions.validate()?;
        for (i, z) in self.realization.iter().enumerate() {
            if !(0.0..=1.0).contains(z) {
                return Err(Error::invalid(
                    format!("realization[{i}]"),
                    format!("must lie in [0, 1], got {z}"),
                ));
            }
        }
        Ok(())
    }

    fn perceiver(&self) -> &S {
        self.perceived.as_ref().unwrap_or(&self.model)
    }

    fn p_h(&self, s: f64) -> f64 {
        self.perceiver()
            .success_prob(Ability::High, self.beliefs.alpha, s)
    }

    fn p_h_slope(&self, s: f64) -> f64 {
        if !s.is_finite() {
            return 0.0;
        }
        self.perceiver()
            .success_prob_slope(Ability::High, self.beliefs.alpha, s)
    }
}

/// Reputational and transfer returns of the risky branch at one conjecture.
#[derive(Debug, Clone, Copy)]
struct Branches {
    /// Return in the success state (observed outcomes mixed by ε), scaled by ζ1.
    good: f64,
    /// Return in the failure state, scaled by ζ0.
    bad: f64,
    d_good: f64,
    d_bad: f64,
    posteriors: PosteriorSet,
}

fn branches<S: SignalFamily + Clone>(sc: &Scenario<S>, conj: f64) -> Branches {
    let d = posterior_detail(
        &sc.model,
        &sc.beliefs,
        conj,
        &sc.frictions,
        OffPathPolicy::Exact,
    );
    let p = &d.set;
    let pay = &sc.payoff;
    let t = &sc.transfers;
    let v_safe = pay.v(p.pi_safe);
    let a_plus = pay.v(p.pi_success) - v_safe + t.beta1;
    let a_minus = pay.v(p.pi_failure) - v_safe - t.beta0;
    let dv_safe = pay.v_slope(p.pi_safe) * d.d_safe;
    let da_plus = pay.v_slope(p.pi_success) * d.d_success - dv_safe;
    let da_minus = pay.v_slope(p.pi_failure) * d.d_failure - dv_safe;
    let eps = sc.frictions.eps_flip;
    let [z0, z1] = sc.realization;
    Branches {
        good: z1 * ((1.0 - eps) * a_plus + eps * a_minus),
        bad: z0 * ((1.0 - eps) * a_minus + eps * a_plus),
        d_good: z1 * ((1.0 - eps) * da_plus + eps * da_minus),
        d_bad: z0 * ((1.0 - eps) * da_minus + eps * da_plus),
        posteriors: d.set,
    }
}

/// Value of the risky-safe advantage and whether any history was off-path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvantageValue {
    pub value: f64,
    pub off_path: bool,
}

/// `φ + λ[p_H(s) A⁺ + (1-p_H(s)) A⁻]` with posteriors at the conjectured
/// cutoff, where `A^± = V(π^±) - V(π̃) ± β` are the state-contingent returns.
pub fn advantage<S: SignalFamily + Clone>(
    sc: &Scenario<S>,
    s: f64,
    conjectured_cutoff: f64,
) -> Result<AdvantageValue> {
    sc.validate()?;
    if s.is_nan() || conjectured_cutoff.is_nan() {
        return Err(Error::invalid("cutoff", "must not be NaN"));
    }
    let b = branches(sc, conjectured_cutoff);
    Ok(AdvantageValue {
        value: combine(sc, &b, s),
        off_path: b.posteriors.off_path,
    })
}

fn combine<S: SignalFamily + Clone>(sc: &Scenario<S>, b: &Branches, s: f64) -> f64 {
    let p = sc.p_h(s);
    sc.payoff.phi + sc.frictions.lambda_impl * (p * b.good + (1.0 - p) * b.bad)
}

/// `∂/∂s advantage(s; conj)`.
pub fn advantage_slope_in_s<S: SignalFamily + Clone>(sc: &Scenario<S>, s: f64, conj: f64) -> f64 {
    let b = branches(sc, conj);
    sc.frictions.lambda_impl * sc.p_h_slope(s) * (b.good - b.bad)
}

/// `G(c)` and its total derivative `dG/dc`.
pub fn fixed_point_residual<S: SignalFamily + Clone>(sc: &Scenario<S>, c: f64) -> (f64, f64) {
    let b = branches(sc, c);
    let p = sc.p_h(c);
    let dp = sc.p_h_slope(c);
    let g = sc.payoff.phi + sc.frictions.lambda_impl * (p * b.good + (1.0 - p) * b.bad);
    let dg =
        sc.frictions.lambda_impl * (dp * (b.good - b.bad) + p * b.d_good + (1.0 - p) * b.d_bad);
    (g, dg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    Interior,
    Corner(CornerDirection),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    /// Canonical (smallest) root; `±∞` at a corner.
    pub cutoff: f64,
    pub kind: EquilibriumKind,
    pub posteriors: PosteriorSet,
    /// `p_H(s*)` under the true signal model.
    pub success_prob_at_cutoff: f64,
    /// High-type risky frequency at the cutoff.
    pub experimentation_rate: f64,
    pub all_roots: Vec<f64>,
    /// Some history at the cutoff has probability below 1e-12 under a type.
    pub off_path: bool,
    /// `G(cutoff)`; at a corner, `G` at the nearest scan endpoint.
    pub residual: f64,
    /// `dG/dc` at the cutoff. Negative at a downward crossing.
    pub slope: f64,
}

impl EquilibriumSolution {
    pub fn is_interior(&self) -> bool {
        self.kind == EquilibriumKind::Interior
    }

    /// The solution itself when interior, otherwise `NoInteriorEquilibrium`.
    pub fn interior(&self) -> Result<&Self> {
        match self.kind {
            EquilibriumKind::Interior => Ok(self),
            EquilibriumKind::Corner(direction) => Err(Error::NoInteriorEquilibrium { direction }),
        }
    }
}

/// Roots of `f` on `[lo, hi]`: sign-change scan, then safeguarded Newton.
pub(crate) fn scan_roots(
    f: impl Fn(f64) -> (f64, f64),
    lo: f64,
    hi: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = SCAN_POINTS;
    let xs: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let gs: Vec<f64> = xs.iter().map(|&x| f(x).0).collect();
    let mut roots = Vec::new();
    for i in 0..n {
        if gs[i] == 0.0 {
            roots.push(xs[i]);
        } else if i + 1 < n && gs[i] * gs[i + 1] < 0.0 {
            roots.push(refine(&f, xs[i], xs[i + 1], gs[i], gs[i + 1])?);
        }
    }
    Ok((roots, gs))
}

/// Safeguarded Newton iteration inside a sign-change bracket.
pub(crate) fn refine(
    f: &impl Fn(f64) -> (f64, f64),
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    fb: f64,
) -> Result<f64> {
    debug_assert!(fa * fb < 0.0);
    let mut x = 0.5 * (a + b);
    let mut dx_old = (b - a).abs();
    let mut dx = dx_old;
    for _ in 0..MAX_ITERATIONS {
        let (fx, dfx) = f(x);
        if fx == 0.0 || fx.abs() <= 1e-15 {
            return Ok(x);
        }
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
            if fx.abs() <= RESIDUAL_TOL {
                return Ok(x);
            }
            break;
        }
        let newton = x - fx / dfx;
        let newton_ok = dfx.is_finite()
            && dfx != 0.0
            && newton > lo
            && newton < hi
            && (2.0 * fx).abs() <= (dx_old * dfx).abs();
        dx_old = dx;
        if newton_ok {
            dx = (fx / dfx).abs();
            x = newton;
        } else {
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        last: x,
    })
}

/// All fixed points on `[μ0 - 8σL, μ1 + 8σL]`; the smallest is canonical.
/// With no sign change the solution is a corner with a `±∞` cutoff.
pub fn solve_equilibrium<S: SignalFamily + Clone>(sc: &Scenario<S>) -> Result<EquilibriumSolution> {
    sc.validate()?;
    let (lo, hi) = sc.model.scan_bounds();
    let (roots, gs) = scan_roots(|c| fixed_point_residual(sc, c), lo, hi)?;
    let (cutoff, kind, residual) = match roots.first() {
        Some(&c) => (c, EquilibriumKind::Interior, fixed_point_residual(sc, c).0),
        None if gs[0] > 0.0 => (
            f64::NEG_INFINITY,
            EquilibriumKind::Corner(CornerDirection::AllRisky),
            gs[0],
        ),
        None => (
            f64::INFINITY,
            EquilibriumKind::Corner(CornerDirection::AllSafe),
            gs[gs.len() - 1],
        ),
    };
    Ok(solution_at(sc, cutoff, kind, residual, roots))
}

fn solution_at<S: SignalFamily + Clone>(
    sc: &Scenario<S>,
    cutoff: f64,
    kind: EquilibriumKind,
    residual: f64,
    all_roots: Vec<f64>,
) -> EquilibriumSolution {
    let detail = posterior_detail(
        &sc.model,
        &sc.beliefs,
        cutoff,
        &sc.frictions,
        OffPathPolicy::Exact,
    );
    let slope = if cutoff.is_finite() {
        fixed_point_residual(sc, cutoff).1
    } else {
        f64::NAN
    };
    EquilibriumSolution {
        cutoff,
        kind,
        posteriors: detail.set,
        success_prob_at_cutoff: sc
            .model
            .success_prob(Ability::High, sc.beliefs.alpha, cutoff),
        experimentation_rate: high_type_rate(&sc.model, sc.beliefs.alpha, cutoff),
        all_roots,
        off_path: detail.set.off_path,
        residual,
        slope,
    }
}

/// Root of `advantage(·; conj)` nearest to `conj`: the expert's best-response
/// cutoff when the market conjecture is pinned.
pub fn best_response<S: SignalFamily + Clone>(sc: &Scenario<S>, conj: f64) -> Result<f64> {
    sc.validate()?;
    let b = branches(sc, conj);
    let lam = sc.frictions.lambda_impl;
    let f = |s: f64| {
        let p = sc.p_h(s);
        (
            sc.payoff.phi + lam * (p * b.good + (1.0 - p) * b.bad),
            lam * sc.p_h_slope(s) * (b.good - b.bad),
        )
    };
    let (lo, hi) = sc.model.scan_bounds();
    let (roots, gs) = scan_roots(f, lo, hi)?;
    nearest(&roots, conj).ok_or(Error::NoInteriorEquilibrium {
        direction: if gs[0] > 0.0 {
            CornerDirection::AllRisky
        } else {
            CornerDirection::AllSafe
        },
    })
}

fn nearest(roots: &[f64], target: f64) -> Option<f64> {
    roots
        .iter()
        .copied()
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
}

/// Weighting convention for the experimentation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateConvention {
    /// `(1-α) r_H(1|0; c) + α r_H(1|1; c)`
    HighType,
    /// `1 - F_S(c)` with `F_S` the π-weighted mixture over types.
    Unconditional { pi: f64 },
}

pub fn type_rate<S: SignalFamily + ?Sized>(model: &S, theta: Ability, alpha: f64, c: f64) -> f64 {
    (1.0 - alpha) * model.survival(theta, State::Bad, c)
        + alpha * model.survival(theta, State::Good, c)
}

pub fn high_type_rate<S: SignalFamily + ?Sized>(model: &S, alpha: f64, c: f64) -> f64 {
    type_rate(model, Ability::High, alpha, c)
}

pub fn experimentation_rate<S: SignalFamily + ?Sized>(
    model: &S,
    beliefs: &BeliefState,
    c: f64,
    convention: RateConvention,
) -> Result<f64> {
    beliefs.validate()?;
    if c.is_nan() {
        return Err(Error::invalid("c", "must not be NaN"));
    }
    Ok(match convention {
        RateConvention::HighType => high_type_rate(model, beliefs.alpha, c),
        RateConvention::Unconditional { pi } => {
            check_open_unit("pi", pi)?;
            pi * type_rate(model, Ability::High, beliefs.alpha, c)
                + (1.0 - pi) * type_rate(model, Ability::Low, beliefs.alpha, c)
        }
    })
}

/// `∂_π advantage(c; c)` by central difference at fixed signal and conjecture.
pub fn rd_derivative<S: SignalFamily + Clone>(sc: &Scenario<S>, c: f64) -> Result<f64> {
    sc.validate()?;
    if !c.is_finite() {
        return Err(Error::invalid("c", "must be finite"));
    }
    let pi = sc.beliefs.pi;
    let h = 1e-5_f64.min(0.5 * pi).min(0.5 * (1.0 - pi));
    let at = |p: f64| {
        let shifted = sc.clone().with_pi(p);
        fixed_point_residual(&shifted, c).0
    };
    Ok((at(pi + h) - at(pi - h)) / (2.0 * h))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub pi: f64,
    pub cutoff: f64,
    pub kind: EquilibriumKind,
    pub rho: f64,
    /// NaN at corners.
    pub rd_derivative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservatismSweep {
    pub rows: Vec<Result<SweepRow>>,
    /// Index `i` of each adjacent pair `(i, i+1)` with `rd_derivative ≤ 0`
    /// at both points and a strictly decreasing cutoff.
    pub violations: Vec<usize>,
}

/// Solve at each reputation on the grid and flag adjacent pairs where the
/// reputational-dividend derivative is nonpositive at both points yet the
/// cutoff strictly falls.
pub fn conservatism_sweep<S: SignalFamily + Clone + Sync>(
    sc: &Scenario<S>,
    pi_grid: &[f64],
) -> Result<ConservatismSweep> {
    for (i, &p) in pi_grid.iter().enumerate() {
        check_open_unit(&format!("pi_grid[{i}]"), p)?;
        if i > 0 && p <= pi_grid[i - 1] {
            return Err(Error::invalid("pi_grid", "must be strictly increasing"));
        }
    }
    let rows: Vec<Result<SweepRow>> = pi_grid
        .par_iter()
        .map(|&pi| {
            let s = sc.clone().with_pi(pi);
            let sol = solve_equilibrium(&s)?;
            let rd = if sol.is_interior() {
                rd_derivative(&s, sol.cutoff)?
            } else {
                f64::NAN
            };
            Ok(SweepRow {
                pi,
                cutoff: sol.cutoff,
                kind: sol.kind,
                rho: sol.experimentation_rate,
                rd_derivative: rd,
            })
        })
        .collect();
    let mut violations = Vec::new();
    for i in 0..rows.len().saturating_sub(1) {
        if let (Ok(a), Ok(b)) = (&rows[i], &rows[i + 1]) {
            if a.rd_derivative <= 0.0 && b.rd_derivative <= 0.0 && b.cutoff < a.cutoff {
                violations.push(i);
            }
        }
    }
    Ok(ConservatismSweep { rows, violations })
}

/// Scalar parameters that sweeps and sensitivities can move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    Pi,
    Alpha,
    Beta1,
    Beta0,
    Lambda,
    SigmaH,
    SigmaL,
    /// `μ1 - μ0`, moved through `μ1`.
    MuGap,
    Kappa,
    Phi,
}

impl Param {
    pub const ALL: [Param; 10] = [
        Param::Pi,
        Param::Alpha,
        Param::Beta1,
        Param::Beta0,
        Param::Lambda,
        Param::SigmaH,
        Param::SigmaL,
        Param::MuGap,
        Param::Kappa,
        Param::Phi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Pi => "pi",
            Param::Alpha => "alpha",
            Param::Beta1 => "beta1",
            Param::Beta0 => "beta0",
            Param::Lambda => "lambda",
            Param::SigmaH => "sigma_h",
            Param::SigmaL => "sigma_l",
            Param::MuGap => "mu_gap",
            Param::Kappa => "kappa",
            Param::Phi => "phi",
        }
    }

    pub fn parse(name: &str) -> Option<Param> {
        Param::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn get(self, sc: &Scenario) -> f64 {
        match self {
            Param::Pi => sc.beliefs.pi,
            Param::Alpha => sc.beliefs.alpha,
            Param::Beta1 => sc.transfers.beta1,
            Param::Beta0 => sc.transfers.beta0,
            Param::Lambda => sc.frictions.lambda_impl,
            Param::SigmaH => sc.model.sigma_h,
            Param::SigmaL => sc.model.sigma_l,
            Param::MuGap => sc.model.mu1 - sc.model.mu0,
            Param::Kappa => sc.payoff.kappa,
            Param::Phi => sc.payoff.phi,
        }
    }

    pub fn set(self, sc: &Scenario, v: f64) -> Scenario {
        let mut out = sc.clone();
        match self {
            Param::Pi => out.beliefs.pi = v,
            Param::Alpha => out.beliefs.alpha = v,
            Param::Beta1 => out.transfers.beta1 = v,
            Param::Beta0 => out.transfers.beta0 = v,
            Param::Lambda => out.frictions.lambda_impl = v,
            Param::SigmaH => out.model.sigma_h = v,
            Param::SigmaL => out.model.sigma_l = v,
            Param::MuGap => out.model.mu1 = out.model.mu0 + v,
            Param::Kappa => out.payoff.kappa = v,
            Param::Phi => out.payoff.phi = v,
        }
        out
    }
}

/// Which cutoff response a sensitivity differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Response {
    /// The equilibrium fixed point: market conjecture moves with the cutoff.
    #[default]
    Equilibrium,
    /// The best response with the market conjecture held at the solved cutoff.
    FixedConjecture,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivity {
    /// Implicit-function slope, for β1, β0, λ and φ.
    pub analytic: Option<f64>,
    pub finite_diff: f64,
}

/// `∂s*/∂ξ` at the canonical equilibrium.
pub fn sensitivity(sc: &Scenario, which: Param, response: Response) -> Result<Sensitivity> {
    let sol = solve_equilibrium(sc)?;
    if let EquilibriumKind::Corner(direction) = sol.kind {
        return Err(Error::SensitivityAtCorner { direction });
    }
    let c = sol.cutoff;
    let xi = which.get(sc);
    let h = 1e-4 * xi.abs().max(1.0);
    let cutoff_at = |v: f64| -> Result<f64> {
        let moved = which.set(sc, v);
        match response {
            Response::Equilibrium => {
                let s = solve_equilibrium(&moved)?;
                if let EquilibriumKind::Corner(direction) = s.kind {
                    return Err(Error::SensitivityAtCorner { direction });
                }
                Ok(nearest(&s.all_roots, c).expect("interior solution has roots"))
            }
            Response::FixedConjecture => best_response(&moved, c),
        }
    };
    // Second-order one-sided stencils at the edge of a parameter's domain.
    let admissible = |v: f64| which.set(sc, v).validate().is_ok();
    let finite_diff = if !admissible(xi + h) {
        (3.0 * c - 4.0 * cutoff_at(xi - h)? + cutoff_at(xi - 2.0 * h)?) / (2.0 * h)
    } else if !admissible(xi - h) {
        (-3.0 * c + 4.0 * cutoff_at(xi + h)? - cutoff_at(xi + 2.0 * h)?) / (2.0 * h)
    } else {
        (cutoff_at(xi + h)? - cutoff_at(xi - h)?) / (2.0 * h)
    };
    let denom = match response {
        Response::Equilibrium => sol.slope,
        Response::FixedConjecture => advantage_slope_in_s(sc, c, c),
    };
    let analytic = partial_in(sc, which, c).map(|num| -num / denom);
    Ok(Sensitivity {
        analytic,
        finite_diff,
    })
}

/// `∂G/∂ξ` at cutoff `c` where a closed form is available.
fn partial_in(sc: &Scenario, which: Param, c: f64) -> Option<f64> {
    let p = sc.p_h(c);
    let eps = sc.frictions.eps_flip;
    let lam = sc.frictions.lambda_impl;
    let [z0, z1] = sc.realization;
    match which {
        Param::Beta1 => Some(lam * (p * z1 * (1.0 - eps) + (1.0 - p) * z0 * eps)),
        Param::Beta0 => Some(-lam * (p * z1 * eps + (1.0 - p) * z0 * (1.0 - eps))),
        Param::Lambda => Some((fixed_point_residual(sc, c).0 - sc.payoff.phi) / lam),
        Param::Phi => Some(1.0),
        _ => None,
    }
}
