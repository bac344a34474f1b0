//! Bonus back-out, target-rate calibration, the affine implementers line and
//! the experimentation response to the bonus.

use crate::equilibrium::{
    fixed_point_residual, high_type_rate, refine, sensitivity, solve_equilibrium, Param, Response,
    Scenario,
};
use crate::error::{check_open_unit, Error, Result};
use crate::signal_model::{Ability, SignalFamily, SignalModel, State};

/// Cutoffs recovered by a re-solve must match the target this closely.
pub const ROUND_TRIP_TOL: f64 = 1e-6;

/// The cutoff at which the high type recommends risky with probability `rho_star`.
pub fn cutoff_for_target(sc: &Scenario, rho_star: f64) -> Result<f64> {
    sc.beliefs.validate()?;
    check_open_unit("rho_star", rho_star)?;
    let model = &sc.model;
    let alpha = sc.beliefs.alpha;
    let f = |c: f64| {
        let dens = (1.0 - alpha) * model.density(Ability::High, State::Bad, c)
            + alpha * model.density(Ability::High, State::Good, c);
        (high_type_rate(model, alpha, c) - rho_star, -dens)
    };
    let (mut lo, mut hi) = model.scan_bounds();
    while f(lo).0 <= 0.0 {
        lo -= hi - lo;
    }
    while f(hi).0 >= 0.0 {
        hi += hi - lo;
    }
    refine(&f, lo, hi, f(lo).0, f(hi).0)
}

/// The success bonus that makes `c` an equilibrium cutoff, holding every
/// other term (including β0) fixed.
pub fn beta1_backout(sc: &Scenario, c: f64) -> Result<f64> {
    sc.validate()?;
    if !c.is_finite() {
        return Err(Error::invalid("c", "must be finite"));
    }
    let p = sc.model.success_prob(Ability::High, sc.beliefs.alpha, c);
    if p < 1e-12 {
        return Err(Error::DegenerateSuccessProb { cutoff: c });
    }
    let no_bonus = sc.clone().with_beta1(0.0);
    let (g0, _) = fixed_point_residual(&no_bonus, c);
    Ok(-g0 / bonus_weight(sc, p))
}

/// `∂G/∂β1` given the success probability at the cutoff.
fn bonus_weight(sc: &Scenario, p: f64) -> f64 {
    let eps = sc.frictions.eps_flip;
    let [z0, z1] = sc.realization;
    sc.frictions.lambda_impl * (p * z1 * (1.0 - eps) + (1.0 - p) * z0 * eps)
}

/// `-∂G/∂β0` given the success probability at the cutoff.
fn penalty_weight(sc: &Scenario, p: f64) -> f64 {
    let eps = sc.frictions.eps_flip;
    let [z0, z1] = sc.realization;
    sc.frictions.lambda_impl * (p * z1 * eps + (1.0 - p) * z0 * (1.0 - eps))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationRow {
    pub rho_star: f64,
    pub cutoff: f64,
    pub p_h_at_cutoff: f64,
    pub beta1: f64,
    /// `beta1 < 0`
    pub ll_violation: bool,
}

/// Target rate to cutoff to implementing bonus, then a re-solve to confirm
/// the cutoff is an equilibrium under that bonus.
pub fn calibrate(sc: &Scenario, rho_star: f64) -> Result<CalibrationRow> {
    let cutoff = cutoff_for_target(sc, rho_star)?;
    let beta1 = beta1_backout(sc, cutoff)?;
    confirm_root(&sc.clone().with_beta1(beta1), cutoff)?;
    Ok(CalibrationRow {
        rho_star,
        cutoff,
        p_h_at_cutoff: sc
            .model
            .success_prob(Ability::High, sc.beliefs.alpha, cutoff),
        beta1,
        ll_violation: beta1 < 0.0,
    })
}

fn confirm_root(sc: &Scenario, target: f64) -> Result<f64> {
    let sol = solve_equilibrium(sc)?;
    let near = sol
        .all_roots
        .iter()
        .copied()
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()));
    match near {
        Some(c) if (c - target).abs() <= ROUND_TRIP_TOL => Ok(c),
        _ => Err(Error::RoundTrip {
            target,
            recovered: sol.cutoff,
        }),
    }
}

/// `w1 β1 - w0 β0 = -Δ̂`: every transfer pair on this line implements the
/// same cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplementersLine {
    pub cutoff: f64,
    pub weight_beta1: f64,
    pub weight_beta0: f64,
    /// No-transfer fixed-point residual at the target cutoff.
    pub delta_hat: f64,
}

impl ImplementersLine {
    pub fn beta1_for(&self, beta0: f64) -> f64 {
        (self.weight_beta0 * beta0 - self.delta_hat) / self.weight_beta1
    }

    pub fn beta0_for(&self, beta1: f64) -> f64 {
        (self.weight_beta1 * beta1 + self.delta_hat) / self.weight_beta0
    }
}

/// Penalties used to spot-check the line.
const LINE_CHECKS: [f64; 3] = [0.0, 0.05, 0.1];

pub fn implementers_line(sc: &Scenario, rho_star: f64) -> Result<ImplementersLine> {
    let cutoff = cutoff_for_target(sc, rho_star)?;
    let p = sc
        .model
        .success_prob(Ability::High, sc.beliefs.alpha, cutoff);
    if p < 1e-12 {
        return Err(Error::DegenerateSuccessProb { cutoff });
    }
    let bare = sc.clone().with_transfers(Default::default());
    let delta_hat = fixed_point_residual(&bare, cutoff).0;
    let line = ImplementersLine {
        cutoff,
        weight_beta1: bonus_weight(sc, p),
        weight_beta0: penalty_weight(sc, p),
        delta_hat,
    };
    for beta0 in LINE_CHECKS {
        let mut moved = bare.clone();
        moved.transfers.beta0 = beta0;
        moved.transfers.beta1 = line.beta1_for(beta0);
        confirm_root(&moved, cutoff)?;
    }
    Ok(line)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResponse {
    /// `[(1-α) f_H(s*|0) + α f_H(s*|1)] · (-∂s*/∂β1)`
    pub analytic: f64,
    pub finite_diff: f64,
}

/// Response of the high-type risky frequency to the success bonus.
pub fn drho_dbeta1(sc: &Scenario, response: Response) -> Result<RateResponse> {
    let s = sensitivity(sc, Param::Beta1, response)?;
    let c = solve_equilibrium(sc)?.interior()?.cutoff;
    let dens = rate_density(&sc.model, sc.beliefs.alpha, c);
    let slope = s.analytic.expect("beta1 has an analytic slope");
    Ok(RateResponse {
        analytic: -dens * slope,
        finite_diff: -dens * s.finite_diff,
    })
}

fn rate_density(model: &SignalModel, alpha: f64, c: f64) -> f64 {
    (1.0 - alpha) * model.density(Ability::High, State::Bad, c)
        + alpha * model.density(Ability::High, State::Good, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoffs::TransferSpec;

    // (ρ*, c, p_H, β1), frozen from a 40-digit evaluation of the closed forms.
    const TABLE: [(f64, f64, f64, f64); 7] = [
        (
            0.1,
            1.939_365_449_850_621,
            0.808_356_368_479_573_83,
            0.203_097_073_890_686_22,
        ),
        (
            0.2,
            1.449_768_959_621_67,
            0.721_068_711_562_821_97,
            0.159_545_004_520_031_31,
        ),
        (
            0.35,
            0.936_231_078_569_878_78,
            0.607_360_606_703_709_64,
            0.101_321_689_386_454_21,
        ),
        (0.5, 0.5, 0.5, 0.021_871_417_788_405_552),
        (
            0.65,
            0.063_768_921_430_121_222,
            0.392_639_393_296_290_36,
            -0.117_340_257_942_719_57,
        ),
        (
            0.8,
            -0.449_768_959_621_67,
            0.278_931_288_437_178_03,
            -0.422_867_153_988_533_61,
        ),
        (
            0.9,
            -0.939_365_449_850_621_03,
            0.191_643_631_520_426_17,
            -0.950_752_390_754_114_12,
        ),
    ];

    #[test]
    fn cutoff_for_target_examples() {
        let sc = Scenario::baseline();
        assert!((cutoff_for_target(&sc, 0.2).unwrap() - 1.450).abs() < 2e-3);
        assert!((cutoff_for_target(&sc, 0.8).unwrap() + 0.450).abs() < 2e-3);
        assert!((cutoff_for_target(&sc, 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!(cutoff_for_target(&sc, 0.0).is_err());
        assert!(cutoff_for_target(&sc, 1.0).is_err());
        let c = cutoff_for_target(&sc, 1e-9).unwrap();
        assert!((high_type_rate(&sc.model, 0.5, c) - 1e-9).abs() < 1e-10);
    }

    #[test]
    fn calibration_matches_golden_table() {
        let sc = Scenario::baseline();
        for (rho, c, p, b) in TABLE {
            let row = calibrate(&sc, rho).unwrap();
            assert!((row.cutoff - c).abs() < 1e-9, "{rho}");
            assert!((row.p_h_at_cutoff - p).abs() < 1e-9, "{rho}");
            assert!((row.beta1 - b).abs() < 1e-9, "{rho}: {} vs {b}", row.beta1);
            assert_eq!(row.ll_violation, b < 0.0);
        }
    }

    #[test]
    fn backout_examples() {
        let sc = Scenario::baseline();
        assert!((beta1_backout(&sc, 1.450).unwrap() - 0.160).abs() < 2e-3);
        assert!((beta1_backout(&sc, -0.450).unwrap() + 0.423).abs() < 2e-3);
        let mut flat = sc.clone();
        flat.payoff.kappa = 0.0;
        for c in [-1.0, 0.3, 2.0] {
            assert_eq!(beta1_backout(&flat, c).unwrap(), 0.0);
        }
        assert!(matches!(
            beta1_backout(&sc, -60.0),
            Err(Error::DegenerateSuccessProb { .. })
        ));
    }

    #[test]
    fn no_transfer_rate_needs_no_bonus() {
        let sc = Scenario::baseline();
        let rho0 = solve_equilibrium(&sc).unwrap().experimentation_rate;
        let row = calibrate(&sc, rho0).unwrap();
        assert!(row.beta1.abs() < 1e-6);
    }

    #[test]
    fn implementers_line_examples() {
        let sc = Scenario::baseline();
        let rho0 = solve_equilibrium(&sc).unwrap().experimentation_rate;
        let at_rest = implementers_line(&sc, rho0).unwrap();
        assert!(at_rest.delta_hat.abs() < 1e-9);

        let line = implementers_line(&sc, 0.2).unwrap();
        assert!(
            (line.delta_hat + 0.721_068_711_562_821_97 * 0.159_545_004_520_031_31).abs() < 1e-9
        );
        assert!((line.beta1_for(0.0) - 0.159_545_004_520_031_31).abs() < 1e-9);
        let b1 = line.beta1_for(0.1);
        let moved = sc.clone().with_transfers(TransferSpec::new(b1, 0.1));
        let sol = solve_equilibrium(&moved).unwrap();
        assert!((sol.cutoff - line.cutoff).abs() < 1e-8);
        assert!((sol.cutoff - 1.450).abs() < 1e-3);
    }

    #[test]
    fn rate_response_matches_difference() {
        let sc = Scenario::baseline().with_beta1(0.022);
        for response in [Response::Equilibrium, Response::FixedConjecture] {
            let r = drho_dbeta1(&sc, response).unwrap();
            assert!(((r.analytic - r.finite_diff) / r.analytic).abs() < 1e-4);
        }
        let fixed = drho_dbeta1(&sc, Response::FixedConjecture).unwrap();
        assert!(fixed.analytic > 0.0);
    }

    #[test]
    fn transfer_only_rate_response_closed_form() {
        // κ = 0, φ = 0: G = p β1 - (1-p) β0, root at p_H(c) = β0 / (β1 + β0).
        let mut sc = Scenario::baseline().with_transfers(TransferSpec::new(0.1, 0.1));
        sc.payoff.kappa = 0.0;
        let c = solve_equilibrium(&sc).unwrap().cutoff;
        assert!((c - 0.5).abs() < 1e-12);
        // p = 1/2, p'(c) = p(1-p) (μ1-μ0)/σH² = 1/4.
        let ds = -0.5 / (0.25 * 0.2);
        let dens = 0.5 * crate::signal_model::normal_pdf(0.5) * 2.0;
        let r = drho_dbeta1(&sc, Response::Equilibrium).unwrap();
        assert!((r.analytic - (-dens * ds)).abs() < 1e-12);
        assert!(r.analytic > 0.0);
    }
}
