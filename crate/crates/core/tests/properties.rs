use proptest::prelude::*;

use repcut_core::belief_engine::{history_partition, odds, odds_inv, FrictionSpec};
use repcut_core::committee::{pivotality, pivotality_enumerated, CommitteeSpec};
use repcut_core::equilibrium::{fixed_point_residual, solve_equilibrium, Scenario};
use repcut_core::payoffs::{PayoffFamily, PayoffSpec};
use repcut_core::signal_model::normal::normal_cdf;
use repcut_core::signal_model::{success_prob_at, SignalModel, State};
use repcut_core::BeliefState;

fn model() -> impl Strategy<Value = SignalModel> {
    (-1.0..1.0f64, 0.2..3.0f64, 0.3..2.0f64, 1.05..3.0f64).prop_map(|(mu0, gap, sh, ratio)| {
        SignalModel {
            mu0,
            mu1: mu0 + gap,
            sigma_h: sh,
            sigma_l: sh * ratio,
        }
    })
}

fn frictions() -> impl Strategy<Value = FrictionSpec> {
    (0.05..=1.0f64, 0.0..0.45f64, 0.0..0.5f64).prop_map(|(l, e, n)| FrictionSpec {
        lambda_impl: l,
        eps_flip: e,
        eta_base: n,
        ..FrictionSpec::default()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn success_prob_increasing(m in model(), alpha in 0.05..0.95f64, c in -4.0..4.0f64, dc in 1e-3..1.0f64) {
        let lo = success_prob_at(&m, alpha, c).unwrap();
        let hi = success_prob_at(&m, alpha, c + dc).unwrap();
        prop_assert!(hi >= lo);
        if lo < 1.0 - 1e-9 {
            prop_assert!(hi > lo, "p({c}) = {lo}, p({}) = {hi}", c + dc);
        }
    }

    #[test]
    fn normal_cdf_symmetric(x in -30.0..30.0f64) {
        let s = normal_cdf(x) + normal_cdf(-x);
        prop_assert!((s - 1.0).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn bayes_plausible(m in model(), pi in 0.02..0.98f64, alpha in 0.05..0.95f64,
                       c in -3.0..4.0f64, f in frictions()) {
        let b = BeliefState { pi, alpha };
        let cells = history_partition(&m, &b, c, &f).unwrap();
        let total: f64 = cells.iter().map(|h| h.prob).sum();
        let mean: f64 = cells.iter().map(|h| h.prob * h.posterior).sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "total {total}");
        prop_assert!((mean - pi).abs() < 1e-12, "mean posterior {mean} vs {pi}");
        for t in [0usize, 1] {
            let s: f64 = cells.iter().map(|h| if t == 0 { h.prob_high } else { h.prob_low }).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pivotality_matches_enumeration(probs in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 1..=10),
                                      k_frac in 0.0..1.0f64, member_frac in 0.0..1.0f64) {
        let n = probs.len();
        let k = 1 + ((n as f64 * k_frac) as usize).min(n - 1);
        let member = ((n as f64 * member_frac) as usize).min(n - 1);
        let spec = CommitteeSpec::new(k, probs.iter().map(|&(a, b)| [a, b]).collect()).unwrap();
        for w in State::BOTH {
            let a = pivotality(&spec, member, w).unwrap();
            let e = pivotality_enumerated(&spec, member, w).unwrap();
            prop_assert!((a - e).abs() <= 1e-14, "{a} vs {e}");
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn odds_round_trip(pi in 1e-9..(1.0 - 1e-9)) {
        let back = odds_inv(odds(pi).unwrap()).unwrap();
        prop_assert!((back - pi).abs() <= 1e-15 * pi.max(1.0 - pi).max(1e-3));
    }

    #[test]
    fn interior_residual_small(m in model(), pi in 0.1..0.9f64, alpha in 0.2..0.8f64,
                               k in 1.0..3.0f64, beta1 in -0.05..0.2f64) {
        let payoff = PayoffSpec { family: PayoffFamily::Power { k }, phi: 0.0, kappa: 1.0 };
        let sc = Scenario::new(m, BeliefState { pi, alpha }, payoff).with_beta1(beta1);
        if let Ok(sol) = solve_equilibrium(&sc) {
            if sol.is_interior() {
                prop_assert!(sol.residual.abs() <= 1e-9, "residual {}", sol.residual);
                prop_assert!(fixed_point_residual(&sc, sol.cutoff).0.abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn power_payoffs_convex_on_triples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let k = rng.random_range(1.0..4.0);
        let spec = PayoffSpec {
            family: PayoffFamily::Power { k },
            phi: 0.0,
            kappa: rng.random_range(0.1..3.0),
        };
        let mut x: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        x.sort_by(f64::total_cmp);
        let [a, b, c] = x;
        if c - a < 1e-6 {
            continue;
        }
        let t = (b - a) / (c - a);
        let chord = (1.0 - t) * spec.v(a) + t * spec.v(c);
        assert!(spec.v(b) <= chord + 1e-12, "k={k} at {x:?}");
    }
}
