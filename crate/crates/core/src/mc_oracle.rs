//! Seeded Monte Carlo simulation of advisory episodes.
//!
//! Episodes are generated in fixed chunks of [`CHUNK`]; chunk `i` draws from
//! its own ChaCha8 stream `i` under the master seed, and chunks are combined
//! with integer counters, so the summary does not depend on thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::belief_engine::{history_partition, BeliefState, FrictionSpec, History};
use crate::equilibrium::type_rate;
use crate::error::{Error, Result};
use crate::signal_model::{Ability, SignalModel, State};

pub const CHUNK: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Failure,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub theta: Ability,
    pub omega: State,
    pub s: f64,
    pub action: bool,
    pub implemented: bool,
    /// Realized outcome of an implemented risky recommendation.
    pub outcome: Outcome,
    /// `outcome` after misclassification.
    pub observed_outcome: Outcome,
    /// Success under the safe action (probability η).
    pub baseline_success: bool,
}

impl EpisodeRecord {
    pub fn history(&self) -> History {
        match (self.action, self.observed_outcome) {
            (false, _) if self.baseline_success => History::SafeSuccess,
            (false, _) => History::Safe,
            (true, Outcome::None) => History::Unobserved,
            (true, Outcome::Success) => History::Success,
            (true, Outcome::Failure) => History::Failure,
        }
    }
}

/// Inputs of one simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSetup {
    pub model: SignalModel,
    pub beliefs: BeliefState,
    pub cutoff: f64,
    pub frictions: FrictionSpec,
}

impl SimSetup {
    fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.beliefs.validate()?;
        self.frictions.validate()?;
        if self.cutoff.is_nan() {
            return Err(Error::invalid("cutoff", "must not be NaN"));
        }
        Ok(())
    }

    fn episode(&self, rng: &mut ChaCha8Rng) -> EpisodeRecord {
        let u_theta: f64 = rng.random();
        let u_omega: f64 = rng.random();
        let z: f64 = rng.sample(StandardNormal);
        let u_impl: f64 = rng.random();
        let u_flip: f64 = rng.random();
        let u_base: f64 = rng.random();
        let theta = if u_theta < self.beliefs.pi {
            Ability::High
        } else {
            Ability::Low
        };
        let omega = if u_omega < self.beliefs.alpha {
            State::Good
        } else {
            State::Bad
        };
        let s = self.model.mean(omega) + self.model.sigma(theta) * z;
        let action = s >= self.cutoff;
        let implemented = action && u_impl < self.frictions.lambda_impl;
        let outcome = match (implemented, omega) {
            (false, _) => Outcome::None,
            (true, State::Good) => Outcome::Success,
            (true, State::Bad) => Outcome::Failure,
        };
        let observed_outcome = if u_flip < self.frictions.eps_flip {
            match outcome {
                Outcome::Success => Outcome::Failure,
                Outcome::Failure => Outcome::Success,
                Outcome::None => Outcome::None,
            }
        } else {
            outcome
        };
        EpisodeRecord {
            theta,
            omega,
            s,
            action,
            implemented,
            outcome,
            observed_outcome,
            baseline_success: !action && u_base < self.frictions.eta_base,
        }
    }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// The first `n` episodes for `seed`, identical to those behind [`simulate`].
pub fn simulate_episodes(setup: &SimSetup, n: u64, seed: u64) -> Result<Vec<EpisodeRecord>> {
    setup.validate()?;
    let mut out = Vec::with_capacity(n as usize);
    let mut chunk = 0;
    while (out.len() as u64) < n {
        let mut rng = chunk_rng(seed, chunk);
        let take = CHUNK.min(n - out.len() as u64);
        for _ in 0..take {
            out.push(setup.episode(&mut rng));
        }
        chunk += 1;
    }
    Ok(out)
}

/// Integer tallies: `[type][history]` counts and risky counts per type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub by_history: [[u64; 5]; 2],
    pub risky: [u64; 2],
}

impl Counts {
    fn add(mut self, other: Counts) -> Counts {
        for t in 0..2 {
            for h in 0..5 {
                self.by_history[t][h] += other.by_history[t][h];
            }
            self.risky[t] += other.risky[t];
        }
        self
    }

    pub fn of_type(&self, theta: Ability) -> u64 {
        self.by_history[type_index(theta)].iter().sum()
    }

    pub fn of_history(&self, h: History) -> u64 {
        self.by_history[0][h.index()] + self.by_history[1][h.index()]
    }
}

fn type_index(theta: Ability) -> usize {
    match theta {
        Ability::High => 0,
        Ability::Low => 1,
    }
}

/// An empirical proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl Proportion {
    fn new(hits: u64, trials: u64) -> Self {
        if trials == 0 {
            return Proportion {
                estimate: f64::NAN,
                std_error: f64::NAN,
                trials,
            };
        }
        let p = hits as f64 / trials as f64;
        Proportion {
            estimate: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub n_episodes: u64,
    pub seed: u64,
    pub counts: Counts,
}

impl SimSummary {
    /// Empirical `Pr(h)`.
    pub fn freq(&self, h: History) -> Proportion {
        Proportion::new(self.counts.of_history(h), self.n_episodes)
    }

    /// Empirical `Pr(h | θ)`.
    pub fn freq_given(&self, h: History, theta: Ability) -> Proportion {
        Proportion::new(
            self.counts.by_history[type_index(theta)][h.index()],
            self.counts.of_type(theta),
        )
    }

    /// Share of high types among episodes with history `h`.
    pub fn post(&self, h: History) -> Proportion {
        Proportion::new(
            self.counts.by_history[0][h.index()],
            self.counts.of_history(h),
        )
    }

    /// Empirical risky-recommendation rate of type `θ`.
    pub fn rate(&self, theta: Ability) -> Proportion {
        let i = type_index(theta);
        Proportion::new(self.counts.risky[i], self.counts.of_type(theta))
    }

    /// `Σ_h freq(h) post(h)`, which is the high-type share.
    pub fn martingale(&self) -> Proportion {
        Proportion::new(self.counts.of_type(Ability::High), self.n_episodes)
    }
}

/// Simulate `n` episodes at a fixed cutoff.
pub fn simulate(setup: &SimSetup, n: u64, seed: u64) -> Result<SimSummary> {
    setup.validate()?;
    if n == 0 {
        return Err(Error::invalid("episodes", "must be at least 1"));
    }
    let chunks = n.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = chunk_rng(seed, chunk);
            let take = CHUNK.min(n - chunk * CHUNK);
            let mut c = Counts::default();
            for _ in 0..take {
                let e = setup.episode(&mut rng);
                let t = type_index(e.theta);
                c.by_history[t][e.history().index()] += 1;
                c.risky[t] += e.action as u64;
            }
            c
        })
        .reduce(Counts::default, Counts::add);
    Ok(SimSummary {
        n_episodes: n,
        seed,
        counts,
    })
}

/// One empirical statistic against its analytic value.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub analytic: f64,
    pub empirical: f64,
    /// Binomial standard error at the analytic proportion.
    pub std_error: f64,
    pub z: f64,
}

impl Check {
    fn new(name: String, analytic: f64, empirical: f64, trials: u64) -> Check {
        let std_error = (analytic * (1.0 - analytic) / trials as f64).sqrt();
        let diff = empirical - analytic;
        let z = if diff == 0.0 {
            0.0
        } else if std_error > 0.0 {
            diff / std_error
        } else {
            f64::INFINITY.copysign(diff)
        };
        Check {
            name,
            analytic,
            empirical,
            std_error,
            z,
        }
    }
}

/// Empirical statistics side by side with their analytic targets.
pub fn compare(setup: &SimSetup, summary: &SimSummary) -> Result<Vec<Check>> {
    let cells = history_partition(&setup.model, &setup.beliefs, setup.cutoff, &setup.frictions)?;
    let mut out = Vec::new();
    let n_h = summary.counts.of_type(Ability::High);
    for cell in &cells {
        let h = cell.history;
        let label = h.label();
        out.push(Check::new(
            format!("freq({label})"),
            cell.prob,
            summary.freq(h).estimate,
            summary.n_episodes,
        ));
        if n_h > 0 {
            out.push(Check::new(
                format!("freq({label}|H)"),
                cell.prob_high,
                summary.freq_given(h, Ability::High).estimate,
                n_h,
            ));
        }
        let seen = summary.counts.of_history(h);
        if seen > 0 {
            out.push(Check::new(
                format!("post({label})"),
                cell.posterior,
                summary.post(h).estimate,
                seen,
            ));
        }
    }
    for theta in Ability::BOTH {
        let trials = summary.counts.of_type(theta);
        if trials == 0 {
            continue;
        }
        let name = match theta {
            Ability::High => "rate(H)",
            Ability::Low => "rate(L)",
        };
        out.push(Check::new(
            name.to_string(),
            type_rate(&setup.model, theta, setup.beliefs.alpha, setup.cutoff),
            summary.rate(theta).estimate,
            trials,
        ));
    }
    out.push(Check::new(
        "martingale".to_string(),
        setup.beliefs.pi,
        summary.martingale().estimate,
        summary.n_episodes,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(cutoff: f64) -> SimSetup {
        SimSetup {
            model: SignalModel::baseline(),
            beliefs: BeliefState::new(0.5, 0.5).unwrap(),
            cutoff,
            frictions: FrictionSpec::default(),
        }
    }

    #[test]
    fn frictionless_records_follow_outcome_law() {
        for e in simulate_episodes(&setup(0.5), 20_000, 3).unwrap() {
            assert_eq!(e.outcome == Outcome::None, !e.action || !e.implemented);
            assert_eq!(
                e.outcome == Outcome::Success,
                e.action && e.omega == State::Good
            );
            assert_eq!(e.observed_outcome, e.outcome);
            assert_eq!(e.action, e.s >= 0.5);
        }
    }

    #[test]
    fn records_match_summary() {
        let s = setup(0.3);
        let n = 3 * CHUNK + 17;
        let recs = simulate_episodes(&s, n, 11).unwrap();
        let sum = simulate(&s, n, 11).unwrap();
        let succ = recs
            .iter()
            .filter(|e| e.history() == History::Success)
            .count() as u64;
        assert_eq!(succ, sum.counts.of_history(History::Success));
    }

    #[test]
    fn all_safe_at_infinite_cutoff() {
        let sum = simulate(&setup(f64::INFINITY), 5000, 1).unwrap();
        assert_eq!(sum.freq(History::Safe).estimate, 1.0);
    }

    #[test]
    fn single_episode() {
        let sum = simulate(&setup(0.5), 1, 7).unwrap();
        for h in History::ALL {
            let f = sum.freq(h).estimate;
            assert!(f == 0.0 || f == 1.0);
        }
        assert!(simulate(&setup(0.5), 0, 7).is_err());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let s = setup(0.5);
        let a = simulate(&s, 100_000, 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| simulate(&s, 100_000, 42).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, simulate(&s, 100_000, 43).unwrap());
    }

    #[test]
    fn frictions_agree_with_analytic_targets() {
        let mut s = setup(0.4);
        s.frictions = FrictionSpec {
            lambda_impl: 0.7,
            eps_flip: 0.1,
            eta_base: 0.2,
            ..FrictionSpec::default()
        };
        let sum = simulate(&s, 400_000, 5).unwrap();
        for c in compare(&s, &sum).unwrap() {
            assert!(c.z.abs() < 4.5, "{c:?}");
        }
    }
}
