//! Signal primitives.
//!
//! The expert's private signal `s` has a density `f_θ(s | ω)` that depends on
//! the expert's ability `θ ∈ {H, L}` and the payoff state `ω ∈ {0, 1}`. Any
//! family with a strictly increasing likelihood ratio in `s` can be plugged in
//! through [`SignalFamily`]; [`SignalModel`] is the Gaussian family
//! `s | (ω, θ) ~ N(μ_ω, σ_θ²)`.

pub mod normal;

pub use normal::{
    log_normal_cdf, log_normal_pdf, log_normal_sf, normal_cdf, normal_hazard, normal_pdf, normal_sf,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_open_unit, Error, Result};

/// Expert ability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ability {
    High,
    Low,
}

impl Ability {
    pub const BOTH: [Ability; 2] = [Ability::High, Ability::Low];
}

/// Payoff state. The risky action succeeds iff the state is `Good` (ω = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum State {
    /// ω = 0
    Bad,
    /// ω = 1
    Good,
}

impl State {
    pub const BOTH: [State; 2] = [State::Bad, State::Good];

    pub fn index(self) -> usize {
        match self {
            State::Bad => 0,
            State::Good => 1,
        }
    }
}

/// A signal family with the monotone likelihood ratio property.
///
/// Implementations work in log space; the provided methods derive the
/// quantities the belief engine and the solver need.
pub trait SignalFamily {
    /// `ln Pr(s ≥ c | θ, ω)`.
    fn log_survival(&self, theta: Ability, omega: State, c: f64) -> f64;

    /// `ln Pr(s < c | θ, ω)`.
    fn log_cdf(&self, theta: Ability, omega: State, c: f64) -> f64;

    /// `ln f_θ(s | ω)`.
    fn log_density(&self, theta: Ability, omega: State, s: f64) -> f64;

    /// `d/ds ln ℓ_θ(s)` where `ℓ_θ = f_θ(·|1) / f_θ(·|0)`. Positive under MLRP.
    fn log_lr_slope(&self, theta: Ability, s: f64) -> f64;

    /// Interval scanned for equilibrium cutoffs.
    fn scan_bounds(&self) -> (f64, f64);

    /// Parameter checks for the family. Defaults to accepting everything.
    fn validate(&self) -> Result<()> {
        Ok(())
    }

    /// Recommendation frequency `r_θ(1 | ω; c) = Pr(s ≥ c | θ, ω)`.
    fn survival(&self, theta: Ability, omega: State, c: f64) -> f64 {
        self.log_survival(theta, omega, c).exp()
    }

    fn density(&self, theta: Ability, omega: State, s: f64) -> f64 {
        self.log_density(theta, omega, s).exp()
    }

    /// `ln ℓ_θ(s)`.
    fn log_lr(&self, theta: Ability, s: f64) -> f64 {
        self.log_density(theta, State::Good, s) - self.log_density(theta, State::Bad, s)
    }

    /// `Pr(ω = 1 | θ, s)` given prior `alpha = Pr(ω = 1)`.
    fn success_prob(&self, theta: Ability, alpha: f64, s: f64) -> f64 {
        let log_odds = (alpha / (1.0 - alpha)).ln() + self.log_lr(theta, s);
        logistic(log_odds)
    }

    /// `d/ds Pr(ω = 1 | θ, s)`.
    fn success_prob_slope(&self, theta: Ability, alpha: f64, s: f64) -> f64 {
        let p = self.success_prob(theta, alpha, s);
        if p == 0.0 || p == 1.0 {
            return 0.0;
        }
        p * (1.0 - p) * self.log_lr_slope(theta, s)
    }
}

/// Numerically stable logistic function.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gaussian signal family `s | (ω, θ) ~ N(μ_ω, σ_θ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalModel {
    pub mu0: f64,
    pub mu1: f64,
    pub sigma_h: f64,
    pub sigma_l: f64,
}

impl SignalModel {
    /// Validated constructor: requires `mu1 > mu0` and `0 < sigma_h ≤ sigma_l`.
    pub fn new(mu0: f64, mu1: f64, sigma_h: f64, sigma_l: f64) -> Result<Self> {
        let model = SignalModel {
            mu0,
            mu1,
            sigma_h,
            sigma_l,
        };
        model.validate()?;
        Ok(model)
    }

    /// The calibration used throughout the examples: `(0, 1, 1, 1.7)`.
    pub fn baseline() -> Self {
        SignalModel {
            mu0: 0.0,
            mu1: 1.0,
            sigma_h: 1.0,
            sigma_l: 1.7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("signal.mu0", self.mu0)?;
        check_finite("signal.mu1", self.mu1)?;
        check_finite("signal.sigma_h", self.sigma_h)?;
        check_finite("signal.sigma_l", self.sigma_l)?;
        if self.mu1 <= self.mu0 {
            return Err(Error::invalid(
                "signal.mu1",
                format!("must exceed mu0 ({} <= {})", self.mu1, self.mu0),
            ));
        }
        if self.sigma_h <= 0.0 {
            return Err(Error::invalid("signal.sigma_h", "must be positive"));
        }
        if self.sigma_l < self.sigma_h {
            return Err(Error::invalid(
                "signal.sigma_l",
                format!(
                    "must be at least sigma_h ({} < {})",
                    self.sigma_l, self.sigma_h
                ),
            ));
        }
        Ok(())
    }

    pub fn mean(&self, omega: State) -> f64 {
        match omega {
            State::Bad => self.mu0,
            State::Good => self.mu1,
        }
    }

    pub fn sigma(&self, theta: Ability) -> f64 {
        match theta {
            Ability::High => self.sigma_h,
            Ability::Low => self.sigma_l,
        }
    }

    fn z(&self, theta: Ability, omega: State, x: f64) -> f64 {
        (x - self.mean(omega)) / self.sigma(theta)
    }
}

impl SignalFamily for SignalModel {
    fn log_survival(&self, theta: Ability, omega: State, c: f64) -> f64 {
        log_normal_sf(self.z(theta, omega, c))
    }

    fn log_cdf(&self, theta: Ability, omega: State, c: f64) -> f64 {
        log_normal_cdf(self.z(theta, omega, c))
    }

    fn log_density(&self, theta: Ability, omega: State, s: f64) -> f64 {
        log_normal_pdf(self.z(theta, omega, s)) - self.sigma(theta).ln()
    }

    fn log_lr(&self, theta: Ability, s: f64) -> f64 {
        // Expanded form avoids subtracting two large quadratics.
        let sigma = self.sigma(theta);
        let mid = 0.5 * (self.mu0 + self.mu1);
        (self.mu1 - self.mu0) * (s - mid) / (sigma * sigma)
    }

    fn log_lr_slope(&self, theta: Ability, _s: f64) -> f64 {
        let sigma = self.sigma(theta);
        (self.mu1 - self.mu0) / (sigma * sigma)
    }

    fn scan_bounds(&self) -> (f64, f64) {
        (self.mu0 - 8.0 * self.sigma_l, self.mu1 + 8.0 * self.sigma_l)
    }

    fn validate(&self) -> Result<()> {
        SignalModel::validate(self)
    }
}

/// `r_θ(1 | ω; c) = 1 - Φ((c - μ_ω) / σ_θ)`.
pub fn rec_frequency<S: SignalFamily + ?Sized>(
    model: &S,
    theta: Ability,
    omega: State,
    c: f64,
) -> f64 {
    model.survival(theta, omega, c)
}

/// High-type posterior success probability `p_H(c) = Pr(ω = 1 | H, s = c)`.
///
/// Uses the density ratio at `c`, not truncation probabilities.
pub fn success_prob_at<S: SignalFamily + ?Sized>(model: &S, alpha: f64, c: f64) -> Result<f64> {
    check_open_unit("alpha", alpha)?;
    if c.is_nan() {
        return Err(Error::invalid("c", "must not be NaN"));
    }
    Ok(model.success_prob(Ability::High, alpha, c))
}
