//! Reputational payoff families, flow payoff and transfer schedules.

use crate::error::{check_finite, Error, Result};

/// An increasing reputational payoff `V : [0, 1] → ℝ`.
pub trait ReputationPayoff {
    fn value(&self, pi: f64) -> f64;
    /// Derivative. At a kink, the right derivative.
    fn slope(&self, pi: f64) -> f64;
    /// Whether the family is globally convex on [0, 1].
    fn is_convex(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PayoffFamily {
    /// `V(π) = π^k`, `k ≥ 1`.
    Power { k: f64 },
    /// `V(π) = v0 + b[(π-π̄)₊ - λ(π̄-π)₊] + κ₊/2 (π-π̄)₊² + κ₋/2 (π̄-π)₊²`.
    LossAverse {
        v0: f64,
        bench_pi: f64,
        slope_b: f64,
        la_lambda: f64,
        kappa_plus: f64,
        kappa_minus: f64,
    },
}

impl PayoffFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PayoffFamily::Power { k } => {
                check_finite("payoff.k", k)?;
                if k < 1.0 {
                    return Err(Error::invalid(
                        "payoff.k",
                        format!("must be at least 1, got {k}"),
                    ));
                }
            }
            PayoffFamily::LossAverse {
                v0,
                bench_pi,
                slope_b,
                la_lambda,
                kappa_plus,
                kappa_minus,
            } => {
                check_finite("payoff.v0", v0)?;
                if !(0.0..=1.0).contains(&bench_pi) {
                    return Err(Error::invalid("payoff.bench_pi", "must lie in [0, 1]"));
                }
                if !(slope_b.is_finite() && slope_b > 0.0) {
                    return Err(Error::invalid("payoff.slope_b", "must be positive"));
                }
                if !(la_lambda.is_finite() && la_lambda >= 1.0) {
                    return Err(Error::invalid("payoff.la_lambda", "must be at least 1"));
                }
                if !(kappa_plus.is_finite() && kappa_plus >= 0.0) {
                    return Err(Error::invalid("payoff.kappa_plus", "must be nonnegative"));
                }
                if !(kappa_minus.is_finite() && kappa_minus >= 0.0) {
                    return Err(Error::invalid("payoff.kappa_minus", "must be nonnegative"));
                }
            }
        }
        Ok(())
    }

    /// One-sided slopes `(V'₋, V'₊)` at the benchmark; `None` for smooth families.
    pub fn kink_slopes(&self) -> Option<(f64, f64)> {
        match *self {
            PayoffFamily::Power { .. } => None,
            PayoffFamily::LossAverse {
                slope_b, la_lambda, ..
            } => Some((la_lambda * slope_b, slope_b)),
        }
    }
}

impl ReputationPayoff for PayoffFamily {
    fn value(&self, pi: f64) -> f64 {
        match *self {
            PayoffFamily::Power { k } => {
                if k == 2.0 {
                    pi * pi
                } else {
                    pi.powf(k)
                }
            }
            PayoffFamily::LossAverse {
                v0,
                bench_pi,
                slope_b,
                la_lambda,
                kappa_plus,
                kappa_minus,
            } => {
                let up = (pi - bench_pi).max(0.0);
                let down = (bench_pi - pi).max(0.0);
                v0 + slope_b * (up - la_lambda * down)
                    + 0.5 * kappa_plus * up * up
                    + 0.5 * kappa_minus * down * down
            }
        }
    }

    fn slope(&self, pi: f64) -> f64 {
        match *self {
            PayoffFamily::Power { k } => {
                if k == 1.0 {
                    1.0
                } else {
                    k * pi.powf(k - 1.0)
                }
            }
            PayoffFamily::LossAverse {
                bench_pi,
                slope_b,
                la_lambda,
                kappa_plus,
                kappa_minus,
                ..
            } => {
                if pi >= bench_pi {
                    slope_b + kappa_plus * (pi - bench_pi)
                } else {
                    la_lambda * slope_b + kappa_minus * (bench_pi - pi)
                }
            }
        }
    }

    fn is_convex(&self) -> bool {
        match *self {
            PayoffFamily::Power { .. } => true,
            PayoffFamily::LossAverse { la_lambda, .. } => la_lambda <= 1.0,
        }
    }
}

/// Reputational payoff `κ V(π)` plus flow payoff φ from risky advice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffSpec {
    pub family: PayoffFamily,
    pub phi: f64,
    pub kappa: f64,
}

impl PayoffSpec {
    /// `V(π) = π²`, no flow payoff, unit career scale.
    pub fn quadratic() -> Self {
        PayoffSpec {
            family: PayoffFamily::Power { k: 2.0 },
            phi: 0.0,
            kappa: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        check_finite("payoff.phi", self.phi)?;
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::invalid("payoff.kappa", "must be nonnegative"));
        }
        Ok(())
    }

    /// `κ V(π)` without range checks.
    #[inline]
    pub fn v(&self, pi: f64) -> f64 {
        self.kappa * self.family.value(pi)
    }

    #[inline]
    pub fn v_slope(&self, pi: f64) -> f64 {
        self.kappa * self.family.slope(pi)
    }

    /// True when the family breaks global convexity of V.
    pub fn convexity_violation(&self) -> bool {
        !self.family.is_convex()
    }
}

/// `κ V(π)`, rejecting `π` outside `[0, 1]`.
pub fn eval_v(spec: &PayoffSpec, pi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::invalid(
            "pi",
            format!("must lie in [0, 1], got {pi}"),
        ));
    }
    Ok(spec.v(pi))
}

/// Success bonus β1 and failure penalty β0 (the expert pays β0 on failure).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransferSpec {
    pub beta1: f64,
    pub beta0: f64,
    pub limited_liability: bool,
}

impl TransferSpec {
    pub fn bonus(beta1: f64) -> Self {
        TransferSpec {
            beta1,
            beta0: 0.0,
            limited_liability: false,
        }
    }

    pub fn new(beta1: f64, beta0: f64) -> Self {
        TransferSpec {
            beta1,
            beta0,
            limited_liability: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("transfers.beta1", self.beta1)?;
        check_finite("transfers.beta0", self.beta0)?;
        if self.limited_liability {
            if self.beta1 < 0.0 {
                return Err(Error::invalid(
                    "transfers.beta1",
                    "must be nonnegative under limited liability",
                ));
            }
            if self.beta0 != 0.0 {
                return Err(Error::invalid(
                    "transfers.beta0",
                    "must be zero under limited liability",
                ));
            }
        }
        Ok(())
    }

    /// True when the schedule would breach limited liability.
    pub fn ll_violation(&self) -> bool {
        self.beta1 < 0.0 || self.beta0 > 0.0
    }

    /// Expected transfer given success probability `p`.
    #[inline]
    pub fn expected(&self, p: f64) -> f64 {
        p * self.beta1 - (1.0 - p) * self.beta0
    }
}

/// Ex-ante transfer wedge `α β1 - (1-α) β0`.
pub fn transfer_wedge(t: &TransferSpec, alpha: f64) -> f64 {
    t.expected(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn la(lambda: f64) -> PayoffSpec {
        PayoffSpec {
            family: PayoffFamily::LossAverse {
                v0: 0.0,
                bench_pi: 0.5,
                slope_b: 1.0,
                la_lambda: lambda,
                kappa_plus: 0.0,
                kappa_minus: 0.0,
            },
            phi: 0.0,
            kappa: 1.0,
        }
    }

    #[test]
    fn power_values() {
        let q = PayoffSpec::quadratic();
        assert_eq!(eval_v(&q, 0.5).unwrap(), 0.25);
        assert_eq!(eval_v(&q, 0.0).unwrap(), 0.0);
        assert_eq!(eval_v(&q, 1.0).unwrap(), 1.0);
        assert!(eval_v(&q, 1.1).is_err());
        assert!(eval_v(&q, -0.1).is_err());
    }

    #[test]
    fn loss_averse_values_and_kink() {
        let spec = la(2.0);
        assert!((eval_v(&spec, 0.4).unwrap() + 0.2).abs() < 1e-15);
        let d = 1e-13;
        assert!((spec.v(0.5 - d) - spec.v(0.5 + d)).abs() < 1e-12);
        assert_eq!(spec.family.kink_slopes(), Some((2.0, 1.0)));
        assert!(spec.convexity_violation());
        assert!(!la(1.0).convexity_violation());
        assert!(!PayoffSpec::quadratic().convexity_violation());
    }

    #[test]
    fn kappa_scales_linearly() {
        let mut a = PayoffSpec::quadratic();
        a.kappa = 0.7;
        let mut b = a;
        b.kappa = 1.4;
        for i in 0..=10 {
            let p = i as f64 / 10.0;
            assert_eq!(b.v(p), 2.0 * a.v(p));
        }
    }

    #[test]
    fn wedge_examples() {
        assert_eq!(transfer_wedge(&TransferSpec::default(), 0.3), 0.0);
        assert!((transfer_wedge(&TransferSpec::bonus(0.160), 0.5) - 0.080).abs() < 1e-15);
        assert_eq!(transfer_wedge(&TransferSpec::new(1.0, 1.0), 0.5), 0.0);
    }

    #[test]
    fn limited_liability_validation() {
        let mut t = TransferSpec::bonus(-0.1);
        assert!(t.validate().is_ok());
        assert!(t.ll_violation());
        t.limited_liability = true;
        assert!(t.validate().is_err());
        let t = TransferSpec {
            beta1: 0.1,
            beta0: 0.05,
            limited_liability: true,
        };
        assert!(t.validate().is_err());
    }

    #[test]
    fn rejects_bad_families() {
        assert!(PayoffFamily::Power { k: 0.5 }.validate().is_err());
        let mut s = la(0.5);
        assert!(s.validate().is_err());
        s = la(2.0);
        s.kappa = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn slope_matches_difference() {
        let specs = [PayoffSpec::quadratic(), la(2.5)];
        for s in specs {
            for p in [0.1, 0.3, 0.7, 0.9] {
                let h = 1e-7;
                let fd = (s.v(p + h) - s.v(p - h)) / (2.0 * h);
                assert!((fd - s.v_slope(p)).abs() < 1e-6);
            }
        }
    }
}
