//! Standard normal special functions.
//!
//! Everything is routed through `erfc`, which keeps both tails accurate to a
//! few ulps. Log-space variants extend the survival function past the point
//! where `erfc` underflows using the Mills-ratio continued fraction.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Above this `x` the survival function is evaluated through the continued
/// fraction instead of `erfc(x / sqrt 2)`.
const CF_SWITCH: f64 = 30.0;

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[inline]
pub fn log_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Standard normal cdf. Saturates to exactly 0 and 1 far in the tails.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)`, computed without cancellation.
#[inline]
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

/// `ln(1 - Φ(x))`, finite for every finite `x`.
pub fn log_normal_sf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x < 0.0 {
        // sf close to one: log1p of the (small) lower tail.
        (-normal_cdf(x)).ln_1p()
    } else if x < CF_SWITCH {
        normal_sf(x).ln()
    } else {
        log_normal_pdf(x) + mills_ratio(x).ln()
    }
}

/// `ln Φ(x)`.
#[inline]
pub fn log_normal_cdf(x: f64) -> f64 {
    log_normal_sf(-x)
}

/// Hazard rate `φ(x) / (1 - Φ(x))`, stable in both tails.
pub fn normal_hazard(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return f64::INFINITY;
    }
    if x >= CF_SWITCH {
        1.0 / mills_ratio(x)
    } else {
        (log_normal_pdf(x) - log_normal_sf(x)).exp()
    }
}

/// Mills ratio `(1 - Φ(x)) / φ(x)` for large positive `x`, by backward
/// evaluation of the Laplace continued fraction `1/(x+1/(x+2/(x+...)))`.
fn mills_ratio(x: f64) -> f64 {
    let mut tail = 0.0;
    for k in (1..=60).rev() {
        tail = k as f64 / (x + tail);
    }
    1.0 / (x + tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values: mpmath at 40 digits.
    const PHI_TABLE: [(f64, f64); 10] = [
        (0.5, 0.691_462_461_274_013_103_64),
        (-0.5, 0.308_537_538_725_986_896_36),
        (-8.0, 6.220_960_574_271_784_123_5e-16),
        (-5.0, 2.866_515_718_791_939_116_7e-7),
        (-2.5, 0.006_209_665_325_776_135_167),
        (-1.0, 0.158_655_253_931_457_051_41),
        (0.3, 0.617_911_422_188_952_637_31),
        (1.7, 0.955_434_537_241_456_960_51),
        (4.0, 0.999_968_328_758_166_880_08),
        (8.0, 0.999_999_999_999_999_377_9),
    ];

    #[test]
    fn cdf_matches_high_precision_table() {
        for (x, expected) in PHI_TABLE {
            let got = normal_cdf(x);
            assert!(
                (got - expected).abs() <= 1e-15,
                "Φ({x}) = {got}, want {expected}"
            );
        }
        assert_eq!(normal_cdf(0.0), 0.5);
    }

    #[test]
    fn log_sf_tails() {
        let cases = [
            (10.0, -53.231_285_150_512_470_578),
            (20.0, -203.917_155_371_097_263_94),
            (40.0, -804.608_442_013_753_788_17),
            (-3.0, -0.001_350_809_964_748_193_798_8),
        ];
        for (x, expected) in cases {
            let got = log_normal_sf(x);
            assert!(
                ((got - expected) / expected).abs() < 1e-13,
                "ln sf({x}) = {got}, want {expected}"
            );
        }
    }

    #[test]
    fn continued_fraction_joins_erfc_branch() {
        let below = normal_sf(29.999_999).ln();
        let above = log_normal_pdf(29.999_999) + mills_ratio(29.999_999).ln();
        assert!((below - above).abs() < 1e-11);
    }

    #[test]
    fn symmetry_on_grid() {
        for i in 0..=1600 {
            let x = -8.0 + i as f64 * 0.01;
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn infinities() {
        assert_eq!(normal_cdf(f64::INFINITY), 1.0);
        assert_eq!(normal_cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(log_normal_sf(f64::NEG_INFINITY), 0.0);
        assert_eq!(log_normal_cdf(f64::INFINITY), 0.0);
        assert_eq!(normal_hazard(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn hazard_is_increasing() {
        let mut prev = normal_hazard(-10.0);
        for i in 1..=500 {
            let h = normal_hazard(-10.0 + i as f64 * 0.1);
            assert!(h > prev);
            prev = h;
        }
    }
}
