//! Arithmetic, geometric and logarithmic means of two positive reals.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("means are defined for positive finite arguments, got ({p}, {q})")]
pub struct MeanError {
    pub p: f64,
    pub q: f64,
}

/// Below this |ln(p/q)| the logarithmic mean is taken from its series.
pub const LOG_MEAN_SERIES_SWITCH: f64 = 1e-4;

fn check(p: f64, q: f64) -> Result<(), MeanError> {
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if ok(p) && ok(q) {
        Ok(())
    } else {
        Err(MeanError { p, q })
    }
}

/// `A(p, q) = (p + q) / 2`
pub fn arithmetic_mean(p: f64, q: f64) -> Result<f64, MeanError> {
    check(p, q)?;
    // halve first so that p + q cannot overflow
    Ok(p / 2.0 + q / 2.0)
}

/// `G(p, q) = √(pq)`
pub fn geometric_mean(p: f64, q: f64) -> Result<f64, MeanError> {
    check(p, q)?;
    if p == q {
        return Ok(p);
    }
    let g = (p * q).sqrt();
    if g.is_finite() && g > 0.0 {
        Ok(g)
    } else {
        Ok(p.sqrt() * q.sqrt())
    }
}

/// `ln(p / q)` computed without the cancellation of `ln p − ln q`.
pub(crate) fn log_ratio(p: f64, q: f64) -> f64 {
    let r = p / q;
    if (0.5..=2.0).contains(&r) {
        // p − q is exact here (Sterbenz), so only one rounding enters
        ((p - q) / q).ln_1p()
    } else {
        p.ln() - q.ln()
    }
}

/// `L(p, q) = (p − q) / (ln p − ln q)`, with `L(p, p) = p`.
///
/// Near `p = q` this uses `L = G · sinh(v)/v`, `v = ln(p/q)/2`, expanded as
/// `1 + v²/6 + v⁴/120 + v⁶/5040`.
pub fn logarithmic_mean(p: f64, q: f64) -> Result<f64, MeanError> {
    check(p, q)?;
    if p == q {
        return Ok(p);
    }
    let u = log_ratio(p, q);
    if u.abs() < LOG_MEAN_SERIES_SWITCH {
        let v2 = (u / 2.0) * (u / 2.0);
        let s = 1.0 + v2 * (1.0 / 6.0 + v2 * (1.0 / 120.0 + v2 / 5040.0));
        return Ok(geometric_mean(p, q)? * s);
    }
    Ok((p - q) / u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    #[test]
    fn arithmetic_examples() {
        assert_eq!(arithmetic_mean(1.0, 3.0).unwrap(), 2.0);
        assert_eq!(arithmetic_mean(2.5, 2.5).unwrap(), 2.5);
        assert!((arithmetic_mean(1.0, E).unwrap() - 1.8591409142295225).abs() < 1e-15);
        assert_eq!(arithmetic_mean(f64::MAX, f64::MAX).unwrap(), f64::MAX);
    }

    #[test]
    fn geometric_examples() {
        assert_eq!(geometric_mean(4.0, 9.0).unwrap(), 6.0);
        assert_eq!(geometric_mean(0.3, 0.3).unwrap(), 0.3);
        assert!((geometric_mean(1.0, E * E).unwrap() - E).abs() < 1e-15);
        // p·q underflows / overflows
        assert!((geometric_mean(1e-200, 1e-200 * 4.0).unwrap() / 2e-200 - 1.0).abs() < 1e-15);
        assert!((geometric_mean(1e200, 4e200).unwrap() / 2e200 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn logarithmic_examples() {
        assert_eq!(logarithmic_mean(3.0, 3.0).unwrap(), 3.0);
        assert!((logarithmic_mean(1.0, E).unwrap() - (E - 1.0)).abs() < 1e-15);
        // 2(1+1e−13): 50-digit value is 2.0000000000000999999…
        let q = 2.0 * (1.0 + 1e-13);
        let l = logarithmic_mean(2.0, q).unwrap();
        let exact = 2.0 + (q - 2.0) / 2.0 - (q - 2.0).powi(2) / 24.0;
        assert!(((l - exact) / exact).abs() < 1e-15);
        assert!(((l - 2.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn series_branch_is_continuous_with_direct_formula() {
        // straddle the switch from both sides
        for &p in &[0.01, 1.0, 37.0, 1e8] {
            for &u in &[0.99e-4, 1.01e-4, -0.99e-4, -1.01e-4] {
                let q = p * f64::exp(u);
                let l = logarithmic_mean(p, q).unwrap();
                let reference = p * (u.exp_m1() / u);
                assert!(((l - reference) / reference).abs() < 1e-14, "p={p} u={u}");
            }
        }
    }

    #[test]
    fn rejects_non_positive() {
        for (p, q) in [(0.0, 1.0), (1.0, -2.0), (f64::NAN, 1.0), (1.0, f64::INFINITY)] {
            assert!(arithmetic_mean(p, q).is_err());
            assert!(geometric_mean(p, q).is_err());
            assert!(logarithmic_mean(p, q).is_err());
        }
    }

    fn positive() -> impl Strategy<Value = f64> {
        (-12.0f64..12.0).prop_map(|e| 10f64.powf(e))
    }

    proptest! {
        #[test]
        fn symmetric(p in positive(), q in positive()) {
            prop_assert_eq!(arithmetic_mean(p, q).unwrap(), arithmetic_mean(q, p).unwrap());
            prop_assert_eq!(geometric_mean(p, q).unwrap(), geometric_mean(q, p).unwrap());
            let (l1, l2) = (logarithmic_mean(p, q).unwrap(), logarithmic_mean(q, p).unwrap());
            prop_assert!(((l1 - l2) / l1).abs() <= 4e-16);
        }

        #[test]
        fn ordered(p in positive(), q in positive()) {
            let a = arithmetic_mean(p, q).unwrap();
            let g = geometric_mean(p, q).unwrap();
            let l = logarithmic_mean(p, q).unwrap();
            prop_assert!(g <= l * (1.0 + 1e-12));
            prop_assert!(l <= a * (1.0 + 1e-12));
        }

        #[test]
        fn homogeneous(p in positive(), q in positive(), t in 1e-3f64..1e3) {
            let rel = |a: f64, b: f64| ((a - b) / b).abs();
            prop_assert!(rel(arithmetic_mean(t * p, t * q).unwrap(), t * arithmetic_mean(p, q).unwrap()) < 1e-14);
            prop_assert!(rel(geometric_mean(t * p, t * q).unwrap(), t * geometric_mean(p, q).unwrap()) < 1e-14);
            prop_assert!(rel(logarithmic_mean(t * p, t * q).unwrap(), t * logarithmic_mean(p, q).unwrap()) < 1e-13);
        }

        #[test]
        fn continuous_at_equal_arguments(p in positive(), eps in 0.0f64..1e-8) {
            let l = logarithmic_mean(p, p * (1.0 + eps)).unwrap();
            prop_assert!((l - p).abs() <= p * eps.max(f64::EPSILON));
        }
    }
}
