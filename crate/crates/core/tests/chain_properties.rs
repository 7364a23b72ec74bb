use hhcheck::certify::{convex_defect, estimate_modulus, log_defect, CertificateStatus};
use hhcheck::chains::{
    bracket, closed_form_j, dragomir_mond_chain, theorem1_chain, theorem2_bound, ChainOptions, Theorem2Form,
};
use hhcheck::quadrature::{integrate, QuadratureOptions};
use hhcheck::{arithmetic_mean, logarithmic_mean, parse};
use proptest::prelude::*;

fn exp_quadratic(alpha: f64, beta: f64, gamma: f64) -> hhcheck::Expression {
    parse(&format!("exp({alpha:?}*x^2 + {beta:?}*x + {gamma:?})")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn j_agrees_with_quadrature(log_u in -3.0f64..3.0) {
        let u = 10f64.powf(log_u);
        let q = integrate(|t| Ok(t * (1.0 - t) * u.powf(t)), 0.0, 1.0, QuadratureOptions::with_tol(1e-14))
            .unwrap()
            .value;
        prop_assert!((closed_form_j(u).unwrap() - q).abs() <= 1e-10 * q.max(1.0));
    }

    #[test]
    fn j_near_one(eps in -1e-6f64..1e-6) {
        let u = 1.0 + eps;
        let q = integrate(|t| Ok(t * (1.0 - t) * u.powf(t)), 0.0, 1.0, QuadratureOptions::with_tol(1e-14))
            .unwrap()
            .value;
        prop_assert!((closed_form_j(u).unwrap() - q).abs() <= 1e-14);
    }

    #[test]
    fn bracket_matches_mean_difference_away_from_equal(p in 1e-2f64..1e2, ratio in 1.5f64..50.0) {
        // |k| > 0.4 here, where 4(A − L)/k² is computed without damaging cancellation
        let q = p * ratio;
        let k = (p / q).ln();
        let direct = 4.0 * (arithmetic_mean(p, q).unwrap() - logarithmic_mean(p, q).unwrap()) / (k * k);
        let b = bracket(p, q).unwrap();
        prop_assert!(((b - direct) / direct).abs() < 1e-12, "{} vs {}", b, direct);
    }

    #[test]
    fn log_defect_dominates_convex_defect(
        alpha in 0.0f64..3.0, beta in -2.0f64..2.0, x in -1.0f64..1.0, y in -1.0f64..1.0, lambda in 0.01f64..0.99,
    ) {
        prop_assume!((x - y).abs() > 1e-3);
        let f = exp_quadratic(alpha, beta, 0.0);
        let ld = log_defect(&f, x, y, lambda).unwrap();
        let cd = convex_defect(&f, x, y, lambda).unwrap();
        prop_assert!(cd >= ld - 1e-9 * cd.abs().max(1.0), "{} < {}", cd, ld);
    }

    #[test]
    fn theorem2_lhs_symmetric_under_reflection(alpha in 0.0f64..2.0, beta in -2.0f64..2.0, a in -2.0f64..0.0, w in 0.1f64..2.0) {
        let b = a + w;
        let f = exp_quadratic(alpha, beta, 0.0);
        let g = parse(&format!("exp({alpha:?}*({s:?} - x)^2 + {beta:?}*({s:?} - x))", s = a + b)).unwrap();
        let o = ChainOptions::default();
        let l1 = theorem2_bound(&f, a, b, 0.0, Theorem2Form::Corrected, &o).unwrap().lhs;
        let l2 = theorem2_bound(&g, a, b, 0.0, Theorem2Form::Corrected, &o).unwrap().lhs;
        prop_assert!((l1 - l2).abs() <= 2.0 * o.quad_tol * l1.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn strong_chains_hold_below_certified_modulus(
        alpha in 0.05f64..3.0, beta in -2.0f64..2.0, gamma in -1.0f64..1.0, a in -2.0f64..1.5, u in 0.01f64..=1.0,
    ) {
        let b = (a + 0.5).min(2.0);
        let f = exp_quadratic(alpha, beta, gamma);
        let cert = estimate_modulus(&f, a, b, 32, 2).unwrap();
        prop_assert_eq!(cert.status, CertificateStatus::CertifiedPositive);
        let c = u * cert.c_star;
        let o = ChainOptions::default();
        prop_assert!(dragomir_mond_chain(&f, a, b, &o).unwrap().holds);
        let t1 = theorem1_chain(&f, a, b, c, &o).unwrap();
        prop_assert!(t1.holds, "{:?}", t1);
        let t2 = theorem2_bound(&f, a, b, c, Theorem2Form::Corrected, &o).unwrap();
        prop_assert!(t2.holds_corrected, "{:?}", t2);
    }

    #[test]
    fn strong_chain_margin_nonincreasing(alpha in 0.0f64..3.0, beta in -2.0f64..2.0, c in 0.0f64..5.0) {
        let f = exp_quadratic(alpha, beta, 0.0);
        let o = ChainOptions::default();
        let m1 = theorem1_chain(&f, -1.0, 1.0, c, &o).unwrap().min_margin;
        let m2 = theorem1_chain(&f, -1.0, 1.0, 2.0 * c, &o).unwrap().min_margin;
        prop_assert!(m2 <= m1);
    }
}
