//! Whole-range checks of the zero-mean sign-matching polynomial: moments,
//! sign structure, degree law, and positivity of the noisy correlation.

use massart_core::sign_match::{
    construct_sign_matching, correlation, degree_parameter, gaussian_moments,
    verify_sign_matching, BetaProfile,
};
use proptest::prelude::*;

#[test]
fn fifty_thresholds_pass_the_full_report() {
    for i in 0..50 {
        let b = -4.0 + 8.0 * i as f64 / 49.0;
        let p = construct_sign_matching(b);
        let (mean, var) = gaussian_moments(&p);
        assert!(mean.abs() <= 1e-9, "b={b}: mean {mean}");
        assert!((var - 1.0).abs() <= 1e-9, "b={b}: var {var}");
        let report = verify_sign_matching(&p, b);
        assert!(report.all(), "b={b}: {report:?}");
    }
}

#[test]
fn degree_grows_quadratically_in_the_threshold() {
    for i in 0..50 {
        let b = -4.0 + 8.0 * i as f64 / 49.0;
        let p = construct_sign_matching(b);
        let k = degree_parameter(b);
        assert_eq!(p.degree(), 3 * k as usize, "b={b}");
        // smallest odd k at or above max(ceil(4 b^2), 1)
        let base = libm::ceil(4.0 * b * b).max(1.0) as usize;
        let odd = if base % 2 == 1 { base } else { base + 1 };
        assert!(p.degree() >= 3 && p.degree() <= 3 * odd, "b={b}: deg {}", p.degree());
        let sqrt_k = libm::sqrt(k as f64);
        assert!(2.0 * b.abs() <= sqrt_k && sqrt_k <= 4.0 * b.abs().max(1.0), "b={b} k={k}");
    }
}

#[test]
fn correlation_survives_a_small_negative_dip() {
    // beta dips below zero just past the threshold; the correlation stays
    // positive because the polynomial is still tiny there
    for &b in &[-1.0, 0.5, 1.0, 2.0] {
        let p = construct_sign_matching(b);
        let xi = 1e-3;
        let dip = BetaProfile { cuts: vec![b, b + xi], values: vec![1.0, -0.2, 1.0] };
        let c = correlation(&p, b, &dip);
        assert!(c > 0.0, "b={b}: correlation {c}");
    }
}

#[test]
fn clean_correlation_matches_closed_form_at_zero() {
    // E[|z|^3]/sqrt(15) = 2 sqrt(2/pi)/sqrt(15)
    let p = construct_sign_matching(0.0);
    let c = correlation(&p, 0.0, &BetaProfile::constant(1.0));
    let expect = 2.0 * libm::sqrt(2.0 / core::f64::consts::PI) / libm::sqrt(15.0);
    assert!((c - expect).abs() <= 1e-9, "{c} vs {expect}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    // p f >= 0 pointwise, so any nonnegative beta keeps the correlation
    // nonnegative, and strictly positive once beta is bounded below
    #[test]
    fn correlation_positive_for_any_boxed_profile(
        b in -3.0f64..3.0,
        cuts in proptest::collection::vec(-4.0f64..4.0, 0..4),
        raw in proptest::collection::vec(0.05f64..1.0, 5),
    ) {
        let mut cuts = cuts;
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let values = raw[..cuts.len() + 1].to_vec();
        let p = construct_sign_matching(b);
        let c = correlation(&p, b, &BetaProfile { cuts, values });
        prop_assert!(c > 0.0, "b={b}: correlation {c}");
    }
}
