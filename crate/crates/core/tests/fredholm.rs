mod common;

use std::f64::consts::PI;

use common::*;
use proptest::prelude::*;
use rmtgap::fredholm::{self, KernelSpec, DEFAULT_ORDER};
use rmtgap::painleve::{boundary_series, TranscendentKind};
use rmtgap::ThinningParam;

fn xi(x: f64) -> ThinningParam {
    ThinningParam::new(x).unwrap()
}

/// Large-N determinant coefficient of s^10. The reference expansion stops at
/// s^9, so this comes from exponentiating the origin series of the gap
/// transcendent, whose first ten coefficients are checked against print.
fn det_s10_coefficient(x: f64) -> f64 {
    let c = boundary_series(TranscendentKind::Sigma0, xi(x), 12).unwrap().coeffs;
    let log: Vec<f64> = (0..=10).map(|k| if k == 0 { 0.0 } else { c[k] * PI.powi(k as i32) / k as f64 }).collect();
    // exp of a series with zero constant term
    let mut e = vec![0.0; 11];
    e[0] = 1.0;
    for n in 1..=10 {
        e[n] = (1..=n).map(|k| k as f64 * log[k] * e[n - k]).sum::<f64>() / n as f64;
    }
    e[10]
}

#[test]
fn sine_determinant_matches_small_s_expansion() {
    let bound_coeff = det_s10_coefficient(1.0).abs();
    for s in [0.1, 0.2, 0.3] {
        let det = fredholm::nystrom_det(&KernelSpec::sine(xi(1.0)), s, DEFAULT_ORDER).unwrap().value;
        let reference = sum_terms(&det_leading_reference(1.0), s);
        assert!((det - reference).abs() < bound_coeff * s.powi(10), "s={s}: {det} vs {reference}");
    }
}

#[test]
fn finite_determinant_matches_small_s_expansion() {
    let n: f64 = 20.0;
    for x in [0.6f64, 1.0] {
        // the reference finite-N expansion stops at s^8; its s^9 term to O(1/N²)
        let c9 = x.powi(3) * PI.powi(6) * (-1.0 / 291_600.0 + 1.0 / (48_600.0 * n * n));
        // s^10 is comparable to s^9 here, so strip the s^9 term and bound the rest
        let c10 = det_s10_coefficient(x).abs();
        for s in [0.1, 0.2, 0.3] {
            let det = fredholm::finite_n_det(20, xi(x), s, DEFAULT_ORDER).unwrap().value;
            let rest = det - det_finite_reference(n, x, s) - c9 * s.powi(9);
            assert!(rest.abs() < 2.0 * c10 * s.powi(10), "xi={x} s={s}: remainder {rest:e}");
        }
    }
}

#[test]
fn resolvent_correction_matches_small_s_expansion() {
    for x in [0.6f64, 1.0] {
        let s: f64 = 0.1;
        let det = fredholm::nystrom_det(&KernelSpec::sine(xi(x)), s, DEFAULT_ORDER).unwrap().value;
        let corr = -x * det * fredholm::resolvent_trace_correction(xi(x), s, DEFAULT_ORDER).unwrap();
        let reference = sum_terms(&det_correction_reference(x), s);
        assert!((corr - reference).abs() < 1e-10, "xi={x}: {corr} vs {reference}");
    }
}

#[test]
fn finite_size_spacing_at_small_s() {
    for x in [0.6f64, 1.0] {
        let s: f64 = 0.05;
        let (lead, corr) = spacing_reference(x);
        let want = sum_terms(&lead, s) + sum_terms(&corr, s) / 1e4;
        let got = fredholm::finite_n_spacing(100, xi(x), s).unwrap();
        assert!(((got - want) / want).abs() < 0.02, "xi={x}: {got} vs {want}");
    }
}

#[test]
fn kernel_limits_agree_for_large_n() {
    for s in [0.5, 2.0, 5.0] {
        let sine = fredholm::nystrom_det(&KernelSpec::sine(xi(0.6)), s, DEFAULT_ORDER).unwrap().value;
        let big = fredholm::finite_n_det(5000, xi(0.6), s, DEFAULT_ORDER).unwrap().value;
        assert!((sine - big).abs() < 1e-6);
    }
}

#[test]
fn conditioned_gaps_partition_probability_at_small_s() {
    let s: f64 = 0.3;
    let total: f64 = (0..=3).map(|k| fredholm::conditioned_gap(k, s, DEFAULT_ORDER, 1e-3).unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-6, "sum {total}");
    // E(1; s) = −∂_ξ of the reference determinant at ξ = 1
    let e1 = fredholm::conditioned_gap(1, s, DEFAULT_ORDER, 1e-3).unwrap();
    let want = s - 2.0 * PI * PI * s.powi(4) / 36.0 + 2.0 * PI.powi(4) * s.powi(6) / 675.0
        - 2.0 * PI.powi(6) * s.powi(8) / 17640.0
        + 3.0 * PI.powi(6) * s.powi(9) / 291_600.0;
    assert!((e1 - want).abs() < 1e-6, "{e1} vs {want}");
}

#[test]
fn bad_arguments_are_rejected() {
    assert!(KernelSpec::finite(1, xi(1.0)).is_err());
    assert!(fredholm::finite_n_det(10, xi(1.0), 10.0, DEFAULT_ORDER).is_err());
    assert!(fredholm::nystrom_det(&KernelSpec::sine(xi(1.0)), -1.0, DEFAULT_ORDER).is_err());
    assert!(fredholm::nystrom_det(&KernelSpec::sine(xi(1.0)), 1.0, 4).is_err());
    assert!(fredholm::conditioned_gap(4, 1.0, DEFAULT_ORDER, 1e-3).is_err());
    assert!(fredholm::extrapolate_in_n(&[(100, 1.0), (100, 1.0), (110, 1.0)]).is_err());
    assert_eq!(fredholm::nystrom_det(&KernelSpec::sine(xi(1.0)), 0.0, DEFAULT_ORDER).unwrap().value, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn determinant_is_a_decreasing_probability(x in 0.05f64..=1.0, a in 0.0f64..6.0, d in 0.01f64..2.0) {
        let spec = KernelSpec::sine(xi(x));
        let lo = fredholm::nystrom_det(&spec, a, 48).unwrap().value;
        let hi = fredholm::nystrom_det(&spec, a + d, 48).unwrap().value;
        prop_assert!((0.0..=1.0 + 1e-12).contains(&lo));
        prop_assert!(hi >= -1e-14 && hi <= lo + 1e-12);
    }

    #[test]
    fn extrapolation_recovers_a_quadratic_in_inverse_square(
        a in -2.0f64..2.0, b in -5.0f64..5.0, c in -50.0f64..50.0,
    ) {
        let samples: Vec<(u32, f64)> = (0..20u32)
            .map(|i| {
                let n = 100 + 2 * i;
                let e = 1.0 / (n as f64).powi(2);
                (n, a + b * e + c * e * e)
            })
            .collect();
        let (fa, fb) = fredholm::extrapolate_in_n(&samples).unwrap();
        prop_assert!((fa - a).abs() < 1e-10);
        prop_assert!((fb - b).abs() < 1e-5);
    }
}
