mod common;

use std::f64::consts::PI;

use common::*;
use proptest::prelude::*;
use rmtgap::fredholm::{self, KernelSpec, DEFAULT_ORDER};
use rmtgap::painleve::{self, SolveOptions, ThinningParam, TranscendentKind, TranscendentSolution};
use rmtgap::spacing::{self, AsymptoticForm, LargeSKind, SmallSForm, SpacingCurve};

fn xi(x: f64) -> ThinningParam {
    ThinningParam::new(x).unwrap()
}

fn gap_pair(x: f64, s_top: f64) -> (TranscendentSolution, TranscendentSolution) {
    let opts = SolveOptions { s_max: PI * s_top * (1.0 + 1e-9), ..Default::default() };
    let s0 = painleve::solve_sigma0(xi(x), &opts).unwrap();
    let s1 = painleve::solve_linear_correction(TranscendentKind::Sigma1, &s0, xi(x), &opts).unwrap();
    (s0, s1)
}

fn u_pair(x: f64, s_top: f64) -> (TranscendentSolution, TranscendentSolution) {
    let opts = SolveOptions { s_max: 2.0 * PI * s_top * (1.0 + 1e-9), ..Default::default() };
    let u0 = painleve::solve_u0(xi(x), &opts).unwrap();
    let u1 = painleve::solve_linear_correction(TranscendentKind::U1, &u0, xi(x), &opts).unwrap();
    (u0, u1)
}

#[test]
fn spacing_terms_match_small_s_expansion() {
    for x in [0.6, 1.0] {
        let (s0, s1) = gap_pair(x, 1.0);
        let (lead, corr) = spacing_reference(x);
        // the reference expansions stop at s^7, so the remainder scaled by s^8
        // must settle to a constant
        let scaled = |s: f64| {
            let (l, c) = spacing::spacing_from_gap(&s0, &s1, xi(x), s).unwrap();
            ((l - sum_terms(&lead, s)) / s.powi(8), (c - sum_terms(&corr, s)) / s.powi(8))
        };
        let (l1, c1) = scaled(0.05);
        let (l2, c2) = scaled(0.1);
        assert!(rel_close(l1, l2, 0.05) && rel_close(c1, c2, 0.05), "xi={x}: {l1} {l2} {c1} {c2}");
        let (l, c) = spacing::spacing_from_gap(&s0, &s1, xi(x), 0.005).unwrap();
        assert!(rel_close(l, sum_terms(&lead, 0.005), 1e-10) && rel_close(c, sum_terms(&corr, 0.005), 1e-10), "{l} {c}");
    }
}

#[test]
fn thinning_enters_the_scaled_density_only_at_high_order() {
    let s = 0.1;
    let scaled = |x: f64| {
        let (s0, s1) = gap_pair(x, 1.0);
        spacing::spacing_from_gap(&s0, &s1, xi(x), s).unwrap().0 / x
    };
    let (a, b) = (scaled(0.6), scaled(1.0));
    let rel = ((a - b) / b).abs();
    assert!(rel < 1e-4 && rel > 0.0, "relative difference {rel}");
    // the first ξ-dependent term of the scaled density is −ξπ⁶s⁷/4050
    let want = 0.4 * PI.powi(6) * s.powi(7) / 4050.0;
    assert!(rel_close(a - b, want, 1e-2), "{} vs {want}", a - b);
}

#[test]
fn gap_probability_agrees_with_determinant() {
    for x in [0.6, 1.0] {
        let (s0, s1) = gap_pair(x, 6.0);
        for s in [0.3, 1.7, 4.2, 6.0] {
            let det = fredholm::nystrom_det(&KernelSpec::sine(xi(x)), s, DEFAULT_ORDER).unwrap().value;
            assert!((spacing::gap_probability(&s0, s).unwrap() - det).abs() < 1e-8);
            let corr = -x * det * fredholm::resolvent_trace_correction(xi(x), s, DEFAULT_ORDER).unwrap();
            assert!((spacing::gap_correction(&s0, &s1, s).unwrap() - corr).abs() < 1e-7);
        }
    }
}

#[test]
fn both_spacing_paths_agree() {
    let grid = spacing::uniform_grid(4.0, 0.1);
    for x in [0.6, 1.0] {
        let (s0, s1) = gap_pair(x, 4.0);
        let (u0, u1) = u_pair(x, 4.0);
        let a = SpacingCurve::from_gap(&s0, &s1, &grid).unwrap();
        let b = SpacingCurve::from_u(&u0, &u1, &grid).unwrap();
        for i in 0..grid.len() {
            assert!((a.leading[i] - b.leading[i]).abs() < 1e-6);
            assert!((a.correction[i] - b.correction[i]).abs() < 1e-6);
        }
    }
}

#[test]
fn unthinned_density_has_unit_mass_and_mean() {
    let grid = spacing::uniform_grid(6.0, 0.01);
    let (u0, u1) = u_pair(1.0, 6.0);
    let c = SpacingCurve::from_u(&u0, &u1, &grid).unwrap();
    let trap = |f: &dyn Fn(usize) -> f64| -> f64 {
        (1..grid.len()).map(|i| 0.5 * (grid[i] - grid[i - 1]) * (f(i) + f(i - 1))).sum()
    };
    assert!((trap(&|i| c.leading[i]) - 1.0).abs() < 1e-4);
    assert!((trap(&|i| grid[i] * c.leading[i]) - 1.0).abs() < 1e-4);
    // the 1/N² term conserves both
    assert!(trap(&|i| c.correction[i]).abs() < 1e-4);
}

#[test]
fn next_nearest_density_starts_like_seventh_power() {
    let grid = [0.1, 0.15];
    let p1 = spacing::next_nearest_spacing(&grid, &SolveOptions::default(), 1e-3).unwrap();
    // −∂ξ of the reference scaled density at ξ = 1
    let want = PI.powi(6) * 0.1f64.powi(7) / 4050.0;
    assert!(rel_close(p1[0], want, 0.05), "{} vs {want}", p1[0]);
    let slope = (p1[1] / p1[0]).ln() / 1.5f64.ln();
    assert!((slope - 7.0).abs() < 0.2, "slope {slope}");
}

#[test]
fn references_follow_the_solutions_at_their_ends() {
    let (s0, s1) = gap_pair(1.0, 0.3);
    let s = 0.05;
    let lead = spacing::reference_small_s(SmallSForm::GapLeading, xi(1.0), None, s).unwrap().value;
    assert!((spacing::gap_probability(&s0, s).unwrap() - lead).abs() < 1e-12);
    let corr = spacing::reference_small_s(SmallSForm::GapCorrection, xi(1.0), None, s).unwrap().value;
    assert!((spacing::gap_correction(&s0, &s1, s).unwrap() - corr).abs() < 1e-12);

    // gap transcendent at ξ = 1 approaches −t²/4 − 1/4
    let opts = SolveOptions { s_max: 20.0, ..Default::default() };
    let far = painleve::solve_sigma0(xi(1.0), &opts).unwrap();
    let form = AsymptoticForm::new(LargeSKind::SsA, xi(1.0)).unwrap();
    let d = far.eval(20.0, 0).unwrap() - spacing::reference_large_s(&form, 20.0).unwrap();
    assert!(d.abs() < 1e-2, "difference {d}");
}

#[test]
fn curve_csv_has_metadata_and_rows() {
    let grid = spacing::uniform_grid(1.0, 0.25);
    let (u0, u1) = u_pair(0.6, 1.0);
    let text = SpacingCurve::from_u(&u0, &u1, &grid).unwrap().to_csv();
    assert!(text.starts_with("# xi = 0.6\n# provenance = u-path\n"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "s,leading,correction,provenance");
    assert_eq!(rows.len(), grid.len() + 1);
}

#[test]
fn mismatched_solutions_are_rejected() {
    let (s0, s1) = gap_pair(1.0, 1.0);
    let (u0, _) = u_pair(0.6, 1.0);
    assert!(spacing::spacing_from_gap(&s0, &s1, xi(0.6), 0.5).is_err());
    assert!(spacing::spacing_from_gap(&s1, &s0, xi(1.0), 0.5).is_err());
    assert!(spacing::gap_probability(&u0, 0.5).is_err());
    assert!(spacing::spacing_leading_u(&u0, xi(1.0), 0.5).is_err());
    assert!(SpacingCurve::from_gap(&s0, &s1, &[0.2, 0.1]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gap_probability_decreases_and_density_is_nonnegative(x in 0.1f64..=1.0, a in 0.0f64..3.0, d in 0.01f64..1.0) {
        let (s0, s1) = gap_pair(x, 4.0);
        let e_lo = spacing::gap_probability(&s0, a).unwrap();
        let e_hi = spacing::gap_probability(&s0, a + d).unwrap();
        prop_assert!(e_hi <= e_lo + 1e-12 && e_hi > 0.0 && e_lo <= 1.0 + 1e-12);
        let (lead, _) = spacing::spacing_from_gap(&s0, &s1, xi(x), a + d).unwrap();
        prop_assert!(lead >= -1e-12);
    }
}
