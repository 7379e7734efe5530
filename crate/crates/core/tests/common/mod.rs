//! Reference small-s expansions transcribed term by term, used as
//! independent oracles.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Gap transcendent coefficients of s^0..s^9.
pub fn sigma0_reference(xi: f64) -> [f64; 10] {
    let q = |k: i32| (xi / PI).powi(k);
    [
        0.0,
        -q(1),
        -q(2),
        -q(3),
        (8.0 * q(2) / 3.0 - 24.0 * q(4)) / 24.0,
        5.0 * q(3) / 36.0 - q(5),
        -q(6) + q(4) / 6.0 - 2.0 * q(2) / 225.0,
        -q(7) + 7.0 * q(5) / 36.0 - 7.0 * q(3) / 675.0,
        -q(8) + 2.0 * q(6) / 9.0 - 121.0 * q(4) / 8100.0 + q(2) / 2205.0,
        -q(9) + q(7) / 4.0 - 73.0 * q(5) / 3600.0 + 761.0 * q(3) / 1_587_600.0,
    ]
}

/// Correction transcendent coefficients of s^0..s^9.
pub fn sigma1_reference(xi: f64) -> [f64; 10] {
    let p = |k: i32| PI.powi(k);
    [
        0.0,
        0.0,
        0.0,
        0.0,
        -xi * xi / (9.0 * p(2)),
        -5.0 * xi.powi(3) / (36.0 * p(3)),
        (-15.0 * xi.powi(4) + 2.0 * p(2) * xi * xi) / (90.0 * p(4)),
        7.0 * (-15.0 * xi.powi(5) + 2.0 * xi.powi(3) * p(2)) / (540.0 * p(5)),
        -(1260.0 * xi.powi(6) - 203.0 * p(2) * xi.powi(4) + 12.0 * p(4) * xi * xi) / (5670.0 * p(6)),
        -(9450.0 * xi.powi(7) - 1785.0 * p(2) * xi.powi(5) + 83.0 * p(4) * xi.powi(3)) / (37800.0 * p(7)),
    ]
}

/// Determinant expansion: leading coefficients of s^0..s^9.
pub fn det_leading_reference(xi: f64) -> [f64; 10] {
    let p = |k: i32| PI.powi(k);
    let x2 = xi * xi;
    [1.0, -xi, 0.0, 0.0, x2 * p(2) / 36.0, 0.0, -x2 * p(4) / 675.0, 0.0, x2 * p(6) / 17640.0, -xi.powi(3) * p(6) / 291_600.0]
}

/// Determinant expansion: 1/N² coefficients of s^0..s^9.
pub fn det_correction_reference(xi: f64) -> [f64; 10] {
    let p = |k: i32| PI.powi(k);
    let x2 = xi * xi;
    [0.0, 0.0, 0.0, 0.0, -x2 * p(2) / 36.0, 0.0, x2 * p(4) / 270.0, 0.0, -x2 * p(6) / 3780.0, xi.powi(3) * p(6) / 48600.0]
}

/// Spacing density expansion: leading and 1/N² coefficients of s^0..s^7.
pub fn spacing_reference(xi: f64) -> ([f64; 8], [f64; 8]) {
    let p = |k: i32| PI.powi(k);
    (
        [0.0, 0.0, xi * p(2) / 3.0, 0.0, -2.0 * xi * p(4) / 45.0, 0.0, xi * p(6) / 315.0, -xi * xi * p(6) / 4050.0],
        [0.0, 0.0, -xi * p(2) / 3.0, 0.0, xi * p(4) / 9.0, 0.0, -2.0 * xi * p(6) / 135.0, xi * xi * p(6) / 675.0],
    )
}

/// Finite-N determinant through s^8.
pub fn det_finite_reference(n: f64, xi: f64, s: f64) -> f64 {
    let e = 1.0 / (n * n);
    let p = |k: i32| PI.powi(k);
    1.0 - xi * s + (1.0 - e) * xi * xi * p(2) * s.powi(4) / 36.0
        - (1.0 - e) * (2.0 - 3.0 * e) / 1350.0 * xi * xi * p(4) * s.powi(6)
        + (1.0 - e) * (1.0 - 2.0 * e) * (3.0 - 5.0 * e) / 52920.0 * xi * xi * p(6) * s.powi(8)
}

/// Term-by-term sum, smallest terms first.
pub fn sum_terms(c: &[f64], s: f64) -> f64 {
    c.iter().enumerate().rev().map(|(k, ck)| ck * s.powi(k as i32)).sum()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
}
