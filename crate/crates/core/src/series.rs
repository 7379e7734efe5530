//! Truncated power series and piecewise-analytic functions built from chains
//! of them.
//!
//! Every transcendent computed in this crate is stored as a
//! [`PiecewiseAnalytic`]: an ordered list of Taylor polynomials, each valid on
//! a closed interval whose left end is its expansion point (the origin
//! segment is centred at 0). Evaluation uses compensated Horner accumulation.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_panels, QuadratureRule};

/// Neumaier-style compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Compensated Horner evaluation of `sum coeffs[k] * x^k`.
pub fn comp_horner(coeffs: &[f64], x: f64) -> f64 {
    let Some((&last, rest)) = coeffs.split_last() else {
        return 0.0;
    };
    let mut s = last;
    let mut c: f64 = 0.0;
    for &a in rest.iter().rev() {
        let (p, pe) = two_prod(s, x);
        let (t, se) = two_sum(p, a);
        s = t;
        c = c.mul_add(x, pe + se);
    }
    s + c
}

/// Coefficients of the `order`-th derivative of `sum c_k h^k`.
pub fn derivative_coeffs(coeffs: &[f64], order: usize) -> Vec<f64> {
    if coeffs.len() <= order {
        return Vec::new();
    }
    (order..coeffs.len())
        .map(|k| {
            let falling: f64 = ((k - order + 1)..=k).map(|j| j as f64).product();
            coeffs[k] * falling
        })
        .collect()
}

/// Truncated Taylor polynomial `sum c_k (t - center)^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSeries {
    pub center: f64,
    pub coeffs: Vec<f64>,
}

impl PowerSeries {
    pub fn new(center: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Argument("power series needs at least one coefficient".into()));
        }
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Numerical(format!("non-finite coefficient at index {k}")));
        }
        Ok(PowerSeries { center, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Value of the `deriv_order`-th derivative at `t` (orders 0..=3).
    pub fn eval(&self, t: f64, deriv_order: usize) -> Result<f64> {
        if deriv_order > 3 {
            return Err(Error::Argument(format!(
                "derivative order {deriv_order} not supported (0..=3)"
            )));
        }
        Ok(self.eval_unchecked(t, deriv_order))
    }

    pub(crate) fn eval_unchecked(&self, t: f64, deriv_order: usize) -> f64 {
        let h = t - self.center;
        if deriv_order == 0 {
            comp_horner(&self.coeffs, h)
        } else {
            comp_horner(&derivative_coeffs(&self.coeffs, deriv_order), h)
        }
    }

    /// Cauchy–Hadamard estimate of the radius of convergence from the top
    /// third of the coefficients.
    ///
    /// Returns the smallest `|c_k|^{-1/k}` over the non-zero coefficients in
    /// that range, or `+inf` when they are all zero.
    pub fn radius_estimate(&self) -> Result<f64> {
        let d = self.degree();
        if d < 8 {
            return Err(Error::InsufficientData(format!(
                "radius estimate needs degree >= 8, got {d}"
            )));
        }
        let start = d - d / 3;
        let r = self.coeffs[start..]
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| c.abs().powf(-1.0 / (start + i) as f64))
            .fold(f64::INFINITY, f64::min);
        Ok(r)
    }
}

/// A power series together with the closed interval on which it is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub series: PowerSeries,
    pub lo: f64,
    pub hi: f64,
}

impl Segment {
    pub fn eval(&self, t: f64, deriv_order: usize) -> Result<f64> {
        if t < self.lo || t > self.hi {
            return Err(Error::Domain { t, lo: self.lo, hi: self.hi });
        }
        self.series.eval(t, deriv_order)
    }
}

/// Default tolerance on value/derivative mismatch at segment junctions.
pub const JUNCTION_TOL: f64 = 1e-9;

/// Ordered chain of [`Segment`]s tiling `[0, s_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseAnalytic {
    segments: Vec<Segment>,
    junction_tol: f64,
}

impl PiecewiseAnalytic {
    /// Builds and validates a piecewise function. The tiling must start at 0
    /// with an origin-centred segment, and adjacent segments must agree in
    /// value and slope at each junction to within `junction_tol` (relative to
    /// `max(1, |value|)`).
    pub fn new(segments: Vec<Segment>, junction_tol: f64) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::Argument("piecewise function needs a segment".into()))?;
        if first.lo != 0.0 || first.series.center != 0.0 {
            return Err(Error::Validation("first segment must be centred at 0".into()));
        }
        for seg in &segments {
            if !(seg.hi > seg.lo) {
                return Err(Error::Validation(format!(
                    "empty segment [{}, {}]",
                    seg.lo, seg.hi
                )));
            }
        }
        for w in segments.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.hi != b.lo {
                return Err(Error::Validation(format!(
                    "gap or overlap between {} and {}",
                    a.hi, b.lo
                )));
            }
            let t = a.hi;
            for order in 0..2 {
                let va = a.series.eval_unchecked(t, order);
                let vb = b.series.eval_unchecked(t, order);
                let scale = va.abs().max(1.0);
                if (va - vb).abs() > junction_tol * scale {
                    return Err(Error::Validation(format!(
                        "junction mismatch at t = {t} (derivative {order}): {va} vs {vb}"
                    )));
                }
            }
        }
        Ok(PiecewiseAnalytic { segments, junction_tol })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn junction_tol(&self) -> f64 {
        self.junction_tol
    }

    pub fn s_max(&self) -> f64 {
        self.segments.last().map(|s| s.hi).unwrap_or(0.0)
    }

    pub fn contains(&self, t: f64) -> bool {
        (0.0..=self.s_max()).contains(&t)
    }

    fn locate(&self, t: f64) -> Result<&Segment> {
        if !self.contains(t) {
            return Err(Error::Domain { t, lo: 0.0, hi: self.s_max() });
        }
        let idx = self.segments.partition_point(|s| s.lo <= t).saturating_sub(1);
        Ok(&self.segments[idx])
    }

    /// Value of the `deriv_order`-th derivative at `t`.
    pub fn eval(&self, t: f64, deriv_order: usize) -> Result<f64> {
        self.locate(t)?.series.eval(t, deriv_order)
    }

    /// `∫_0^upper f(t)/t dt`. Requires `f(0) = 0`.
    ///
    /// The origin segment is integrated termwise; later segments use 32-node
    /// Gauss–Legendre panels of width at most 1.
    pub fn integrate_weighted(&self, upper: f64) -> Result<f64> {
        let c0 = self.segments[0].series.coeffs[0];
        if c0.abs() > 1e-12 {
            return Err(Error::Precondition(format!(
                "f(0) = {c0} must vanish for f(t)/t to be integrable"
            )));
        }
        if !self.contains(upper) {
            return Err(Error::Domain { t: upper, lo: 0.0, hi: self.s_max() });
        }
        let rule = gl32();
        let mut acc = CompensatedSum::default();
        for seg in &self.segments {
            if seg.lo >= upper {
                break;
            }
            let hi = seg.hi.min(upper);
            if seg.lo == 0.0 {
                let scaled: Vec<f64> = std::iter::once(0.0)
                    .chain(
                        seg.series.coeffs.iter().enumerate().skip(1).map(|(k, c)| c / k as f64),
                    )
                    .collect();
                acc.add(comp_horner(&scaled, hi));
            } else {
                acc.add(integrate_panels(rule, seg.lo, hi, 1.0, |t| {
                    seg.series.eval_unchecked(t, 0) / t
                }));
            }
        }
        Ok(acc.value())
    }
}

fn gl32() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| QuadratureRule::gauss_legendre(32).expect("order 32 is valid"))
}

/// Truncated power-series arithmetic about a common expansion point.
pub(crate) mod ops {
    pub fn mul(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| {
                (0..=n)
                    .filter(|&i| i < a.len() && n - i < b.len())
                    .map(|i| a[i] * b[n - i])
                    .sum()
            })
            .collect()
    }

    /// `exp(a)`, truncated to the length of `a`.
    pub fn exp(a: &[f64]) -> Vec<f64> {
        let n = a.len();
        let mut e = vec![0.0; n];
        if n == 0 {
            return e;
        }
        e[0] = a[0].exp();
        // e' = a' e
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        e
    }
}
