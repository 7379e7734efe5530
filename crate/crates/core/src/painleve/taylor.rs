//! Order-by-order Taylor coefficient recurrences and the continuation loops.

use super::equations::{lead_factor, linear_coefficients, nonlinear_regular, nonlinear_terms, Nonlinear};
use super::jet::{derivative_jets, Jet};
use super::SolveOptions;
use crate::error::{Error, Result};
use crate::series::{PowerSeries, Segment};

/// Solves for `coeffs[k]` given that `residual` is affine in it.
fn fill(coeffs: &mut [f64], k: usize, order: usize, residual: impl Fn(&[f64]) -> f64) -> Result<()> {
    coeffs[k] = 0.0;
    let r0 = residual(coeffs);
    coeffs[k] = 1.0;
    let r1 = residual(coeffs);
    let lambda = r1 - r0;
    if !lambda.is_finite() || !r0.is_finite() || lambda == 0.0 {
        return Err(Error::Degenerate {
            order,
            detail: format!("coefficient {k} has vanishing multiplier {lambda:e}"),
        });
    }
    coeffs[k] = -r0 / lambda;
    Ok(())
}

/// Coefficient `n` of the sum of the polynomial-form terms, expanded at 0.
fn origin_nonlinear_residual(eq: Nonlinear, a: &[f64], n: usize) -> f64 {
    let len = n + 1;
    let t = Jet::variable(0.0, len);
    let [v, d1, d2, _] = derivative_jets(a, len);
    nonlinear_terms(eq, &t, &v, &d1, &d2).iter().map(|j| j.at(n)).sum()
}

/// Origin series of the nonlinear transcendent, coefficients 0..=degree.
pub(crate) fn origin_nonlinear(eq: Nonlinear, xi: f64, degree: usize) -> Result<Vec<f64>> {
    let pi = std::f64::consts::PI;
    let mut a = vec![0.0; degree + 1];
    let (first, free): (usize, &[(usize, f64)]) = match eq {
        Nonlinear::Gap => {
            let a1 = -xi / pi;
            a[1] = a1;
            if degree >= 2 {
                a[2] = -a1 * a1;
            }
            (3, &[])
        }
        Nonlinear::Spacing => {
            if degree >= 2 {
                a[2] = -1.0 / 15.0;
            }
            (3, &[(5, -xi / (8640.0 * pi))])
        }
    };
    let a_len = a.len();
    for m in first..=degree {
        if let Some(&(_, value)) = free.iter().find(|(k, _)| *k == m) {
            a[m] = value;
            continue;
        }
        let slice = &mut a[..a_len];
        fill(slice, m, m, |c| origin_nonlinear_residual(eq, c, m))?;
    }
    a.truncate(degree + 1);
    Ok(a)
}

/// Taylor series about `t0 > 0` from value, slope and half the second
/// derivative, extended through the regular third-order form.
pub(crate) fn local_nonlinear(eq: Nonlinear, t0: f64, seed: [f64; 3], degree: usize) -> Result<Vec<f64>> {
    debug_assert!(t0 > 0.0);
    let mut a = vec![0.0; degree + 1];
    let n_seed = seed.len().min(degree + 1);
    a[..n_seed].copy_from_slice(&seed[..n_seed]);
    let kappa = lead_factor(eq);
    for n in 0..degree.saturating_sub(2) {
        let len = n + 1;
        let t = Jet::variable(t0, len);
        let [v, d1, d2, _] = derivative_jets(&a, len);
        a[n + 3] = 0.0;
        let d3 = derivative_jets(&a[..n + 4], len)[3].clone();
        let g = nonlinear_regular(eq, &t, &v, &d1, &d2, &d3).at(n);
        let lead = kappa * t0 * t0 * ((n + 1) * (n + 2) * (n + 3)) as f64;
        a[n + 3] = -g / lead;
        if !a[n + 3].is_finite() {
            return Err(Error::Continuation {
                at: t0,
                detail: format!("non-finite coefficient at order {}", n + 3),
            });
        }
    }
    Ok(a)
}

/// Coefficient series (A, B, C, D) of the linear correction equation, each
/// accurate through index `len - 1` provided `base` has degree `len + 1`.
pub(crate) fn linear_coefficient_series(eq: Nonlinear, t0: f64, base: &[f64], len: usize) -> [Vec<f64>; 4] {
    let t = Jet::variable(t0, len);
    let [v, d1, d2, _] = derivative_jets(base, len);
    linear_coefficients(eq, &t, &v, &d1, &d2).map(|j| j.0)
}

/// Coefficient `n` of A y″ + B y′ + C y − D.
fn linear_residual(coef: &[Vec<f64>; 4], y: &[f64], n: usize) -> f64 {
    let len = n + 1;
    let [y0, y1, y2, _] = derivative_jets(y, len);
    let [a, b, c, d] = coef.each_ref().map(|v| Jet::from_coeffs(v, len));
    (a * y2 + b * y1 + c * y0 - d).at(n)
}

/// Solves coefficient `n` of the linear equation for `y[k]`. The multiplier
/// of `y[k]` comes from the homogeneous part applied to a unit vector, since
/// differencing two full residuals cancels once the other terms are large.
fn fill_linear(coef: &[Vec<f64>; 4], y: &mut [f64], k: usize, n: usize) -> Result<()> {
    let mut unit = vec![0.0; y.len()];
    unit[k] = 1.0;
    let len = n + 1;
    let [u0, u1, u2, _] = derivative_jets(&unit, len);
    let [a, b, c, _] = coef.each_ref().map(|v| Jet::from_coeffs(v, len));
    let lambda = (a * u2 + b * u1 + c * u0).at(n);
    y[k] = 0.0;
    let r0 = linear_residual(coef, y, n);
    if !lambda.is_finite() || !r0.is_finite() || lambda == 0.0 {
        return Err(Error::Degenerate {
            order: n,
            detail: format!("coefficient {k} has vanishing multiplier {lambda:e}"),
        });
    }
    y[k] = -r0 / lambda;
    Ok(())
}

/// How the unknown coefficients of a linear-correction segment are ordered.
pub(crate) enum Center {
    /// The origin, where the leading coefficient vanishes to second order.
    Origin { free: (usize, f64) },
    /// A regular point with seeds y(t0), y′(t0).
    Ordinary { y0: f64, y1: f64 },
    /// A simple zero of the leading coefficient; seeds y(t0) and y″(t0)/2.
    Singular { y0: f64, y2: f64 },
}

pub(crate) fn local_linear(coef: &[Vec<f64>; 4], center: Center, degree: usize) -> Result<Vec<f64>> {
    let mut y = vec![0.0; degree + 1];
    match center {
        Center::Origin { free } => {
            for n in 0..=degree {
                if n == free.0 {
                    y[n] = free.1;
                    continue;
                }
                fill_linear(coef, &mut y, n, n)?;
            }
        }
        Center::Ordinary { y0, y1 } => {
            y[0] = y0;
            if degree >= 1 {
                y[1] = y1;
            }
            for n in 0..degree.saturating_sub(1) {
                fill_linear(coef, &mut y, n + 2, n)?;
            }
        }
        Center::Singular { y0, y2 } => {
            let mut coef = coef.clone();
            coef[0][0] = 0.0;
            y[0] = y0;
            if degree >= 2 {
                y[2] = y2;
            }
            for n in 0..degree {
                if n == 1 {
                    continue;
                }
                fill_linear(&coef, &mut y, n + 1, n)?;
            }
        }
    }
    Ok(y)
}

/// Step length from the radius estimate, clamped and then shortened until
/// the last two retained terms are negligible.
pub(crate) fn step_length(series: &PowerSeries, opts: &SolveOptions) -> Result<f64> {
    let r = series.radius_estimate()?;
    let mut h = if r.is_finite() { (opts.step_factor * r).clamp(0.05, 1.0) } else { 1.0 };
    let c = &series.coeffs;
    let d = c.len() - 1;
    let scale = c[0].abs().max(1.0);
    let tail = |h: f64| c[d - 1].abs() * h.powi(d as i32 - 1) + c[d].abs() * h.powi(d as i32);
    while tail(h) > 1e-16 * scale {
        h *= 0.8;
        if h < 1e-6 {
            return Err(Error::Continuation {
                at: series.center,
                detail: format!("step underflow (radius estimate {r:e})"),
            });
        }
    }
    Ok(h)
}

fn seeds(seg: &Segment, t: f64) -> [f64; 3] {
    let s = &seg.series;
    [s.eval_unchecked(t, 0), s.eval_unchecked(t, 1), 0.5 * s.eval_unchecked(t, 2)]
}

/// Scaled defect of the polynomial form at a single point.
pub(crate) fn nonlinear_defect(eq: Nonlinear, t: f64, v: f64, d1: f64, d2: f64) -> f64 {
    let j = |x| Jet::constant(x, 1);
    let terms = nonlinear_terms(eq, &j(t), &j(v), &j(d1), &j(d2));
    let sum: f64 = terms.iter().map(|x| x.0[0]).sum();
    let scale: f64 = terms.iter().map(|x| x.0[0].abs()).sum();
    sum.abs() / scale.max(1.0)
}

/// Scaled defect of the linear correction equation at a single point.
pub(crate) fn linear_defect(eq: Nonlinear, t: f64, base: [f64; 3], y: [f64; 3]) -> f64 {
    let j = |x| Jet::constant(x, 1);
    let [a, b, c, d] = linear_coefficients(eq, &j(t), &j(base[0]), &j(base[1]), &j(base[2]));
    let terms = [a.0[0] * y[2], b.0[0] * y[1], c.0[0] * y[0], -d.0[0]];
    let sum: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|x| x.abs()).sum();
    sum.abs() / scale.max(1.0)
}

/// Chains Taylor segments of the nonlinear transcendent from the origin out
/// to `opts.s_max`.
pub(crate) fn continue_nonlinear(eq: Nonlinear, origin: PowerSeries, opts: &SolveOptions) -> Result<Vec<Segment>> {
    let r0 = origin.radius_estimate()?;
    let h0 = step_length(&origin, opts)?.min(0.5 * r0);
    let mut segments = vec![Segment { series: origin, lo: 0.0, hi: h0.min(opts.s_max) }];
    let mut t = segments[0].hi;
    while t < opts.s_max {
        let prev = segments.last().expect("non-empty");
        let seed = seeds(prev, t);
        // The seed must lie on the solution manifold; a large defect here
        // means the chain has left the branch it started on.
        let defect = nonlinear_defect(eq, t, seed[0], seed[1], 2.0 * seed[2]);
        if defect > 1e-9 {
            return Err(Error::Continuation {
                at: t,
                detail: format!("seed defect {defect:e} off the solution branch"),
            });
        }
        let coeffs = local_nonlinear(eq, t, seed, opts.degree)?;
        let series = PowerSeries::new(t, coeffs)?;
        let h = step_length(&series, opts)?;
        let hi = if t + h >= opts.s_max { opts.s_max } else { t + h };
        segments.push(Segment { series, lo: t, hi });
        t = hi;
    }
    Ok(segments)
}

/// First zero of the second derivative of `series` in `(lo, hi]`, if the
/// second derivative changes sign there.
fn second_derivative_root(series: &PowerSeries, lo: f64, hi: f64) -> Option<f64> {
    const SAMPLES: usize = 256;
    let f = |t: f64| series.eval_unchecked(t, 2);
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=SAMPLES {
        let b = lo + (hi - lo) * i as f64 / SAMPLES as f64;
        let fb = f(b);
        if fa == 0.0 && a > lo {
            return Some(a);
        }
        if fa * fb < 0.0 {
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            for _ in 0..200 {
                let m = 0.5 * (x0 + x1);
                if m <= x0 || m >= x1 {
                    break;
                }
                let fm = f(m);
                if fm == 0.0 {
                    return Some(m);
                }
                if f0 * fm < 0.0 {
                    x1 = m;
                } else {
                    x0 = m;
                    f0 = fm;
                }
            }
            return Some(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    None
}

/// Chains Taylor segments of the linear correction. The base solution is
/// re-expanded about each centre of the correction; where its second
/// derivative changes sign the correction is expanded about the zero itself,
/// which is a regular singular point with exponents 0 and 2.
pub(crate) fn continue_linear(
    eq: Nonlinear,
    base_origin: &PowerSeries,
    base: &crate::series::PiecewiseAnalytic,
    origin: PowerSeries,
    opts: &SolveOptions,
) -> Result<Vec<Segment>> {
    let d = opts.degree;
    let base_step = step_length(base_origin, opts)?;
    let h0 = step_length(&origin, opts)?
        .min(base_step)
        .min(0.5 * base_origin.radius_estimate()?);
    let mut hi0 = h0.min(opts.s_max);
    // whether the next centre sits at a zero of the base second derivative
    let mut singular = false;
    if let Some(root) = second_derivative_root(base_origin, 0.0, (1.1 * hi0).min(opts.s_max)) {
        if root < opts.s_max {
            hi0 = root;
            singular = true;
        }
    }
    let mut segments = vec![Segment { series: origin, lo: 0.0, hi: hi0 }];
    let mut t = hi0;
    while t < opts.s_max {
        let base_seed = [base.eval(t, 0)?, base.eval(t, 1)?, 0.5 * base.eval(t, 2)?];
        let base_local = PowerSeries::new(t, local_nonlinear(eq, t, base_seed, d + 2)?)?;
        let coef = linear_coefficient_series(eq, t, &base_local.coeffs, d + 1);
        if !singular && base_seed[2].abs() < 0.5 * opts.min_second_deriv {
            return Err(Error::Degenerate {
                order: 0,
                detail: format!("base second derivative {:e} vanishes at t = {t}", 2.0 * base_seed[2]),
            });
        }
        let prev = segments.last().expect("non-empty");
        let center = if singular {
            Center::Singular {
                y0: prev.series.eval_unchecked(t, 0),
                y2: 0.5 * prev.series.eval_unchecked(t, 2),
            }
        } else {
            Center::Ordinary {
                y0: prev.series.eval_unchecked(t, 0),
                y1: prev.series.eval_unchecked(t, 1),
            }
        };
        let series = PowerSeries::new(t, local_linear(&coef, center, d)?)?;
        let base_h = step_length(&base_local, opts)?;
        let mut h = step_length(&series, opts)?.min(base_h);
        // at a zero the sign of the second derivative is noise, so start the
        // search a little way off
        let search_from = if singular { t + 0.01 * h } else { t };
        singular = false;
        // The correction is analytic at a zero of the base second derivative,
        // but its series about a nearby ordinary centre picks up rounding
        // noise that grows like the inverse distance to the zero, which
        // shrinks its radius estimate. So any zero within the base step ends
        // the segment, whatever the correction's own estimate says.
        let lookahead = (t + base_h).min(opts.s_max);
        if let Some(root) = second_derivative_root(&base_local, search_from, lookahead) {
            if root < opts.s_max {
                h = root - t;
                singular = true;
            }
        }
        let hi = if singular {
            t + h
        } else if t + h >= opts.s_max {
            opts.s_max
        } else {
            t + h
        };
        segments.push(Segment { series, lo: t, hi });
        t = hi;
    }
    Ok(segments)
}
