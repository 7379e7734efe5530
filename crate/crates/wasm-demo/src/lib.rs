//! Browser bindings for three operations: a spacing density with its 1/N²
//! term, the gap probability at one interval length, and a sampled
//! transcendent. Each binding wraps a plain function that native tests use.

use std::f64::consts::PI;

use rmtgap::fredholm::{self, KernelSpec, DEFAULT_ORDER};
use rmtgap::painleve::{self, SolveOptions, ThinningParam, TranscendentKind};
use rmtgap::spacing::{self, SpacingCurve};
use wasm_bindgen::prelude::*;

/// Largest spacing the page may request; keeps the solve interactive.
pub const MAX_SPACING: f64 = 8.0;
pub const MAX_SAMPLES: usize = 4000;

fn solve_opts(t_max: f64) -> SolveOptions {
    SolveOptions { s_max: t_max * (1.0 + 1e-9), ..Default::default() }
}

/// Rows of `(s, leading, correction)` flattened, from the spacing
/// transcendents on `[0, s_max]` in steps of `step`.
pub fn spacing_rows(xi: f64, s_max: f64, step: f64) -> rmtgap::Result<Vec<f64>> {
    if !(s_max > 0.0 && s_max <= MAX_SPACING) {
        return Err(rmtgap::Error::Argument(format!("s_max must lie in (0, {MAX_SPACING}], got {s_max}")));
    }
    if !(step > 0.0) || s_max / step > MAX_SAMPLES as f64 {
        return Err(rmtgap::Error::Argument(format!("step {step} gives too many points")));
    }
    let xi = ThinningParam::new(xi)?;
    let grid = spacing::uniform_grid(s_max, step);
    let opts = solve_opts(2.0 * PI * grid.last().copied().unwrap_or(s_max));
    let u0 = painleve::solve_u0(xi, &opts)?;
    let u1 = painleve::solve_linear_correction(TranscendentKind::U1, &u0, xi, &opts)?;
    let curve = SpacingCurve::from_u(&u0, &u1, &grid)?;
    Ok((0..grid.len()).flat_map(|i| [grid[i], curve.leading[i], curve.correction[i]]).collect())
}

/// `[value, 1/N² coefficient, error estimate]` of the gap probability.
pub fn gap_values(xi: f64, s: f64) -> rmtgap::Result<Vec<f64>> {
    if !(0.0..=MAX_SPACING).contains(&s) {
        return Err(rmtgap::Error::Argument(format!("s must lie in [0, {MAX_SPACING}], got {s}")));
    }
    let xi = ThinningParam::new(xi)?;
    let det = fredholm::nystrom_det(&KernelSpec::sine(xi), s, DEFAULT_ORDER)?;
    let trace = fredholm::resolvent_trace_correction(xi, s, DEFAULT_ORDER)?;
    Ok(vec![det.value, -xi.value() * det.value * trace, det.est_error])
}

/// Rows of `(t, value)` flattened for one transcendent on `[0, t_max]`.
pub fn transcendent_rows(kind: &str, xi: f64, t_max: f64, samples: usize) -> rmtgap::Result<Vec<f64>> {
    if !(2..=MAX_SAMPLES).contains(&samples) {
        return Err(rmtgap::Error::Argument(format!("samples must lie in 2..={MAX_SAMPLES}, got {samples}")));
    }
    if !(t_max > 0.0 && t_max <= 2.0 * PI * MAX_SPACING) {
        return Err(rmtgap::Error::Argument(format!("t_max out of range: {t_max}")));
    }
    let kind: TranscendentKind = kind.parse()?;
    let xi = ThinningParam::new(xi)?;
    let opts = solve_opts(t_max);
    let sol = match kind {
        TranscendentKind::Sigma0 => painleve::solve_sigma0(xi, &opts)?,
        TranscendentKind::U0 => painleve::solve_u0(xi, &opts)?,
        TranscendentKind::Sigma1 => {
            let base = painleve::solve_sigma0(xi, &opts)?;
            painleve::solve_linear_correction(kind, &base, xi, &opts)?
        }
        TranscendentKind::U1 => {
            let base = painleve::solve_u0(xi, &opts)?;
            painleve::solve_linear_correction(kind, &base, xi, &opts)?
        }
    };
    (0..samples)
        .map(|i| {
            let t = t_max * i as f64 / (samples - 1) as f64;
            Ok([t, sol.eval(t, 0)?])
        })
        .collect::<rmtgap::Result<Vec<[f64; 2]>>>()
        .map(|rows| rows.concat())
}

fn js_err(e: rmtgap::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen(js_name = spacingCurve)]
pub fn spacing_curve(xi: f64, s_max: f64, step: f64) -> Result<Vec<f64>, JsValue> {
    spacing_rows(xi, s_max, step).map_err(js_err)
}

#[wasm_bindgen(js_name = gapProbability)]
pub fn gap_probability(xi: f64, s: f64) -> Result<Vec<f64>, JsValue> {
    gap_values(xi, s).map_err(js_err)
}

#[wasm_bindgen(js_name = transcendent)]
pub fn transcendent(kind: &str, xi: f64, t_max: f64, samples: usize) -> Result<Vec<f64>, JsValue> {
    transcendent_rows(kind, xi, t_max, samples).map_err(js_err)
}
