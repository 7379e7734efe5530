//! Gap probabilities, nearest-neighbour spacing densities and their 1/N²
//! corrections, assembled from the transcendents, plus the closed-form
//! small- and large-s expansions used as references.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fredholm;
use crate::painleve::{self, SolveOptions, ThinningParam, TranscendentKind, TranscendentSolution};
use crate::series::{comp_horner, ops};

/// Below this spacing, curve values come from the origin series directly.
pub const SMALL_S: f64 = 1e-2;

fn expect_kind(sol: &TranscendentSolution, kind: TranscendentKind) -> Result<()> {
    if sol.kind != kind {
        return Err(Error::Argument(format!("expected a {kind:?} solution, got {:?}", sol.kind)));
    }
    Ok(())
}

fn same_xi(a: &TranscendentSolution, b: &TranscendentSolution) -> Result<()> {
    if a.xi != b.xi {
        return Err(Error::Argument(format!(
            "solutions computed at different xi ({} vs {})",
            a.xi.value(),
            b.xi.value()
        )));
    }
    Ok(())
}

/// Probability that an interval of length `s` is free of points of the
/// thinned sine process.
pub fn gap_probability(sigma0: &TranscendentSolution, s: f64) -> Result<f64> {
    expect_kind(sigma0, TranscendentKind::Sigma0)?;
    Ok(sigma0.function.integrate_weighted(PI * s)?.exp())
}

/// Coefficient of 1/N² in the finite-N gap probability.
pub fn gap_correction(sigma0: &TranscendentSolution, sigma1: &TranscendentSolution, s: f64) -> Result<f64> {
    expect_kind(sigma0, TranscendentKind::Sigma0)?;
    expect_kind(sigma1, TranscendentKind::Sigma1)?;
    same_xi(sigma0, sigma1)?;
    let i0 = sigma0.function.integrate_weighted(PI * s)?;
    let i1 = sigma1.function.integrate_weighted(PI * s)?;
    Ok(i1 * i0.exp())
}

/// Large-N spacing density from the modified transcendent.
pub fn spacing_leading_u(u0: &TranscendentSolution, xi: ThinningParam, s: f64) -> Result<f64> {
    expect_kind(u0, TranscendentKind::U0)?;
    if u0.xi != xi {
        return Err(Error::Argument("u0 was solved at a different xi".into()));
    }
    let integral = u0.function.integrate_weighted(2.0 * PI * s)?;
    Ok(xi.value() * PI * PI * s * s / 3.0 * integral.exp())
}

/// Coefficient of 1/N² in the finite-N spacing density (unit mean spacing).
pub fn spacing_correction_u(
    u0: &TranscendentSolution,
    u1: &TranscendentSolution,
    xi: ThinningParam,
    s: f64,
) -> Result<f64> {
    expect_kind(u1, TranscendentKind::U1)?;
    same_xi(u0, u1)?;
    let leading = spacing_leading_u(u0, xi, s)?;
    let integral = u1.function.integrate_weighted(2.0 * PI * s)?;
    Ok(leading * (-1.0 - PI * PI * s * s / 3.0 + integral))
}

/// Both spacing terms from the gap-probability transcendents:
/// `(1/ξ) d²/ds²` of the determinant and of its 1/N² coefficient.
pub fn spacing_from_gap(
    sigma0: &TranscendentSolution,
    sigma1: &TranscendentSolution,
    xi: ThinningParam,
    s: f64,
) -> Result<(f64, f64)> {
    expect_kind(sigma0, TranscendentKind::Sigma0)?;
    expect_kind(sigma1, TranscendentKind::Sigma1)?;
    same_xi(sigma0, sigma1)?;
    if sigma0.xi != xi {
        return Err(Error::Argument("solutions were computed at a different xi".into()));
    }
    if !(s >= 0.0) {
        return Err(Error::Argument(format!("spacing must be non-negative, got {s}")));
    }
    let x = xi.value();
    if s < SMALL_S {
        return Ok(spacing_from_origin_series(sigma0, sigma1, x, s));
    }
    let t = PI * s;
    let integral_derivs = |sol: &TranscendentSolution| -> Result<[f64; 3]> {
        let v = sol.eval(t, 0)?;
        let d = sol.eval(t, 1)?;
        Ok([sol.function.integrate_weighted(t)?, v / s, (PI * d - v / s) / s])
    };
    let [i0, i0p, i0pp] = integral_derivs(sigma0)?;
    let [i1, i1p, i1pp] = integral_derivs(sigma1)?;
    let e = i0.exp();
    let leading = e * (i0pp + i0p * i0p) / x;
    let correction = e * ((i0pp + i0p * i0p) * i1 + 2.0 * i0p * i1p + i1pp) / x;
    Ok((leading, correction))
}

/// Both spacing terms from the origin segments, as power series in s.
fn spacing_from_origin_series(
    sigma0: &TranscendentSolution,
    sigma1: &TranscendentSolution,
    xi: f64,
    s: f64,
) -> (f64, f64) {
    // ∫_0^{πs} σ(t)/t dt = Σ c_k π^k s^k / k
    let integral_series = |sol: &TranscendentSolution| -> Vec<f64> {
        let c = &sol.function.segments()[0].series.coeffs;
        c.iter()
            .enumerate()
            .map(|(k, ck)| if k == 0 { 0.0 } else { ck * PI.powi(k as i32) / k as f64 })
            .collect()
    };
    let i0 = integral_series(sigma0);
    let i1 = integral_series(sigma1);
    let len = i0.len().min(i1.len());
    let det = ops::exp(&i0[..len]);
    let corr = ops::mul(&det, &i1[..len], len);
    let second = |c: &[f64]| comp_horner(&crate::series::derivative_coeffs(c, 2), s);
    (second(&det) / xi, second(&corr) / xi)
}

/// Spacing density of the points following a single deleted point,
/// p(1; s) = −∂/∂ξ [p(0; s; ξ)/ξ] at ξ = 1, from u-path solutions at ξ
/// values just below 1 (one-sided differences, Richardson refined).
pub fn next_nearest_spacing(grid: &[f64], opts: &SolveOptions, h_xi: f64) -> Result<Vec<f64>> {
    if !(h_xi > 0.0 && h_xi <= 0.05) {
        return Err(Error::Argument(format!("xi step must lie in (0, 0.05], got {h_xi}")));
    }
    let s_top = grid.iter().cloned().fold(0.0, f64::max);
    let opts = SolveOptions { s_max: (2.0 * PI * s_top).max(1.0), ..*opts };
    let profile = |xi: f64| -> Result<Vec<f64>> {
        let xi = ThinningParam::new(xi)?;
        let u0 = painleve::solve_u0(xi, &opts)?;
        grid.iter().map(|&s| Ok(spacing_leading_u(&u0, xi, s)? / xi.value())).collect()
    };
    let g: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 4.0]
        .iter()
        .map(|k| profile(1.0 - k * h_xi))
        .collect::<Result<_>>()?;
    Ok((0..grid.len())
        .map(|i| {
            let d_h = (3.0 * g[0][i] - 4.0 * g[1][i] + g[2][i]) / (2.0 * h_xi);
            let d_2h = (3.0 * g[0][i] - 4.0 * g[2][i] + g[3][i]) / (4.0 * h_xi);
            -(4.0 * d_h - d_2h) / 3.0
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    SigmaPath,
    UPath,
    FiniteNExtrapolation,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::SigmaPath => "sigma-path",
            Provenance::UPath => "u-path",
            Provenance::FiniteNExtrapolation => "finite-n-extrapolation",
        }
    }
}

/// Tabulated large-N spacing density and its 1/N² coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingCurve {
    pub xi: ThinningParam,
    pub grid: Vec<f64>,
    pub leading: Vec<f64>,
    pub correction: Vec<f64>,
    pub provenance: Provenance,
}

impl SpacingCurve {
    pub fn from_gap(
        sigma0: &TranscendentSolution,
        sigma1: &TranscendentSolution,
        grid: &[f64],
    ) -> Result<Self> {
        let xi = sigma0.xi;
        let (leading, correction) = grid
            .iter()
            .map(|&s| spacing_from_gap(sigma0, sigma1, xi, s))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Self::checked(xi, grid, leading, correction, Provenance::SigmaPath)
    }

    pub fn from_u(u0: &TranscendentSolution, u1: &TranscendentSolution, grid: &[f64]) -> Result<Self> {
        let xi = u0.xi;
        let leading = grid.iter().map(|&s| spacing_leading_u(u0, xi, s)).collect::<Result<Vec<_>>>()?;
        let correction =
            grid.iter().map(|&s| spacing_correction_u(u0, u1, xi, s)).collect::<Result<Vec<_>>>()?;
        Self::checked(xi, grid, leading, correction, Provenance::UPath)
    }

    /// Fits `a + b/N² + c/N⁴` to finite-N densities at each grid point.
    pub fn from_finite_n(xi: ThinningParam, grid: &[f64], sizes: &[u32]) -> Result<Self> {
        let mut leading = Vec::with_capacity(grid.len());
        let mut correction = Vec::with_capacity(grid.len());
        for &s in grid {
            let samples = sizes
                .iter()
                .map(|&n| Ok((n, fredholm::finite_n_spacing(n, xi, s)?)))
                .collect::<Result<Vec<_>>>()?;
            let (a, b) = fredholm::extrapolate_in_n(&samples)?;
            leading.push(a);
            correction.push(b);
        }
        Self::checked(xi, grid, leading, correction, Provenance::FiniteNExtrapolation)
    }

    fn checked(
        xi: ThinningParam,
        grid: &[f64],
        leading: Vec<f64>,
        correction: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Argument("grid must be strictly increasing".into()));
        }
        // extrapolated values may dip a hair below zero where the density is ~0
        let floor = if provenance == Provenance::FiniteNExtrapolation { -1e-6 } else { -1e-12 };
        if let Some(i) = leading.iter().position(|v| !(*v >= floor)) {
            return Err(Error::Validation(format!(
                "negative density {} at s = {}",
                leading[i], grid[i]
            )));
        }
        let mass: f64 = grid
            .windows(2)
            .zip(leading.windows(2))
            .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
            .sum();
        if mass > 1.0 + 1e-3 {
            return Err(Error::Validation(format!("density integrates to {mass} > 1")));
        }
        Ok(SpacingCurve { xi, grid: grid.to_vec(), leading, correction, provenance })
    }

    /// CSV with `#` metadata lines, then `s,leading,correction,provenance`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# xi = {}", self.xi.value());
        let _ = writeln!(out, "# provenance = {}", self.provenance.label());
        let _ = writeln!(out, "# generator = rmtgap {}", env!("CARGO_PKG_VERSION"));
        out.push_str("s,leading,correction,provenance\n");
        for i in 0..self.grid.len() {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{}",
                self.grid[i],
                self.leading[i],
                self.correction[i],
                self.provenance.label()
            );
        }
        out
    }
}

/// `[0, top]` in steps of `step`, including `top` when it lands on the grid.
pub fn uniform_grid(top: f64, step: f64) -> Vec<f64> {
    let n = (top / step + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

/// Printed small-s expansions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmallSForm {
    /// Large-N gap probability.
    GapLeading,
    /// 1/N² coefficient of the gap probability.
    GapCorrection,
    /// Large-N spacing density.
    SpacingLeading,
    /// 1/N² coefficient of the spacing density.
    SpacingCorrection,
    /// Gap probability at finite N (needs N).
    FiniteN,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub value: f64,
    /// Set when `s` lies outside the range where the truncation is reliable.
    pub warning: Option<String>,
}

/// Largest s at which the truncated small-s expansions are used as references.
pub const SMALL_S_VALIDITY: f64 = 0.5;

pub fn reference_small_s(form: SmallSForm, xi: ThinningParam, n: Option<u32>, s: f64) -> Result<Reference> {
    let x = xi.value();
    let p = |k: i32| PI.powi(k);
    let value = match form {
        SmallSForm::GapLeading => {
            1.0 - x * s + x * x * p(2) / 36.0 * s.powi(4) - x * x * p(4) / 675.0 * s.powi(6)
                + x * x * p(6) / 17640.0 * s.powi(8)
                - x.powi(3) * p(6) / 291600.0 * s.powi(9)
        }
        SmallSForm::GapCorrection => {
            -x * x * p(2) * s.powi(4) / 36.0 + x * x * p(4) * s.powi(6) / 270.0
                - x * x * p(6) * s.powi(8) / 3780.0
                + x.powi(3) * p(6) * s.powi(9) / 48600.0
        }
        SmallSForm::SpacingLeading => {
            x * p(2) * s * s / 3.0 - 2.0 * x * p(4) * s.powi(4) / 45.0 + x * p(6) * s.powi(6) / 315.0
                - x * x * p(6) * s.powi(7) / 4050.0
        }
        SmallSForm::SpacingCorrection => {
            -x * p(2) * s * s / 3.0 + x * p(4) * s.powi(4) / 9.0 - 2.0 * x * p(6) * s.powi(6) / 135.0
                + x * x * p(6) * s.powi(7) / 675.0
        }
        SmallSForm::FiniteN => {
            let n = n.ok_or_else(|| Error::Argument("finite-N expansion needs N".into()))? as f64;
            let e = 1.0 / (n * n);
            1.0 - x * s + (1.0 - e) * x * x * p(2) * s.powi(4) / 36.0
                - (1.0 - e) * (2.0 - 3.0 * e) / 1350.0 * x * x * p(4) * s.powi(6)
                + (1.0 - e) * (1.0 - 2.0 * e) * (3.0 - 5.0 * e) / 52920.0 * x * x * p(6) * s.powi(8)
        }
    };
    let warning = (s > SMALL_S_VALIDITY || s < 0.0)
        .then(|| format!("s = {s} outside [0, {SMALL_S_VALIDITY}] where the truncation is reliable"));
    Ok(Reference { value, warning })
}

/// Printed large-s expansions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LargeSKind {
    /// Gap transcendent, 0 < ξ < 1.
    Ss,
    /// Its correction, 0 < ξ < 1.
    SsSig1,
    /// Gap transcendent, ξ = 1.
    SsA,
    /// Its correction, ξ = 1.
    SsB,
    /// Spacing transcendent, 0 < ξ < 1.
    U0Large,
    /// Its correction (leading term independent of ξ).
    U1Large,
    /// Spacing transcendent, ξ = 1.
    U0Large1,
    /// Its correction, ξ = 1.
    U1Large1,
    /// Large-N spacing density, shape only.
    SdA,
    /// 1/N² coefficient of the spacing density, shape only.
    SdB,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticForm {
    pub kind: LargeSKind,
    pub xi: ThinningParam,
    /// Decay rate −log(1 − ξ)/π, present for ξ < 1.
    pub k: Option<f64>,
}

impl AsymptoticForm {
    pub fn new(kind: LargeSKind, xi: ThinningParam) -> Result<Self> {
        let x = xi.value();
        let k = (x < 1.0).then(|| -(1.0 - x).ln() / PI);
        let needs_one = matches!(kind, LargeSKind::SsA | LargeSKind::SsB | LargeSKind::U0Large1 | LargeSKind::U1Large1);
        let needs_below = matches!(kind, LargeSKind::Ss | LargeSKind::SsSig1 | LargeSKind::U0Large);
        if needs_one && x != 1.0 {
            return Err(Error::Argument(format!("{kind:?} applies only at xi = 1")));
        }
        if needs_below && x == 1.0 {
            return Err(Error::Argument(format!("{kind:?} applies only for xi < 1")));
        }
        Ok(AsymptoticForm { kind, xi, k })
    }

    /// True when the form is known only up to a constant factor.
    pub fn has_undetermined_constant(&self) -> bool {
        matches!(self.kind, LargeSKind::SdA | LargeSKind::SdB)
    }
}

/// Non-oscillatory truncation of a large-s expansion. Shape-only forms are
/// returned with the undetermined constant set to 1.
pub fn reference_large_s(form: &AsymptoticForm, s: f64) -> Result<f64> {
    if s < 5.0 {
        return Err(Error::Argument(format!("large-s forms need s >= 5, got {s}")));
    }
    let x = form.xi.value();
    let k = form.k.unwrap_or(0.0);
    Ok(match form.kind {
        LargeSKind::Ss => -k * s + 0.5 * k * k,
        LargeSKind::SsSig1 => -k * k * s * s / 6.0,
        LargeSKind::SsA => -s * s / 4.0 - 0.25,
        LargeSKind::SsB => -s.powi(4) / 48.0 + s * s / 48.0,
        LargeSKind::U0Large => -k * s / 2.0 + k * k / 2.0 - 2.0,
        LargeSKind::U1Large => s * s / 6.0,
        LargeSKind::U0Large1 => -s * s / 16.0 - 0.25,
        LargeSKind::U1Large1 => -s.powi(4) / 768.0 + 43.0 * s * s / 192.0,
        LargeSKind::SdA => match form.k {
            Some(k) => (k * PI).powi(2) / x * s.powf(k * k / 2.0) * (-k * PI * s).exp(),
            None => PI.powf(15.0 / 4.0) / 16.0 * s.powf(7.0 / 4.0) * (-(PI * s).powi(2) / 8.0).exp(),
        },
        LargeSKind::SdB => match form.k {
            Some(k) => -(k * PI).powi(4) / (12.0 * x) * s.powf(k * k / 2.0 + 2.0) * (-k * PI * s).exp(),
            None => -PI.powf(31.0 / 4.0) / 3072.0 * s.powf(23.0 / 4.0) * (-(PI * s).powi(2) / 8.0).exp(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_s_examples() {
        let xi = ThinningParam::new(0.6).unwrap();
        let ss = AsymptoticForm::new(LargeSKind::Ss, xi).unwrap();
        let k = -(0.4f64).ln() / PI;
        assert!((ss.k.unwrap() - 0.29166).abs() < 1e-5);
        assert!((reference_large_s(&ss, 10.0).unwrap() - (-10.0 * k + k * k / 2.0)).abs() < 1e-15);
        let one = ThinningParam::new(1.0).unwrap();
        let ssa = AsymptoticForm::new(LargeSKind::SsA, one).unwrap();
        assert_eq!(reference_large_s(&ssa, 10.0).unwrap(), -25.25);
        let u1 = AsymptoticForm::new(LargeSKind::U1Large, xi).unwrap();
        assert_eq!(reference_large_s(&u1, 12.0).unwrap(), 24.0);
        assert!(AsymptoticForm::new(LargeSKind::SsA, xi).is_err());
        assert!(AsymptoticForm::new(LargeSKind::Ss, one).is_err());
        assert!(reference_large_s(&ssa, 4.0).is_err());
    }

    #[test]
    fn small_s_examples() {
        let one = ThinningParam::new(1.0).unwrap();
        let s: f64 = 0.1;
        let expect = 1.0 - 0.1 + PI.powi(2) * s.powi(4) / 36.0 - PI.powi(4) * s.powi(6) / 675.0
            + PI.powi(6) * s.powi(8) / 17640.0
            - PI.powi(6) * s.powi(9) / 291600.0;
        let got = reference_small_s(SmallSForm::GapLeading, one, None, s).unwrap();
        assert!((got.value - expect).abs() < 1e-16 && got.warning.is_none());
        let xi = ThinningParam::new(0.6).unwrap();
        assert_eq!(reference_small_s(SmallSForm::SpacingCorrection, xi, None, 0.0).unwrap().value, 0.0);
        assert!(reference_small_s(SmallSForm::FiniteN, one, None, 0.2).is_err());
        assert!(reference_small_s(SmallSForm::GapLeading, one, None, 0.7).unwrap().warning.is_some());
    }

    #[test]
    fn grid_includes_endpoint() {
        let g = uniform_grid(6.0, 0.02);
        assert_eq!(g.len(), 301);
        assert!((g[300] - 6.0).abs() < 1e-12);
    }
}
