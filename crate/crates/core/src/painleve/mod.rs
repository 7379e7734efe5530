//! Painlevé transcendents for the thinned sine process and their first
//! finite-size corrections, computed by chaining Taylor series.
//!
//! `Sigma0` solves the sigma form of Painlevé V whose τ-function is the gap
//! probability; `Sigma1` is its 1/N² correction (a linear equation driven by
//! `Sigma0`). `U0` and `U1` are the analogous pair for the spacing density.

mod equations;
mod jet;
mod taylor;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexfloat;
use crate::series::{PiecewiseAnalytic, PowerSeries, Segment, JUNCTION_TOL};
use equations::Nonlinear;
use taylor::Center;

/// Probability ξ with which each eigenvalue is independently retained.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ThinningParam(f64);

impl ThinningParam {
    pub fn new(xi: f64) -> Result<Self> {
        if xi > 0.0 && xi <= 1.0 {
            Ok(ThinningParam(xi))
        } else {
            Err(Error::Argument(format!("thinning parameter must lie in (0, 1], got {xi}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for ThinningParam {
    fn default() -> Self {
        ThinningParam(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TranscendentKind {
    Sigma0,
    Sigma1,
    U0,
    U1,
}

impl TranscendentKind {
    fn equation(self) -> Nonlinear {
        match self {
            TranscendentKind::Sigma0 | TranscendentKind::Sigma1 => Nonlinear::Gap,
            TranscendentKind::U0 | TranscendentKind::U1 => Nonlinear::Spacing,
        }
    }

    fn is_correction(self) -> bool {
        matches!(self, TranscendentKind::Sigma1 | TranscendentKind::U1)
    }

    /// The nonlinear solution a correction is driven by.
    pub fn base(self) -> Option<TranscendentKind> {
        match self {
            TranscendentKind::Sigma1 => Some(TranscendentKind::Sigma0),
            TranscendentKind::U1 => Some(TranscendentKind::U0),
            _ => None,
        }
    }
}

impl std::str::FromStr for TranscendentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigma0" => Ok(TranscendentKind::Sigma0),
            "sigma1" => Ok(TranscendentKind::Sigma1),
            "u0" => Ok(TranscendentKind::U0),
            "u1" => Ok(TranscendentKind::U1),
            _ => Err(Error::Argument(format!("unknown transcendent {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub s_max: f64,
    /// Taylor degree of every segment, including the origin segment.
    pub degree: usize,
    /// Fraction of the estimated radius of convergence used as the step.
    pub step_factor: f64,
    pub min_second_deriv: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { s_max: 20.0, degree: 35, step_factor: 0.25, min_second_deriv: 1e-10 }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if !(self.s_max > 0.0 && self.s_max.is_finite()) {
            return Err(Error::Argument(format!("s_max must be positive, got {}", self.s_max)));
        }
        if !(10..=40).contains(&self.degree) {
            return Err(Error::Argument(format!("degree must lie in 10..=40, got {}", self.degree)));
        }
        if !(self.step_factor > 0.0 && self.step_factor < 1.0) {
            return Err(Error::Argument(format!(
                "step factor must lie in (0, 1), got {}",
                self.step_factor
            )));
        }
        Ok(())
    }
}

/// Number of points on the residual check grid.
pub const CHECK_POINTS: usize = 512;
/// Largest scaled residual accepted on the check grid.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TranscendentSolution {
    pub kind: TranscendentKind,
    pub xi: ThinningParam,
    pub function: PiecewiseAnalytic,
    pub residual_sup: f64,
}

impl TranscendentSolution {
    pub fn eval(&self, t: f64, deriv_order: usize) -> Result<f64> {
        self.function.eval(t, deriv_order)
    }

    pub fn to_json(&self) -> String {
        let doc = SolutionDoc {
            kind: self.kind,
            xi: self.xi.value(),
            residual_sup: self.residual_sup,
            junction_tol: self.function.junction_tol(),
            segments: self
                .function
                .segments()
                .iter()
                .map(|s| SegmentDoc {
                    center: s.series.center,
                    lo: s.lo,
                    hi: s.hi,
                    coeffs: s.series.coeffs.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("solution documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SolutionDoc =
            serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), detail: e.to_string() })?;
        let segments = doc
            .segments
            .into_iter()
            .map(|s| Ok(Segment { series: PowerSeries::new(s.center, s.coeffs)?, lo: s.lo, hi: s.hi }))
            .collect::<Result<Vec<_>>>()?;
        Ok(TranscendentSolution {
            kind: doc.kind,
            xi: ThinningParam::new(doc.xi)?,
            function: PiecewiseAnalytic::new(segments, doc.junction_tol)?,
            residual_sup: doc.residual_sup,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SegmentDoc {
    #[serde(with = "hexfloat::serde_f64")]
    center: f64,
    #[serde(with = "hexfloat::serde_f64")]
    lo: f64,
    #[serde(with = "hexfloat::serde_f64")]
    hi: f64,
    #[serde(with = "hexfloat::serde_vec")]
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SolutionDoc {
    kind: TranscendentKind,
    #[serde(with = "hexfloat::serde_f64")]
    xi: f64,
    #[serde(with = "hexfloat::serde_f64")]
    residual_sup: f64,
    #[serde(with = "hexfloat::serde_f64")]
    junction_tol: f64,
    segments: Vec<SegmentDoc>,
}

/// The unique Taylor series at the origin, coefficients `0..=degree`.
pub fn boundary_series(kind: TranscendentKind, xi: ThinningParam, degree: usize) -> Result<PowerSeries> {
    if degree > 40 {
        return Err(Error::Argument(format!("boundary series degree {degree} exceeds 40")));
    }
    let eq = kind.equation();
    let x = xi.value();
    let coeffs = match kind {
        TranscendentKind::Sigma0 | TranscendentKind::U0 => taylor::origin_nonlinear(eq, x, degree)?,
        TranscendentKind::Sigma1 | TranscendentKind::U1 => {
            let base = taylor::origin_nonlinear(eq, x, degree + 2)?;
            let coef = taylor::linear_coefficient_series(eq, 0.0, &base, degree + 1);
            let free = match kind {
                TranscendentKind::Sigma1 => (1, 0.0),
                _ => (5, x / (1728.0 * std::f64::consts::PI)),
            };
            taylor::local_linear(&coef, Center::Origin { free }, degree)?
        }
    };
    PowerSeries::new(0.0, coeffs)
}

/// Solves the gap-probability transcendent on `[0, opts.s_max]`.
pub fn solve_sigma0(xi: ThinningParam, opts: &SolveOptions) -> Result<TranscendentSolution> {
    solve_nonlinear(TranscendentKind::Sigma0, xi, opts)
}

/// Solves the spacing-density transcendent on `[0, opts.s_max]`.
pub fn solve_u0(xi: ThinningParam, opts: &SolveOptions) -> Result<TranscendentSolution> {
    solve_nonlinear(TranscendentKind::U0, xi, opts)
}

fn solve_nonlinear(kind: TranscendentKind, xi: ThinningParam, opts: &SolveOptions) -> Result<TranscendentSolution> {
    opts.validate()?;
    let origin = boundary_series(kind, xi, opts.degree)?;
    let segments = taylor::continue_nonlinear(kind.equation(), origin, opts)?;
    finish(kind, xi, segments, None, opts)
}

/// Solves the linear equation for the 1/N² correction driven by `base`.
pub fn solve_linear_correction(
    kind: TranscendentKind,
    base: &TranscendentSolution,
    xi: ThinningParam,
    opts: &SolveOptions,
) -> Result<TranscendentSolution> {
    opts.validate()?;
    if kind.base() != Some(base.kind) {
        return Err(Error::Argument(format!(
            "{kind:?} needs a {:?} base solution, got {:?}",
            kind.base(),
            base.kind
        )));
    }
    if base.xi != xi {
        return Err(Error::Argument("base solution was computed for a different xi".into()));
    }
    if base.function.s_max() < opts.s_max {
        return Err(Error::Argument(format!(
            "base solution covers [0, {}], need [0, {}]",
            base.function.s_max(),
            opts.s_max
        )));
    }
    let eq = kind.equation();
    let base_origin = boundary_series(base.kind, xi, opts.degree + 2)?;
    let origin = boundary_series(kind, xi, opts.degree)?;
    let segments = taylor::continue_linear(eq, &base_origin, &base.function, origin, opts)?;
    finish(kind, xi, segments, Some(&base.function), opts)
}

fn finish(
    kind: TranscendentKind,
    xi: ThinningParam,
    segments: Vec<Segment>,
    base: Option<&PiecewiseAnalytic>,
    opts: &SolveOptions,
) -> Result<TranscendentSolution> {
    let function = PiecewiseAnalytic::new(segments, JUNCTION_TOL)?;
    let lo = opts.s_max / 100.0;
    let mut residual_sup: f64 = 0.0;
    let mut worst = lo;
    for i in 0..CHECK_POINTS {
        let t = lo + (opts.s_max - lo) * i as f64 / (CHECK_POINTS - 1) as f64;
        let r = ode_residual(kind, &function, base, t)?;
        if !(r <= residual_sup) {
            residual_sup = r;
            worst = t;
        }
    }
    if !(residual_sup < RESIDUAL_TOL) {
        return Err(Error::Validation(format!(
            "{kind:?} residual {residual_sup:e} at t = {worst} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    Ok(TranscendentSolution { kind, xi, function, residual_sup })
}

/// Defect of the governing equation at `t`, divided by `max(1, sum of
/// absolute values of its terms)`.
pub fn ode_residual(
    kind: TranscendentKind,
    function: &PiecewiseAnalytic,
    base: Option<&PiecewiseAnalytic>,
    t: f64,
) -> Result<f64> {
    let y = [function.eval(t, 0)?, function.eval(t, 1)?, function.eval(t, 2)?];
    if kind.is_correction() {
        let base = base.ok_or_else(|| Error::Argument(format!("{kind:?} residual needs the base solution")))?;
        let b = [base.eval(t, 0)?, base.eval(t, 1)?, base.eval(t, 2)?];
        Ok(taylor::linear_defect(kind.equation(), t, b, y))
    } else {
        Ok(taylor::nonlinear_defect(kind.equation(), t, y[0], y[1], y[2]))
    }
}

/// Residual of a single power series (no piecewise structure), for checking
/// truncated expansions directly.
pub fn series_residual(kind: TranscendentKind, series: &PowerSeries, base: Option<&PowerSeries>, t: f64) -> Result<f64> {
    let seg = |s: &PowerSeries| -> Result<PiecewiseAnalytic> {
        PiecewiseAnalytic::new(vec![Segment { series: s.clone(), lo: 0.0, hi: t.max(f64::MIN_POSITIVE) }], JUNCTION_TOL)
    };
    let f = seg(series)?;
    let b = base.map(seg).transpose()?;
    ode_residual(kind, &f, b.as_ref(), t)
}
