//! Point-process statistics for sequences of zeros: loading, unfolding to
//! unit density, Bernoulli thinning, streaming histograms of pair gaps and
//! consecutive gaps, and comparison against the random-matrix predictions.
//!
//! Everything here streams: the accumulators see one point at a time and
//! hold at most `window` points, so datasets far larger than memory can be
//! processed from files.

use std::collections::VecDeque;
use std::f64::consts::{E, PI};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::painleve::{ThinningParam, TranscendentSolution};
use crate::spacing;

/// Prime-sum constant of the two-point expansion.
pub const LAMBDA: f64 = 1.57314;
/// Ratio of the cubic to the quadratic prime-sum constant.
pub const Q_OVER_LAMBDA: f64 = 1.4720;
/// Zeros per block in local-density unfolding.
pub const DEFAULT_BLOCK: usize = 1_000_000;

pub const DEFAULT_WINDOW: usize = 50;
pub const DEFAULT_TWO_POINT_BIN: f64 = 0.05;
pub const DEFAULT_TWO_POINT_SMAX: f64 = 10.0;
pub const DEFAULT_SPACING_BIN: f64 = 0.02;
pub const DEFAULT_SPACING_SMAX: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeightFormat {
    /// One decimal height per line.
    PlainHeights,
    /// A first line `base <integer>`, then one decimal offset per line.
    BaseOffset,
}

impl std::str::FromStr for HeightFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" | "plain-heights" => Ok(HeightFormat::PlainHeights),
            "base-offset" => Ok(HeightFormat::BaseOffset),
            _ => Err(Error::Argument(format!("unknown height format {s:?} (plain, base-offset)"))),
        }
    }
}

/// Heights `base + offsets[i]`. The integer base keeps heights near 10²²
/// exact while the offsets stay small enough for f64.
#[derive(Debug, Clone, PartialEq)]
pub struct ZerosDataset {
    pub base: i128,
    pub offsets: Vec<f64>,
    /// Ordinal of the first zero, when the file states it.
    pub start_index: Option<u64>,
}

impl ZerosDataset {
    pub fn count(&self) -> usize {
        self.offsets.len()
    }

    /// Height of zero `i`, rounded to f64.
    pub fn height(&self, i: usize) -> f64 {
        self.base as f64 + self.offsets[i]
    }
}

/// Splits a plain decimal into an integer part and a fraction in [0, 1).
fn parse_decimal(s: &str) -> Option<(i128, f64)> {
    if s.contains(['e', 'E']) {
        let v: f64 = s.parse().ok()?;
        if !v.is_finite() || v.abs() > 1e35 {
            return None;
        }
        let fl = v.floor();
        return Some((fl as i128, v - fl));
    }
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (int_str, frac_str) = body.split_once('.').unwrap_or((body, ""));
    if int_str.is_empty() && frac_str.is_empty() {
        return None;
    }
    if !int_str.bytes().chain(frac_str.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let int: i128 = if int_str.is_empty() { 0 } else { int_str.parse().ok()? };
    let frac: f64 = if frac_str.is_empty() { 0.0 } else { format!("0.{frac_str}").parse().ok()? };
    Some(if !neg {
        (int, frac)
    } else if frac == 0.0 {
        (-int, 0.0)
    } else {
        (-int - 1, 1.0 - frac)
    })
}

/// Streams offsets (relative to `base()`) from a heights file, checking
/// that they increase strictly.
pub struct HeightReader<R> {
    lines: std::io::Lines<R>,
    format: HeightFormat,
    base: Option<i128>,
    start_index: Option<u64>,
    line: usize,
    last: Option<f64>,
}

impl<R: BufRead> HeightReader<R> {
    pub fn new(reader: R, format: HeightFormat) -> Result<Self> {
        let mut r =
            HeightReader { lines: reader.lines(), format, base: None, start_index: None, line: 0, last: None };
        if format == HeightFormat::BaseOffset {
            r.read_header()?;
        }
        Ok(r)
    }

    fn read_header(&mut self) -> Result<()> {
        let Some(text) = self.next_line()? else {
            return Err(Error::Parse { line: 1, detail: "missing \"base <integer>\" header".into() });
        };
        let bad = || Error::Parse { line: self.line, detail: format!("expected \"base <integer>\", got {text:?}") };
        let tokens: Vec<&str> = text.split_whitespace().collect();
        match tokens.as_slice() {
            ["base", b] => self.base = Some(b.parse().map_err(|_| bad())?),
            ["base", b, "start", i] => {
                self.base = Some(b.parse().map_err(|_| bad())?);
                self.start_index = Some(i.parse().map_err(|_| bad())?);
            }
            _ => return Err(bad()),
        }
        Ok(())
    }

    /// Next non-blank line, trimmed.
    fn next_line(&mut self) -> Result<Option<String>> {
        for l in self.lines.by_ref() {
            self.line += 1;
            let l = l?;
            let t = l.trim();
            if !t.is_empty() {
                return Ok(Some(t.to_string()));
            }
        }
        Ok(None)
    }

    /// Known once the header (or the first height) has been read.
    pub fn base(&self) -> Option<i128> {
        self.base
    }

    pub fn start_index(&self) -> Option<u64> {
        self.start_index
    }

    fn next_offset(&mut self) -> Result<Option<f64>> {
        let Some(text) = self.next_line()? else { return Ok(None) };
        let line = self.line;
        let offset = match self.format {
            HeightFormat::PlainHeights => {
                let (int, frac) = parse_decimal(&text)
                    .ok_or_else(|| Error::Parse { line, detail: format!("not a decimal height: {text:?}") })?;
                let base = *self.base.get_or_insert(int);
                (int - base) as f64 + frac
            }
            HeightFormat::BaseOffset => {
                let v: f64 = text
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| Error::Parse { line, detail: format!("not a decimal offset: {text:?}") })?;
                v
            }
        };
        if let Some(prev) = self.last {
            if !(offset > prev) {
                return Err(Error::Data { line, detail: format!("height does not increase ({text} after {prev})") });
            }
        }
        self.last = Some(offset);
        Ok(Some(offset))
    }
}

impl<R: BufRead> Iterator for HeightReader<R> {
    type Item = Result<f64>;
    fn next(&mut self) -> Option<Result<f64>> {
        self.next_offset().transpose()
    }
}

pub fn read_zeros<R: BufRead>(reader: R, format: HeightFormat) -> Result<ZerosDataset> {
    let mut r = HeightReader::new(reader, format)?;
    let offsets = r.by_ref().collect::<Result<Vec<_>>>()?;
    Ok(ZerosDataset { base: r.base().unwrap_or(0), offsets, start_index: r.start_index() })
}

pub fn load_zeros(path: &Path, format: HeightFormat) -> Result<ZerosDataset> {
    read_zeros(BufReader::new(File::open(path)?), format)
}

/// Leading term of the density of zeros at height `e`.
pub fn mean_density(e: f64) -> Result<f64> {
    let floor = 2.0 * PI * E;
    if !(e > floor) {
        return Err(Error::Domain { t: e, lo: floor, hi: f64::INFINITY });
    }
    Ok((e / floor).ln() / (2.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityMode {
    /// One density, taken at the first height.
    Global,
    /// Density re-evaluated at the start of every block of this many zeros.
    LocalBlocks(usize),
}

/// Provenance carried alongside a point sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceMeta {
    pub first_height: f64,
    /// Overall retention probability; 1 for unthinned data.
    pub xi: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedSequence {
    pub points: Vec<f64>,
    pub rho_bar: f64,
    pub source_meta: SourceMeta,
}

/// Maps offsets to unfolded points one at a time.
pub struct Unfolder {
    base: i128,
    mode: DensityMode,
    index: usize,
    anchor_offset: f64,
    anchor_point: f64,
    density: f64,
    first_density: f64,
    first_height: f64,
}

impl Unfolder {
    pub fn new(base: i128, mode: DensityMode) -> Result<Self> {
        if let DensityMode::LocalBlocks(0) = mode {
            return Err(Error::Argument("block length must be positive".into()));
        }
        Ok(Unfolder {
            base,
            mode,
            index: 0,
            anchor_offset: 0.0,
            anchor_point: 0.0,
            density: 0.0,
            first_density: 0.0,
            first_height: 0.0,
        })
    }

    pub fn push(&mut self, offset: f64) -> Result<f64> {
        let new_block = match self.mode {
            DensityMode::Global => self.index == 0,
            DensityMode::LocalBlocks(b) => self.index % b == 0,
        };
        if new_block {
            let height = self.base as f64 + offset;
            let density = mean_density(height)?;
            if self.index == 0 {
                self.first_density = density;
                self.first_height = height;
            } else {
                self.anchor_point += self.density * (offset - self.anchor_offset);
            }
            self.anchor_offset = offset;
            self.density = density;
        }
        self.index += 1;
        Ok(self.anchor_point + self.density * (offset - self.anchor_offset))
    }

    /// Density at the first height (zero before any push).
    pub fn rho_bar(&self) -> f64 {
        self.first_density
    }

    pub fn first_height(&self) -> f64 {
        self.first_height
    }
}

pub fn unfold(ds: &ZerosDataset) -> Result<UnfoldedSequence> {
    unfold_with(ds, DensityMode::Global)
}

/// Rescales heights to unit mean spacing, measured from the first height.
pub fn unfold_with(ds: &ZerosDataset, mode: DensityMode) -> Result<UnfoldedSequence> {
    if ds.count() < 2 {
        return Err(Error::InsufficientData(format!("unfolding needs at least 2 heights, got {}", ds.count())));
    }
    let mut u = Unfolder::new(ds.base, mode)?;
    let points = ds.offsets.iter().map(|&o| u.push(o)).collect::<Result<Vec<_>>>()?;
    Ok(UnfoldedSequence {
        points,
        rho_bar: u.rho_bar(),
        source_meta: SourceMeta { first_height: u.first_height(), xi: 1.0, seed: None },
    })
}

/// Keep/delete decisions keyed by (seed, index), so the outcome for a point
/// does not depend on how the sequence is traversed.
pub struct Thinner {
    xi: f64,
    rng: ChaCha8Rng,
    next_index: u64,
}

impl Thinner {
    pub fn new(xi: ThinningParam, seed: u64) -> Self {
        Thinner { xi: xi.value(), rng: ChaCha8Rng::seed_from_u64(seed), next_index: 0 }
    }

    pub fn keep(&mut self, index: u64) -> bool {
        if self.xi >= 1.0 {
            return true;
        }
        if index != self.next_index {
            // each index owns two 32-bit words of the stream
            self.rng.set_word_pos(2 * index as u128);
        }
        self.next_index = index + 1;
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        u < self.xi
    }
}

pub fn thin(seq: &UnfoldedSequence, xi: ThinningParam, seed: u64) -> UnfoldedSequence {
    let mut t = Thinner::new(xi, seed);
    let points = seq.points.iter().enumerate().filter(|(i, _)| t.keep(*i as u64)).map(|(_, &p)| p).collect();
    UnfoldedSequence {
        points,
        rho_bar: seq.rho_bar,
        source_meta: SourceMeta { xi: seq.source_meta.xi * xi.value(), seed: Some(seed), ..seq.source_meta },
    }
}

/// Histogram normalized by reference count and bin width.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCurve {
    pub bin_edges: Vec<f64>,
    pub values: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_ref: u64,
    /// Set when the estimator's assumptions were not met.
    pub warning: Option<String>,
}

impl EmpiricalCurve {
    fn from_counts(bins: &Bins, counts: Vec<u64>, n_ref: u64, warning: Option<String>) -> Result<Self> {
        if n_ref == 0 {
            return Err(Error::InsufficientData("no reference points".into()));
        }
        let norm = n_ref as f64 * bins.width;
        Ok(EmpiricalCurve {
            bin_edges: (0..=bins.count).map(|i| i as f64 * bins.width).collect(),
            values: counts.iter().map(|&c| c as f64 / norm).collect(),
            counts,
            n_ref,
            warning,
        })
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Counting standard error of each value.
    pub fn stderr(&self) -> Vec<f64> {
        let norm = self.n_ref as f64 * self.bin_width();
        self.counts.iter().map(|&c| (c as f64).sqrt() / norm).collect()
    }

    /// CSV with `#` metadata lines, then `bin_lo,bin_hi,count,value,stderr`.
    pub fn to_csv(&self, meta: &[(&str, String)]) -> String {
        let mut out = String::new();
        for (k, v) in meta {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "# n_ref = {}", self.n_ref);
        let _ = writeln!(out, "# bin_width = {}", self.bin_width());
        if let Some(w) = &self.warning {
            let _ = writeln!(out, "# warning = {w}");
        }
        out.push_str("bin_lo,bin_hi,count,value,stderr\n");
        for (i, (&c, (&v, e))) in self.counts.iter().zip(self.values.iter().zip(self.stderr())).enumerate() {
            let _ = writeln!(out, "{},{},{c},{v:e},{e:e}", self.bin_edges[i], self.bin_edges[i + 1]);
        }
        out
    }

    /// Reads a curve written by `to_csv`, returning it with its metadata.
    pub fn from_csv(text: &str) -> Result<(Self, Vec<(String, String)>)> {
        let mut meta = Vec::new();
        let mut edges = Vec::new();
        let mut counts = Vec::new();
        let mut header_seen = false;
        for (i, l) in text.lines().enumerate() {
            let line = i + 1;
            let l = l.trim();
            if l.is_empty() {
                continue;
            }
            if let Some(m) = l.strip_prefix('#') {
                if let Some((k, v)) = m.split_once('=') {
                    meta.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            if !header_seen {
                if l != "bin_lo,bin_hi,count,value,stderr" {
                    return Err(Error::Parse { line, detail: format!("unexpected header {l:?}") });
                }
                header_seen = true;
                continue;
            }
            let f: Vec<&str> = l.split(',').collect();
            let bad = || Error::Parse { line, detail: format!("malformed row {l:?}") };
            if f.len() != 5 {
                return Err(bad());
            }
            let lo: f64 = f[0].parse().map_err(|_| bad())?;
            let hi: f64 = f[1].parse().map_err(|_| bad())?;
            if edges.is_empty() {
                edges.push(lo);
            } else if edges.last() != Some(&lo) {
                return Err(Error::Data { line, detail: "bins are not contiguous".into() });
            }
            edges.push(hi);
            counts.push(f[2].parse::<u64>().map_err(|_| bad())?);
        }
        let get = |key: &str| meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
        let n_ref: u64 = get("n_ref")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse { line: 0, detail: "missing n_ref metadata".into() })?;
        if counts.is_empty() || n_ref == 0 {
            return Err(Error::InsufficientData("curve file has no bins".into()));
        }
        let width = edges[1] - edges[0];
        let norm = n_ref as f64 * width;
        let curve = EmpiricalCurve {
            values: counts.iter().map(|&c| c as f64 / norm).collect(),
            bin_edges: edges,
            counts,
            n_ref,
            warning: get("warning"),
        };
        meta.retain(|(k, _)| !matches!(k.as_str(), "n_ref" | "bin_width" | "warning"));
        Ok((curve, meta))
    }
}

struct Bins {
    width: f64,
    count: usize,
    s_max: f64,
}

impl Bins {
    fn new(s_max: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && s_max > 0.0 && s_max.is_finite()) {
            return Err(Error::Argument(format!("need positive s_max and bin width, got {s_max} and {width}")));
        }
        let count = (s_max / width).round() as usize;
        if count == 0 || (count as f64 * width - s_max).abs() > 1e-9 * s_max {
            return Err(Error::Argument(format!("bin width {width} does not divide s_max {s_max}")));
        }
        Ok(Bins { width, count, s_max: count as f64 * width })
    }

    fn index(&self, g: f64) -> Option<usize> {
        if g >= 0.0 && g < self.s_max {
            Some(((g / self.width) as usize).min(self.count - 1))
        } else {
            None
        }
    }
}

/// Streaming estimator of the pair density: every point is a reference and
/// its next `window` right-neighbours are histogrammed by distance, after
/// multiplying distances by `scale`.
pub struct TwoPointAccumulator {
    bins: Bins,
    window: usize,
    scale: f64,
    recent: VecDeque<f64>,
    // points within s_max of the newest one; their neighbourhoods may be truncated
    tail: VecDeque<f64>,
    counts: Vec<u64>,
    n_ref: u64,
    first: Option<f64>,
}

impl TwoPointAccumulator {
    pub fn new(s_max: f64, bin_width: f64, window: usize, scale: f64) -> Result<Self> {
        if window == 0 {
            return Err(Error::Argument("window must be at least 1".into()));
        }
        if !(scale > 0.0) {
            return Err(Error::Argument(format!("distance scale must be positive, got {scale}")));
        }
        let bins = Bins::new(s_max, bin_width)?;
        let counts = vec![0; bins.count];
        Ok(TwoPointAccumulator { bins, window, scale, recent: VecDeque::with_capacity(window + 1), tail: VecDeque::new(), counts, n_ref: 0, first: None })
    }

    pub fn push(&mut self, x: f64) {
        for &q in &self.recent {
            if let Some(b) = self.bins.index(self.scale * (x - q)) {
                self.counts[b] += 1;
            }
        }
        self.recent.push_back(x);
        if self.recent.len() > self.window {
            self.recent.pop_front();
        }
        self.tail.push_back(x);
        while self.tail.front().is_some_and(|&p| self.scale * (x - p) >= self.bins.s_max) {
            self.tail.pop_front();
        }
        self.first.get_or_insert(x);
        self.n_ref += 1;
    }

    /// References within `s_max` of the last point saw a truncated
    /// neighbourhood; they are removed before normalizing.
    pub fn finish(mut self) -> Result<EmpiricalCurve> {
        let Some(&last) = self.recent.back() else {
            return Err(Error::InsufficientData("no points".into()));
        };
        let total = self.n_ref;
        let tail: Vec<f64> = self.tail.iter().copied().collect();
        for (i, &p) in tail.iter().enumerate() {
            for &q in tail[i + 1..].iter().take(self.window) {
                if let Some(b) = self.bins.index(self.scale * (q - p)) {
                    self.counts[b] -= 1;
                }
            }
            self.n_ref -= 1;
        }
        let mut warning = None;
        if total >= 2 {
            let mean = self.scale * (last - self.first.unwrap_or(last)) / (total - 1) as f64;
            if !(self.window as f64 * mean > self.bins.s_max) {
                warning = Some(format!(
                    "window {} spans about {:.3} < s_max {}; large-s bins are undercounted",
                    self.window,
                    self.window as f64 * mean,
                    self.bins.s_max
                ));
            }
        }
        EmpiricalCurve::from_counts(&self.bins, self.counts, self.n_ref, warning)
    }
}

/// Streaming histogram of consecutive gaps, each multiplied by `scale`.
/// Gaps beyond `s_max` count towards the normalization.
pub struct SpacingAccumulator {
    bins: Bins,
    scale: f64,
    prev: Option<f64>,
    counts: Vec<u64>,
    n_ref: u64,
}

impl SpacingAccumulator {
    pub fn new(s_max: f64, bin_width: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::Argument(format!("gap scale must be positive, got {scale}")));
        }
        let bins = Bins::new(s_max, bin_width)?;
        let counts = vec![0; bins.count];
        Ok(SpacingAccumulator { bins, scale, prev: None, counts, n_ref: 0 })
    }

    pub fn push(&mut self, x: f64) {
        if let Some(p) = self.prev {
            if let Some(b) = self.bins.index(self.scale * (x - p)) {
                self.counts[b] += 1;
            }
            self.n_ref += 1;
        }
        self.prev = Some(x);
    }

    pub fn finish(self) -> Result<EmpiricalCurve> {
        EmpiricalCurve::from_counts(&self.bins, self.counts, self.n_ref, None)
    }
}

/// Pair density of the sequence measured at unit density: distances are
/// multiplied by the retention probability of a thinned sequence.
pub fn empirical_two_point(
    seq: &UnfoldedSequence,
    s_max: f64,
    bin_width: f64,
    window: usize,
) -> Result<EmpiricalCurve> {
    let mut acc = TwoPointAccumulator::new(s_max, bin_width, window, seq.source_meta.xi)?;
    seq.points.iter().for_each(|&x| acc.push(x));
    acc.finish()
}

/// With `rescale_to_unit_density`, gaps are multiplied by the sequence's
/// retention probability so a thinned sequence is measured at unit density.
pub fn empirical_nn_spacing(
    seq: &UnfoldedSequence,
    s_max: f64,
    bin_width: f64,
    rescale_to_unit_density: bool,
) -> Result<EmpiricalCurve> {
    let scale = if rescale_to_unit_density { seq.source_meta.xi } else { 1.0 };
    let mut acc = SpacingAccumulator::new(s_max, bin_width, scale)?;
    seq.points.iter().for_each(|&x| acc.push(x));
    acc.finish()
}

/// Constants tying the zeros at height `height` to matrices of size `n_eff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    pub lambda: f64,
    pub q_over_lambda: f64,
    pub height: f64,
    pub rho_bar: f64,
    pub alpha: f64,
    pub n_eff: f64,
}

impl TheoryParams {
    pub fn at_height(height: f64) -> Result<Self> {
        let rho_bar = mean_density(height)?;
        let log = (height / (2.0 * PI)).ln();
        Ok(TheoryParams {
            lambda: LAMBDA,
            q_over_lambda: Q_OVER_LAMBDA,
            height,
            rho_bar,
            alpha: 1.0 + Q_OVER_LAMBDA / log,
            n_eff: log / (12.0 * LAMBDA).sqrt(),
        })
    }
}

/// Pair density of unfolded zeros with its 1/ρ̄² term, distances measured
/// in units where the thinned sequence has unit density. Returns
/// `(full, correction_only)`.
pub fn theory_two_point(params: &TheoryParams, xi: ThinningParam, s: f64) -> (f64, f64) {
    let s = s / xi.value();
    let amp = params.lambda / (PI * PI * params.rho_bar * params.rho_bar);
    let correction = -amp * (PI * params.alpha * s).sin().powi(2);
    let sinc = if s == 0.0 { 1.0 } else { (PI * s).sin() / (PI * s) };
    (1.0 - sinc * sinc + correction, correction)
}

/// Spacing density predicted for zeros: the large-N density plus the 1/N²
/// term at N = `n_eff`, the latter evaluated at the stretched distance αs.
/// With `rescaled`, `s` is in units of the thinned sequence's mean spacing.
/// Returns `(full, correction_only)`.
pub fn theory_spacing(
    sigma0: &TranscendentSolution,
    sigma1: &TranscendentSolution,
    params: &TheoryParams,
    xi: ThinningParam,
    rescaled: bool,
    s: f64,
) -> Result<(f64, f64)> {
    let (x, jac) = if rescaled { (s / xi.value(), 1.0 / xi.value()) } else { (s, 1.0) };
    let (leading, _) = spacing::spacing_from_gap(sigma0, sigma1, xi, x)?;
    let (_, corr) = spacing::spacing_from_gap(sigma0, sigma1, xi, params.alpha * x)?;
    let correction = corr / (params.n_eff * params.n_eff);
    Ok((jac * (leading + correction), jac * correction))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub bin_center: f64,
    pub value: f64,
    pub stderr: f64,
    pub theory: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub rows: Vec<ResidualRow>,
    /// Largest |residual|/stderr over bins with a nonzero count.
    pub max_z: f64,
    pub rms: f64,
}

impl ResidualReport {
    pub fn to_csv(&self, meta: &[(&str, String)]) -> String {
        let mut out = String::new();
        for (k, v) in meta {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "# max_abs_residual_over_stderr = {:e}", self.max_z);
        let _ = writeln!(out, "# rms_residual = {:e}", self.rms);
        out.push_str("bin_center,value,stderr,theory,residual\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:e},{:e},{:e},{:e}", r.bin_center, r.value, r.stderr, r.theory, r.residual);
        }
        out
    }
}

/// Per-bin residuals `value − theory` with counting standard errors.
pub fn compare(curve: &EmpiricalCurve, theory: &[f64]) -> Result<ResidualReport> {
    if theory.len() != curve.values.len() {
        return Err(Error::Argument(format!(
            "theory has {} values for {} bins",
            theory.len(),
            curve.values.len()
        )));
    }
    let rows: Vec<ResidualRow> = curve
        .bin_centers()
        .into_iter()
        .zip(curve.values.iter().zip(curve.stderr()))
        .zip(theory)
        .map(|((c, (&v, e)), &t)| ResidualRow { bin_center: c, value: v, stderr: e, theory: t, residual: v - t })
        .collect();
    let max_z = rows.iter().filter(|r| r.stderr > 0.0).map(|r| r.residual.abs() / r.stderr).fold(0.0, f64::max);
    let rms = (rows.iter().map(|r| r.residual * r.residual).sum::<f64>() / rows.len() as f64).sqrt();
    Ok(ResidualReport { rows, max_z, rms })
}

/// Writes a point sequence with its provenance as `#` lines. Values use
/// the shortest representation that reads back bit-exactly.
pub fn write_points<W: Write>(mut w: W, seq: &UnfoldedSequence) -> Result<()> {
    write_points_header(&mut w, seq.rho_bar, &seq.source_meta)?;
    for p in &seq.points {
        writeln!(w, "{p}")?;
    }
    Ok(())
}

pub fn write_points_header<W: Write>(w: &mut W, rho_bar: f64, meta: &SourceMeta) -> Result<()> {
    writeln!(w, "# rho_bar = {rho_bar}")?;
    writeln!(w, "# first_height = {}", meta.first_height)?;
    writeln!(w, "# xi = {}", meta.xi)?;
    match meta.seed {
        Some(s) => writeln!(w, "# seed = {s}")?,
        None => writeln!(w, "# seed = none")?,
    }
    Ok(())
}

/// Streams points from a file written by `write_points`.
pub struct PointReader<R> {
    lines: std::io::Lines<R>,
    line: usize,
    pending: Option<(usize, String)>,
    last: Option<f64>,
    pub rho_bar: f64,
    pub source_meta: SourceMeta,
}

impl<R: BufRead> PointReader<R> {
    pub fn new(reader: R) -> Result<Self> {
        let mut r = PointReader {
            lines: reader.lines(),
            line: 0,
            pending: None,
            last: None,
            rho_bar: f64::NAN,
            source_meta: SourceMeta { first_height: f64::NAN, xi: 1.0, seed: None },
        };
        for l in r.lines.by_ref() {
            r.line += 1;
            let l = l?;
            let t = l.trim();
            if t.is_empty() {
                continue;
            }
            let Some(m) = t.strip_prefix('#') else {
                r.pending = Some((r.line, t.to_string()));
                break;
            };
            let Some((k, v)) = m.split_once('=') else { continue };
            let (k, v) = (k.trim(), v.trim());
            let bad = |line| Error::Parse { line, detail: format!("bad value for {k}: {v:?}") };
            match k {
                "rho_bar" => r.rho_bar = v.parse().map_err(|_| bad(r.line))?,
                "first_height" => r.source_meta.first_height = v.parse().map_err(|_| bad(r.line))?,
                "xi" => r.source_meta.xi = v.parse().map_err(|_| bad(r.line))?,
                "seed" if v == "none" => r.source_meta.seed = None,
                "seed" => r.source_meta.seed = Some(v.parse().map_err(|_| bad(r.line))?),
                _ => {}
            }
        }
        if !r.rho_bar.is_finite() {
            return Err(Error::Parse { line: r.line, detail: "missing rho_bar metadata".into() });
        }
        Ok(r)
    }

    fn next_point(&mut self) -> Result<Option<f64>> {
        let (line, text) = match self.pending.take() {
            Some(p) => p,
            None => loop {
                let Some(l) = self.lines.next() else { return Ok(None) };
                self.line += 1;
                let l = l?;
                let t = l.trim();
                if !t.is_empty() && !t.starts_with('#') {
                    break (self.line, t.to_string());
                }
            },
        };
        let v: f64 = text
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::Parse { line, detail: format!("not a number: {text:?}") })?;
        if let Some(prev) = self.last {
            if !(v > prev) {
                return Err(Error::Data { line, detail: format!("points do not increase ({v} after {prev})") });
            }
        }
        self.last = Some(v);
        Ok(Some(v))
    }
}

impl<R: BufRead> Iterator for PointReader<R> {
    type Item = Result<f64>;
    fn next(&mut self) -> Option<Result<f64>> {
        self.next_point().transpose()
    }
}

pub fn read_points<R: BufRead>(reader: R) -> Result<UnfoldedSequence> {
    let mut r = PointReader::new(reader)?;
    let points = r.by_ref().collect::<Result<Vec<_>>>()?;
    Ok(UnfoldedSequence { points, rho_bar: r.rho_bar, source_meta: r.source_meta })
}
