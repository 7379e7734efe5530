use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rmtgap::fredholm::{self, KernelSpec};
use rmtgap::painleve::{self, SolveOptions, ThinningParam, TranscendentKind, TranscendentSolution};
use rmtgap::spacing::{self, SpacingCurve};
use rmtgap::zeros::{self, DensityMode, EmpiricalCurve, HeightFormat, HeightReader, PointReader, SourceMeta};

use crate::config::Config;
use crate::{
    classify, CliError, DetArgs, ExtrapolateArgs, SolveArgs, SpacingArgs, ZerosCommand,
};

/// Cross-path disagreement above which `spacing --path both` fails.
const CONSISTENCY_GATE: f64 = 1e-5;

type Meta = Vec<(&'static str, String)>;

fn num<T>(r: rmtgap::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| classify(e, false))
}

fn data<T>(r: rmtgap::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| classify(e, true))
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError { code: 3, message: format!("{}: {e}", path.display()) }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn header(meta: &Meta) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out
}

fn thinning(xi: f64) -> Result<ThinningParam, CliError> {
    num(ThinningParam::new(xi))
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn solve_kind(
    kind: TranscendentKind,
    xi: ThinningParam,
    opts: &SolveOptions,
    base: Option<TranscendentSolution>,
) -> Result<TranscendentSolution, CliError> {
    match kind.base() {
        None => num(match kind {
            TranscendentKind::Sigma0 => painleve::solve_sigma0(xi, opts),
            _ => painleve::solve_u0(xi, opts),
        }),
        Some(base_kind) => {
            let base = match base {
                Some(b) => b,
                None => solve_kind(base_kind, xi, opts, None)?,
            };
            num(painleve::solve_linear_correction(kind, &base, xi, opts))
        }
    }
}

/// Solves σ0 and σ1 far enough to cover spacings up to `s_top`.
fn gap_pair(xi: ThinningParam, s_top: f64, degree: usize) -> Result<(TranscendentSolution, TranscendentSolution), CliError> {
    let opts = SolveOptions { s_max: PI * s_top * (1.0 + 1e-9), degree, ..Default::default() };
    let s0 = solve_kind(TranscendentKind::Sigma0, xi, &opts, None)?;
    let s1 = solve_kind(TranscendentKind::Sigma1, xi, &opts, Some(s0.clone()))?;
    Ok((s0, s1))
}

pub fn solve(a: SolveArgs, cfg: &Config) -> Result<(), CliError> {
    let kind: TranscendentKind = num(a.kind.parse())?;
    let xi = cfg.or(a.xi, "xi", 1.0)?;
    let s_max = cfg.or(a.smax, "smax", 20.0)?;
    let degree = cfg.or(a.degree, "degree", 35)?;
    let samples = cfg.or(a.samples, "samples", 400usize)?;
    let out: PathBuf = cfg.required(a.out, "out")?;
    let base_path: Option<PathBuf> = cfg.pick(a.base, "base")?;
    if samples == 0 {
        return Err(CliError::argument("--samples must be positive"));
    }
    let x = thinning(xi)?;
    let opts = SolveOptions { s_max, degree, ..Default::default() };
    let base = match &base_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            Some(data(TranscendentSolution::from_json(&text))?)
        }
        None => None,
    };
    let sol = solve_kind(kind, x, &opts, base)?;

    write_file(&with_suffix(&out, "json"), &sol.to_json())?;
    let mut meta: Meta = vec![
        ("command", "solve".into()),
        ("kind", a.kind.to_ascii_lowercase()),
        ("xi", xi.to_string()),
        ("smax", s_max.to_string()),
        ("degree", degree.to_string()),
        ("samples", samples.to_string()),
    ];
    if let Some(p) = &base_path {
        meta.push(("base", p.display().to_string()));
    }
    meta.push(("residual_sup", format!("{:e}", sol.residual_sup)));
    let mut csv = header(&meta);
    csv.push_str("s,value,derivative\n");
    for i in 0..=samples {
        let t = s_max * i as f64 / samples as f64;
        let _ = writeln!(csv, "{t},{:e},{:e}", num(sol.eval(t, 0))?, num(sol.eval(t, 1))?);
    }
    write_file(&with_suffix(&out, "csv"), &csv)?;
    println!("residual_sup = {:e}", sol.residual_sup);
    Ok(())
}

pub fn spacing(a: SpacingArgs, cfg: &Config) -> Result<(), CliError> {
    let xi = cfg.or(a.xi, "xi", 1.0)?;
    let step = cfg.or(a.grid, "grid", 0.05)?;
    let top = cfg.or(a.smax, "smax", 6.0)?;
    let degree = cfg.or(a.degree, "degree", 35)?;
    let path = cfg.or(a.path, "path", "sigma".to_string())?;
    let out: PathBuf = cfg.required(a.out, "out")?;
    if !(step > 0.0 && top > 0.0) {
        return Err(CliError::argument("--grid and --smax must be positive"));
    }
    let x = thinning(xi)?;
    let grid = spacing::uniform_grid(top, step);
    let last = *grid.last().expect("grid contains 0");

    let sigma_curve = || -> Result<SpacingCurve, CliError> {
        let (s0, s1) = gap_pair(x, last, degree)?;
        num(SpacingCurve::from_gap(&s0, &s1, &grid))
    };
    let u_curve = || -> Result<SpacingCurve, CliError> {
        let opts = SolveOptions { s_max: 2.0 * PI * last * (1.0 + 1e-9), degree, ..Default::default() };
        let u0 = solve_kind(TranscendentKind::U0, x, &opts, None)?;
        let u1 = solve_kind(TranscendentKind::U1, x, &opts, Some(u0.clone()))?;
        num(SpacingCurve::from_u(&u0, &u1, &grid))
    };

    let mut meta: Meta = vec![
        ("command", "spacing".into()),
        ("xi", xi.to_string()),
        ("grid", step.to_string()),
        ("smax", top.to_string()),
        ("degree", degree.to_string()),
        ("path", path.clone()),
    ];
    let (curve, discrepancy) = match path.as_str() {
        "sigma" => (sigma_curve()?, None),
        "u" => (u_curve()?, None),
        "both" => {
            let s = sigma_curve()?;
            let u = u_curve()?;
            let d = s
                .leading
                .iter()
                .zip(&u.leading)
                .chain(s.correction.iter().zip(&u.correction))
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            meta.push(("max_discrepancy", format!("{d:e}")));
            (s, Some(d))
        }
        other => return Err(CliError::argument(format!("--path must be sigma, u or both, got {other:?}"))),
    };
    write_file(&out, &(header(&meta) + &curve.to_csv()))?;
    if let Some(d) = discrepancy {
        println!("max_discrepancy = {d:e}");
        if !(d <= CONSISTENCY_GATE) {
            return Err(CliError {
                code: 4,
                message: format!("sigma and u paths disagree by {d:e} (gate {CONSISTENCY_GATE:e})"),
            });
        }
    }
    Ok(())
}

pub fn det(a: DetArgs, cfg: &Config) -> Result<(), CliError> {
    let kernel = cfg.or(a.kernel, "kernel", "sine".to_string())?;
    let xi = cfg.or(a.xi, "xi", 1.0)?;
    let s: f64 = cfg.required(a.s, "s")?;
    let m = cfg.or(a.m, "m", fredholm::DEFAULT_ORDER)?;
    let x = thinning(xi)?;
    let spec = match kernel.as_str() {
        "sine" => KernelSpec::sine(x),
        "finite" => num(KernelSpec::finite(cfg.required(a.n, "n")?, x))?,
        other => return Err(CliError::argument(format!("--kernel must be sine or finite, got {other:?}"))),
    };
    let r = num(fredholm::nystrom_det(&spec, s, m))?;
    println!("value = {}", r.value);
    println!("order_used = {}", r.order_used);
    println!("est_error = {:e}", r.est_error);
    if kernel == "sine" {
        let trace = num(fredholm::resolvent_trace_correction(x, s, m))?;
        println!("correction = {}", -xi * r.value * trace);
    }
    Ok(())
}

/// `count` integers spread evenly over `[from, to]`.
fn sizes(from: u32, to: u32, count: usize) -> Result<Vec<u32>, CliError> {
    if count < 3 {
        return Err(CliError::argument(format!("--count must be at least 3, got {count}")));
    }
    if from < 2 || to <= from || (to - from + 1) < count as u32 {
        return Err(CliError::argument(format!("cannot place {count} distinct sizes in [{from}, {to}]")));
    }
    let span = (to - from) as f64;
    Ok((0..count).map(|i| from + (span * i as f64 / (count - 1) as f64).round() as u32).collect())
}

pub fn extrapolate(a: ExtrapolateArgs, cfg: &Config) -> Result<(), CliError> {
    let from = cfg.or(a.n_from, "n-from", 100)?;
    let to = cfg.or(a.n_to, "n-to", 138)?;
    let count = cfg.or(a.count, "count", 20)?;
    let xi = cfg.or(a.xi, "xi", 1.0)?;
    let step = cfg.or(a.grid, "grid", 0.1)?;
    let top = cfg.or(a.smax, "smax", 3.0)?;
    let out: PathBuf = cfg.required(a.out, "out")?;
    let ns = sizes(from, to, count)?;
    if !(step > 0.0 && top > 0.0) {
        return Err(CliError::argument("--grid and --smax must be positive"));
    }
    let x = thinning(xi)?;
    let grid = spacing::uniform_grid(top, step);
    let fit = num(SpacingCurve::from_finite_n(x, &grid, &ns))?;
    let (s0, s1) = gap_pair(x, *grid.last().expect("grid contains 0"), 35)?;

    let meta: Meta = vec![
        ("command", "extrapolate".into()),
        ("n-from", from.to_string()),
        ("n-to", to.to_string()),
        ("count", count.to_string()),
        ("sizes", ns.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")),
        ("xi", xi.to_string()),
        ("grid", step.to_string()),
        ("smax", top.to_string()),
    ];
    let mut csv = header(&meta);
    csv.push_str("s,limit,c2,painleve_leading,painleve_correction\n");
    let (mut worst_limit, mut worst_c2) = (0.0f64, 0.0f64);
    for (i, &s) in grid.iter().enumerate() {
        let (lead, corr) = num(spacing::spacing_from_gap(&s0, &s1, x, s))?;
        worst_limit = worst_limit.max((fit.leading[i] - lead).abs());
        worst_c2 = worst_c2.max((fit.correction[i] - corr).abs());
        let _ = writeln!(csv, "{s},{:e},{:e},{lead:e},{corr:e}", fit.leading[i], fit.correction[i]);
    }
    write_file(&out, &csv)?;
    println!("max_limit_difference = {worst_limit:e}");
    println!("max_c2_difference = {worst_c2:e}");
    Ok(())
}

pub fn zeros(cmd: ZerosCommand, cfg: &Config) -> Result<(), CliError> {
    match cmd {
        ZerosCommand::Unfold(a) => {
            let input: PathBuf = cfg.required(a.input, "input")?;
            let format = cfg.or(a.format, "format", "plain".to_string())?;
            let block: Option<usize> = cfg.pick(a.block, "block")?;
            let out: PathBuf = cfg.required(a.out, "out")?;
            let fmt: HeightFormat = num(format.parse())?;
            let mode = block.map_or(DensityMode::Global, DensityMode::LocalBlocks);

            let mut reader = data(HeightReader::new(open(&input)?, fmt))?;
            let Some(first) = reader.next() else {
                return Err(classify(rmtgap::Error::InsufficientData("no heights in input".into()), true));
            };
            let first = data(first)?;
            let mut unfolder = num(zeros::Unfolder::new(reader.base().unwrap_or(0), mode))?;
            let p0 = data(unfolder.push(first))?;
            let mut w = create(&out)?;
            let meta: Meta = vec![
                ("command", "zeros unfold".into()),
                ("input", input.display().to_string()),
                ("format", format),
                ("block", block.map_or("none".into(), |b| b.to_string())),
            ];
            let io = |e| io_err(&out, e);
            w.write_all(header(&meta).as_bytes()).map_err(io)?;
            let source = SourceMeta { first_height: unfolder.first_height(), xi: 1.0, seed: None };
            data(zeros::write_points_header(&mut w, unfolder.rho_bar(), &source))?;
            writeln!(w, "{p0}").map_err(io)?;
            let mut n = 1usize;
            for off in reader {
                let p = data(unfolder.push(data(off)?))?;
                writeln!(w, "{p}").map_err(io)?;
                n += 1;
            }
            w.flush().map_err(io)?;
            if n < 2 {
                return Err(classify(rmtgap::Error::InsufficientData("unfolding needs at least 2 heights".into()), true));
            }
            println!("points = {n}");
            println!("rho_bar = {}", unfolder.rho_bar());
            Ok(())
        }
        ZerosCommand::Thin(a) => {
            let input: PathBuf = cfg.required(a.input, "input")?;
            let xi: f64 = cfg.required(a.xi, "xi")?;
            let seed: u64 = cfg
                .pick(a.seed, "seed")?
                .ok_or_else(|| CliError::argument("--seed is required for thinning"))?;
            let out: PathBuf = cfg.required(a.out, "out")?;
            let x = thinning(xi)?;
            let mut reader = data(PointReader::new(open(&input)?))?;
            let mut thinner = zeros::Thinner::new(x, seed);
            let mut w = create(&out)?;
            let io = |e| io_err(&out, e);
            let meta: Meta = vec![
                ("command", "zeros thin".into()),
                ("input", input.display().to_string()),
                ("thin-xi", xi.to_string()),
            ];
            w.write_all(header(&meta).as_bytes()).map_err(io)?;
            let source = SourceMeta { xi: reader.source_meta.xi * xi, seed: Some(seed), ..reader.source_meta };
            data(zeros::write_points_header(&mut w, reader.rho_bar, &source))?;
            let (mut kept, mut total) = (0u64, 0u64);
            for (i, p) in reader.by_ref().enumerate() {
                let p = data(p)?;
                total += 1;
                if thinner.keep(i as u64) {
                    writeln!(w, "{p}").map_err(io)?;
                    kept += 1;
                }
            }
            w.flush().map_err(io)?;
            println!("kept = {kept} of {total}");
            Ok(())
        }
        ZerosCommand::Twopoint(a) => {
            let input: PathBuf = cfg.required(a.input, "input")?;
            let s_max = cfg.or(a.smax, "smax", zeros::DEFAULT_TWO_POINT_SMAX)?;
            let bw = cfg.or(a.bin_width, "bin-width", zeros::DEFAULT_TWO_POINT_BIN)?;
            let window = cfg.or(a.window, "window", zeros::DEFAULT_WINDOW)?;
            let out: PathBuf = cfg.required(a.out, "out")?;
            let mut reader = data(PointReader::new(open(&input)?))?;
            let mut acc = num(zeros::TwoPointAccumulator::new(s_max, bw, window, reader.source_meta.xi))?;
            for p in reader.by_ref() {
                acc.push(data(p)?);
            }
            let curve = data(acc.finish())?;
            if let Some(w) = &curve.warning {
                eprintln!("rmtgap: warning: {w}");
            }
            let mut meta = point_meta(&input, "twopoint", &reader.source_meta, reader.rho_bar);
            meta.push(("window", window.to_string()));
            meta.push(("smax", s_max.to_string()));
            write_file(&out, &curve.to_csv(&meta))
        }
        ZerosCommand::Nnspacing(a) => {
            let input: PathBuf = cfg.required(a.input, "input")?;
            let s_max = cfg.or(a.smax, "smax", zeros::DEFAULT_SPACING_SMAX)?;
            let bw = cfg.or(a.bin_width, "bin-width", zeros::DEFAULT_SPACING_BIN)?;
            let rescale = cfg.flag(a.rescale, "rescale")?;
            let out: PathBuf = cfg.required(a.out, "out")?;
            let mut reader = data(PointReader::new(open(&input)?))?;
            let scale = if rescale { reader.source_meta.xi } else { 1.0 };
            let mut acc = num(zeros::SpacingAccumulator::new(s_max, bw, scale))?;
            for p in reader.by_ref() {
                acc.push(data(p)?);
            }
            let curve = data(acc.finish())?;
            let mut meta = point_meta(&input, "nnspacing", &reader.source_meta, reader.rho_bar);
            meta.push(("rescaled", rescale.to_string()));
            meta.push(("smax", s_max.to_string()));
            write_file(&out, &curve.to_csv(&meta))
        }
        ZerosCommand::Compare(a) => compare(a, cfg),
    }
}

fn point_meta(input: &Path, statistic: &str, source: &SourceMeta, rho_bar: f64) -> Meta {
    vec![
        ("statistic", statistic.to_string()),
        ("input", input.display().to_string()),
        ("xi", source.xi.to_string()),
        ("seed", source.seed.map_or("none".into(), |s| s.to_string())),
        ("rho_bar", rho_bar.to_string()),
        ("first_height", source.first_height.to_string()),
    ]
}

fn compare(a: crate::CompareArgs, cfg: &Config) -> Result<(), CliError> {
    let input: PathBuf = cfg.required(a.input, "input")?;
    let out: PathBuf = cfg.required(a.out, "out")?;
    let text = std::fs::read_to_string(&input).map_err(|e| io_err(&input, e))?;
    let (curve, meta_in) = data(EmpiricalCurve::from_csv(&text))?;
    let get = |k: &str| meta_in.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone());
    let parse_meta = |k: &str| -> Result<f64, CliError> {
        get(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CliError { code: 3, message: format!("curve file lacks numeric {k} metadata") })
    };
    let statistic = get("statistic").unwrap_or_default();
    let default_theory = if statistic == "nnspacing" { "spacing" } else { "twopoint" };
    let theory_kind = cfg.or(a.theory, "theory", default_theory.to_string())?;
    let height = match cfg.pick(a.height, "height")? {
        Some(h) => h,
        None => parse_meta("first_height")?,
    };
    let xi = parse_meta("xi")?;
    let x = data(ThinningParam::new(xi))?;
    let params = data(zeros::TheoryParams::at_height(height))?;
    let centers = curve.bin_centers();

    let (curve, theory) = match theory_kind.as_str() {
        "twopoint" => (curve, centers.iter().map(|&s| zeros::theory_two_point(&params, x, s).0).collect()),
        "twopoint-correction" => {
            // subtract the large-N pair density; counts, hence errors, are unchanged
            let mut c = curve;
            for (v, &s) in c.values.iter_mut().zip(&centers) {
                let (full, corr) = zeros::theory_two_point(&params, x, s);
                *v -= full - corr;
            }
            let theory = centers.iter().map(|&s| zeros::theory_two_point(&params, x, s).1).collect();
            (c, theory)
        }
        "spacing" => {
            let rescaled = get("rescaled").as_deref() == Some("true");
            let top = centers.last().copied().unwrap_or(0.0) / if rescaled { xi } else { 1.0 };
            let (s0, s1) = gap_pair(x, params.alpha * top, 35)?;
            let theory = centers
                .iter()
                .map(|&s| num(zeros::theory_spacing(&s0, &s1, &params, x, rescaled, s)).map(|t| t.0))
                .collect::<Result<Vec<_>, _>>()?;
            (curve, theory)
        }
        other => {
            return Err(CliError::argument(format!(
                "--theory must be twopoint, twopoint-correction or spacing, got {other:?}"
            )))
        }
    };
    let report = num(zeros::compare(&curve, &theory))?;
    let meta: Meta = vec![
        ("command", "zeros compare".into()),
        ("input", input.display().to_string()),
        ("theory", theory_kind),
        ("height", height.to_string()),
        ("xi", xi.to_string()),
        ("seed", get("seed").unwrap_or_else(|| "none".into())),
        ("rho_bar", params.rho_bar.to_string()),
        ("alpha", params.alpha.to_string()),
        ("N_eff", params.n_eff.to_string()),
        ("window", get("window").unwrap_or_else(|| "none".into())),
        ("bin_width", curve.bin_width().to_string()),
    ];
    write_file(&out, &report.to_csv(&meta))?;
    println!("max_abs_residual_over_stderr = {}", report.max_z);
    println!("rms_residual = {:e}", report.rms);
    Ok(())
}
