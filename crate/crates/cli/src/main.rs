//! `jacspec`: command-line front end.
//!
//! Every command reads a JSON spec, runs one operation and writes CSV or
//! JSON to stdout (or `--out`). Exit codes: 0 success, 2 spec errors,
//! 3 inconclusive classification, 1 anything else.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use jacspec::classifier::{classify, lambda_blended, lambda_critical, ClassifyOptions, Interval, Route};
use jacspec::levinson::yafaev_asymptotics;
use jacspec::model::{KmSpec, PeriodicSeq};
use jacspec::section::TridiagonalSection;
use jacspec::stolz::class_diagnostic;
use jacspec::transfer::{km_r, km_r_even_closed, window_product, PeriodicModel};
use jacspec::{Error, JacobiSpec, Mat2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "jacspec", version, about = "Spectral toolkit for unbounded Jacobi matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Route the spec to the applicable theorem and report the verdicts.
    Classify(Common),
    /// Intervals of Λ (blended or critical modulated specs).
    Lambda(Common),
    /// Eigenvalues of a finite section in a range.
    Eigs(Common),
    /// Asymptotic basis u± at a complex point.
    Asymptotics(Common),
    /// Bounded-variation diagnostics of standard sequences of the spec.
    Stolz(Common),
    /// Limit matrices ℛ_i of a km spec and the even-N closed form.
    KmClosedForms(Common),
    /// Residuals of the defining limits at probe indices.
    Validate(Common),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Args)]
struct Common {
    /// JSON spec file.
    #[arg(long)]
    spec: PathBuf,
    /// Tolerance (root refinement, bisection).
    #[arg(long)]
    tol: Option<f64>,
    /// Section size, or the last reported index for asymptotics.
    #[arg(long)]
    size: Option<usize>,
    /// Range as LO,HI.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair)]
    range: Option<(f64, f64)>,
    /// Number of grid points.
    #[arg(long)]
    grid: Option<usize>,
    /// Number of generated entries used by probes.
    #[arg(long)]
    probe: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Seed for randomized demos.
    #[arg(long)]
    seed: Option<u64>,
    /// Complex point as RE,IM.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair)]
    z: Option<(f64, f64)>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got `{s}`"))?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok((p(a)?, p(b)?))
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let err = e.into();
        let code = match err.downcast_ref::<Error>() {
            Some(Error::Parse(_) | Error::Spec { .. } | Error::Generation { .. }) => 2,
            _ => 1,
        };
        Failure { code, err }
    }
}

fn spec_failure(err: anyhow::Error) -> Failure {
    Failure { code: 2, err }
}

fn load(c: &Common) -> Result<JacobiSpec, Failure> {
    let text = std::fs::read_to_string(&c.spec)
        .with_context(|| format!("reading {}", c.spec.display()))
        .map_err(spec_failure)?;
    JacobiSpec::from_json(&text)
        .map_err(|e| spec_failure(anyhow!(e).context(format!("in {}", c.spec.display()))))
}

fn emit(c: &Common, body: &str) -> anyhow::Result<()> {
    match &c.out {
        Some(p) => std::fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

/// Round to the number of decimals implied by `tol`, trimming zeros.
fn rounded(x: f64, tol: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let d = (-tol.log10()).ceil().clamp(0.0, 17.0) as usize;
    let mut s = format!("{x:.d$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Classify(c) => cmd_classify(&c),
        Command::Lambda(c) => cmd_lambda(&c).map(|_| 0),
        Command::Eigs(c) => cmd_eigs(&c).map(|_| 0),
        Command::Asymptotics(c) => cmd_asymptotics(&c).map(|_| 0),
        Command::Stolz(c) => cmd_stolz(&c).map(|_| 0),
        Command::KmClosedForms(c) => cmd_km(&c).map(|_| 0),
        Command::Validate(c) => cmd_validate(&c),
    }
}

fn options(c: &Common) -> ClassifyOptions {
    let d = ClassifyOptions::default();
    ClassifyOptions {
        probe: c.probe.unwrap_or(d.probe),
        tol: c.tol.unwrap_or(d.tol),
    }
}

fn cmd_classify(c: &Common) -> Result<u8, Failure> {
    let spec = load(c)?;
    let rep = classify(&spec, options(c))?;
    let body = match c.format.unwrap_or(Format::Json) {
        Format::Json => json(&rep),
        Format::Text => rep.to_text(),
        Format::Csv => {
            let lam: Vec<String> = rep.lambda.iter().map(|i| i.to_string()).collect();
            format!(
                "route,self_adjoint,lambda\n{},{},\"{}\"\n",
                rep.route,
                serde_json::to_value(rep.self_adjoint)?.as_str().unwrap_or_default(),
                lam.join(" U ")
            )
        }
    };
    emit(c, &body)?;
    Ok(if rep.route == Route::Inconclusive { 3 } else { 0 })
}

#[derive(Serialize)]
struct LambdaOut<'a> {
    kind: &'a str,
    discr_poly: Vec<f64>,
    intervals: Vec<Interval>,
}

fn cmd_lambda(c: &Common) -> Result<(), Failure> {
    let spec = load(c)?;
    let tol = c.tol.unwrap_or(1e-10);
    let (kind, poly, intervals) = match &spec {
        JacobiSpec::Blended(_) => {
            let l = lambda_blended(&spec, tol)?;
            ("discr X_1(x)", l.discr_poly, l.intervals)
        }
        JacobiSpec::Modulated(_) => {
            let l = lambda_critical(&spec, options(c).probe)?;
            ("discr R_0(x)", l.discr_coeffs.to_vec(), l.intervals)
        }
        other => return Err(anyhow!("lambda needs a blended or modulated spec, got {}", other.variant_name()).into()),
    };
    if let Some(n) = c.grid {
        // sampled discriminant for plotting
        let (lo, hi) = c.range.unwrap_or((-3.0, 3.0));
        let n = n.max(2);
        let mut s = String::from("x,discr\n");
        for k in 0..n {
            let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let v = poly.iter().rev().fold(0.0, |acc, c| acc * x + c);
            writeln!(s, "{x},{v}").unwrap();
        }
        emit(c, &s)?;
        return Ok(());
    }
    let body = match c.format.unwrap_or(Format::Csv) {
        Format::Json => json(&LambdaOut {
            kind,
            discr_poly: poly,
            intervals,
        }),
        _ => {
            let mut s = String::from("interval_lo,interval_hi\n");
            for iv in &intervals {
                writeln!(s, "{},{}", rounded(iv.lo, tol), rounded(iv.hi, tol)).unwrap();
            }
            s
        }
    };
    emit(c, &body)?;
    Ok(())
}

#[derive(Serialize)]
struct EigRow {
    index: usize,
    eigenvalue: f64,
}

fn cmd_eigs(c: &Common) -> Result<(), Failure> {
    let spec = load(c)?;
    let n = c.size.ok_or_else(|| anyhow!("--size is required"))?;
    let t = TridiagonalSection::from_spec(&spec, n)?;
    let (glo, ghi) = t.gershgorin();
    let (lo, hi) = c.range.unwrap_or((glo, ghi));
    let tol = c.tol.unwrap_or_else(|| t.default_tol());
    let eigs = t.eigs_in(lo, hi, tol)?;
    let first = t.sturm_count(lo.max(glo - tol));
    let rows: Vec<EigRow> = eigs
        .iter()
        .enumerate()
        .map(|(j, &e)| EigRow {
            index: first + j,
            eigenvalue: e,
        })
        .collect();
    let body = match c.format.unwrap_or(Format::Csv) {
        Format::Json => json(&rows),
        _ => {
            let mut s = String::from("index,eigenvalue\n");
            for r in &rows {
                writeln!(s, "{},{:.17e}", r.index, r.eigenvalue).unwrap();
            }
            s
        }
    };
    emit(c, &body)?;
    Ok(())
}

fn cmd_asymptotics(c: &Common) -> Result<(), Failure> {
    let spec = load(c)?;
    let (re, im) = c.z.unwrap_or((1.0, 1.0));
    let n_max = c.size.unwrap_or(10_000);
    let probe = c.probe.unwrap_or(4 * n_max).max(n_max + 2);
    let (a, b) = spec.build(probe)?;
    let rep = yafaev_asymptotics(&a, &b, Complex64::new(re, im), n_max)?;
    let body = match c.format.unwrap_or(Format::Csv) {
        Format::Json => json(&rep),
        _ => {
            let mut s = String::from("n,abs_u_plus,abs_u_minus,eps_plus,eps_minus,residual_plus,residual_minus\n");
            for n in 1..n_max {
                writeln!(
                    s,
                    "{n},{:e},{:e},{:e},{:e},{:e},{:e}",
                    rep.u_plus[n].norm(),
                    rep.u_minus[n].norm(),
                    rep.eps_plus[n - 1],
                    rep.eps_minus[n - 1],
                    rep.residual_plus[n - 1],
                    rep.residual_minus[n - 1]
                )
                .unwrap();
            }
            s
        }
    };
    emit(c, &body)?;
    Ok(())
}

#[derive(Serialize)]
struct StolzRow {
    sequence: String,
    diagnostic: jacspec::stolz::StolzDiagnostic,
}

fn cmd_stolz(c: &Common) -> Result<(), Failure> {
    let spec = load(c)?;
    let probe = c.probe.unwrap_or(1 << 16);
    let (a, b) = spec.build(probe)?;
    let mut rows = Vec::new();
    let ratio: Vec<f64> = (1..a.len()).map(|n| a[n - 1] / a[n]).collect();
    let bq: Vec<f64> = (1..a.len()).map(|n| b[n] / a[n]).collect();
    let inv: Vec<f64> = a.iter().map(|v| 1.0 / v).collect();
    for (name, x) in [("a_{n-1}/a_n", ratio), ("b_n/a_n", bq), ("1/a_n", inv)] {
        rows.push(StolzRow {
            sequence: name.into(),
            diagnostic: class_diagnostic(&x, 1, 0, usize::MAX)?,
        });
    }
    let w = spec.window_len();
    if spec.periodic().is_some() {
        let start = if matches!(spec, JacobiSpec::Blended(_)) { 1 } else { 0 };
        let xs: Vec<Mat2<f64>> = (1..)
            .map(|k| k * w + start)
            .take_while(|s| s + w <= a.len())
            .map(|s| window_product(&a, &b, s, w, 0.0))
            .collect::<jacspec::Result<_>>()?;
        rows.push(StolzRow {
            sequence: format!("X_{{n{w}+{start}}}(0)"),
            diagnostic: class_diagnostic(&xs, 1, 0, usize::MAX)?,
        });
    }
    let body = match c.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut s = String::from("sequence,order,exponent,fitted_ratio,verdict\n");
            for r in &rows {
                for o in &r.diagnostic.orders {
                    writeln!(
                        s,
                        "\"{}\",{},{},{},{:?}",
                        r.sequence,
                        o.order,
                        o.exponent,
                        o.fitted_ratio.map(|v| v.to_string()).unwrap_or_default(),
                        o.verdict
                    )
                    .unwrap();
                }
            }
            s
        }
        _ => json(&rows),
    };
    emit(c, &body)?;
    Ok(())
}

#[derive(Serialize)]
struct KmRow {
    i: usize,
    r: Mat2<f64>,
    trace: f64,
    discr: f64,
}

#[derive(Serialize)]
struct KmOut {
    sigma: f64,
    frak_f: Vec<f64>,
    frak_f_exact: bool,
    rows: Vec<KmRow>,
    /// `−κ + √(discr ℛ_0)/N` when `discr ℛ_0 > 0`.
    threshold_exponent: Option<f64>,
    even_closed_form: Option<(f64, f64)>,
}

#[derive(Serialize)]
struct DemoRow {
    trial: usize,
    alpha: Vec<f64>,
    frak_f: Vec<f64>,
    trace_sum: f64,
    trace_closed: f64,
    discr_sum: f64,
    discr_closed: f64,
}

fn cmd_km(c: &Common) -> Result<(), Failure> {
    let spec = load(c)?;
    let JacobiSpec::Km(km) = &spec else {
        return Err(anyhow!("km-closed-forms needs a km spec, got {}", spec.variant_name()).into());
    };
    if let Some(seed) = c.seed {
        return km_demo(c, km, seed);
    }
    let model = PeriodicModel::of(&spec)?;
    let sigma = model.critical_sigma()?;
    let (frak, exact) = km.frak_f()?;
    let rows: Vec<KmRow> = (0..km.period)
        .map(|i| {
            let r = km_r(&model, &frak, km.kappa, i as i64)?;
            Ok(KmRow {
                i,
                r,
                trace: r.tr(),
                discr: r.discr(),
            })
        })
        .collect::<jacspec::Result<_>>()?;
    let d0 = rows[0].discr;
    let out = KmOut {
        sigma,
        frak_f: frak.values().to_vec(),
        frak_f_exact: exact,
        threshold_exponent: (d0 > 0.0).then(|| -km.kappa + d0.sqrt() / km.period as f64),
        even_closed_form: km_r_even_closed(&km.alpha, &km.beta, &frak, km.kappa).ok(),
        rows,
    };
    let body = match c.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut s = String::from("i,trace,discr,r11,r12,r21,r22\n");
            for r in &out.rows {
                let [[a, b], [cc, d]] = r.r.e;
                writeln!(s, "{},{},{},{a},{b},{cc},{d}", r.i, r.trace, r.discr).unwrap();
            }
            s
        }
        _ => json(&out),
    };
    emit(c, &body)?;
    Ok(())
}

/// Compare the general ℛ_0 sum with the even-N closed form on random
/// balanced α and random 𝔣 of the spec's period.
fn km_demo(c: &Common, km: &KmSpec, seed: u64) -> Result<(), Failure> {
    let n = km.period;
    if n % 2 != 0 {
        return Err(anyhow!("the closed form needs even N, got {n}").into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials = c.grid.unwrap_or(20);
    let mut rows = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut alpha: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        // balance: ∏ even = ∏ odd
        let even: f64 = alpha.iter().step_by(2).product();
        let odd: f64 = alpha.iter().skip(1).step_by(2).product();
        alpha[n - 1] *= even / odd;
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let alpha = PeriodicSeq::new(alpha)?;
        let beta = PeriodicSeq::constant(0.0, n);
        let frak = PeriodicSeq::new(f)?;
        let model = PeriodicModel::new(alpha.clone(), beta.clone())?;
        let r = km_r(&model, &frak, km.kappa, 0)?;
        let (tc, dc) = km_r_even_closed(&alpha, &beta, &frak, km.kappa)?;
        rows.push(DemoRow {
            trial,
            alpha: alpha.values().to_vec(),
            frak_f: frak.values().to_vec(),
            trace_sum: r.tr(),
            trace_closed: tc,
            discr_sum: r.discr(),
            discr_closed: dc,
        });
    }
    let body = match c.format.unwrap_or(Format::Csv) {
        Format::Json => json(&rows),
        _ => {
            let mut s = String::from("trial,trace_sum,trace_closed,discr_sum,discr_closed\n");
            for r in &rows {
                writeln!(s, "{},{},{},{},{}", r.trial, r.trace_sum, r.trace_closed, r.discr_sum, r.discr_closed).unwrap();
            }
            s
        }
    };
    emit(c, &body)?;
    Ok(())
}

fn cmd_validate(c: &Common) -> Result<u8, Failure> {
    let spec = load(c)?;
    let rep = spec.validate(c.probe.unwrap_or(1 << 20));
    emit(c, &json(&rep))?;
    Ok(if rep.error.is_some() { 2 } else { 0 })
}
