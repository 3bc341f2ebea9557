//! Routing of a specification to the applicable spectral theorem.
//!
//! The classifier computes what can be computed (traces, discriminants,
//! limit matrices, Λ, series verdicts) and labels the rest. Measure-theoretic
//! conclusions are emitted as cited statements, never derived numerically,
//! and the bounded-variation hypotheses are always reported as
//! user-asserted, with a numerical probe attached where one is available.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{AffineMat2, Mat2};
use crate::model::{JacobiSpec, KmSpec, ModulatedSpec, PeriodicSeq, SequenceGen};
use crate::poly::{Poly, PolyMat2};
use crate::series::{block_sums, ls_slope, summarize, SeriesReport, SeriesVerdict, FIT_BLOCKS};
use crate::stolz::{class_diagnostic, StolzVerdict};
use crate::transfer::{
    closed_form_r_modulated, km_r, limit_matrix, scaled_deviation, window_product, PeriodicModel, Scaling,
    SIGMA_TOL,
};

/// Tolerance on `|tr 𝔛_0(0)| − 2` below which the trace counts as critical.
pub const CRITICAL_TRACE_TOL: f64 = 1e-12;
/// Threshold margins at or below this are treated as marginal.
pub const MARGIN_TOL: f64 = 1e-6;
/// Dyadic log₂ slope beyond which the product series is called divergent or convergent.
pub const SERIES_SLOPE_TOL: f64 = 0.02;
/// Leading coefficients below this (relative) make a quadratic degenerate.
pub const DEGENERATE_QUADRATIC: f64 = 1e-14;

/// Outcome of the Carleman test `Σ 1/a_n = ∞`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarlemanVerdict {
    DivergesConsistent,
    ConvergesConsistent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlemanReport {
    pub verdict: CarlemanVerdict,
    pub partial_sum: f64,
    pub series: SeriesReport,
}

/// Dyadic-block test of `Σ_{n≤n_max} 1/a_n`.
pub fn carleman(a: &[f64], n_max: usize) -> CarlemanReport {
    let end = a.len().min(n_max.saturating_add(1));
    let terms: Vec<f64> = a[..end].iter().map(|v| 1.0 / v).collect();
    let series = summarize(&terms);
    let verdict = match series.verdict {
        SeriesVerdict::Diverges => CarlemanVerdict::DivergesConsistent,
        SeriesVerdict::Converges => CarlemanVerdict::ConvergesConsistent,
        SeriesVerdict::Inconclusive => CarlemanVerdict::Inconclusive,
    };
    CarlemanReport {
        verdict,
        partial_sum: series.partial_sum,
        series,
    }
}

/// Open interval with possibly infinite endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "extended")]
    pub lo: f64,
    #[serde(with = "extended")]
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// A finite interior point.
    pub fn midpoint(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo + 1.0,
            (false, true) => self.hi - 1.0,
            (false, false) => 0.0,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// Reals in JSON, with `"inf"` / `"-inf"` for the infinite endpoints.
mod extended {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*x)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("expected a number or ±inf, got `{other}`"))),
            },
        }
    }
}

/// `{x : p(x) < 0}` as sorted disjoint open intervals, from the sorted
/// distinct real roots of `p`.
fn negative_set(p: impl Fn(f64) -> f64, roots: &[f64]) -> Vec<Interval> {
    let mut knots = vec![f64::NEG_INFINITY];
    knots.extend_from_slice(roots);
    knots.push(f64::INFINITY);
    knots
        .windows(2)
        .map(|w| Interval::new(w[0], w[1]))
        .filter(|iv| p(iv.midpoint()) < 0.0)
        .collect()
}

/// Λ for a blended spec with the exact discriminant polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaBlended {
    /// Coefficients of `discr 𝒳_1(x)`, ascending.
    pub discr_poly: Vec<f64>,
    pub intervals: Vec<Interval>,
}

fn transfer_poly(model: &PeriodicModel, j: i64) -> PolyMat2 {
    let (aj, ajm, bj) = (model.alpha.get(j), model.alpha.get(j - 1), model.beta.get(j));
    PolyMat2::new(
        Poly::constant(0.0),
        Poly::constant(1.0),
        Poly::constant(-ajm / aj),
        Poly::new(vec![-bj / aj, 1.0 / aj]),
    )
}

/// Exact `𝒳_1(x) = 𝒞(x)·𝔅_{N−1}(x)⋯𝔅_1(x)` as a polynomial matrix.
pub fn blended_limit_poly(spec: &JacobiSpec) -> Result<PolyMat2> {
    let JacobiSpec::Blended(b) = spec else {
        return Err(Error::Unsupported {
            variant: spec.variant_name().into(),
            message: "Λ from discr 𝒳_1 needs a blended spec".into(),
        });
    };
    let model = PeriodicModel::of(spec)?;
    let n = b.period as i64;
    let a0 = model.alpha.get(0);
    let core = PolyMat2::new(
        Poly::constant(0.0),
        Poly::constant(-1.0),
        Poly::constant(model.alpha.get(n - 1) / a0),
        Poly::new(vec![model.beta.get(0) / a0, -2.0 / a0]),
    );
    let right = (1..n).fold(PolyMat2::identity(), |acc, j| transfer_poly(&model, j).mul(&acc));
    Ok(core.mul(&right))
}

/// `Λ = {x : discr 𝒳_1(x) < 0}` with endpoints refined to `refine_tol`.
pub fn lambda_blended(spec: &JacobiSpec, refine_tol: f64) -> Result<LambdaBlended> {
    if !(refine_tol > 0.0) {
        return Err(Error::InvalidArgument("refine_tol must be positive".into()));
    }
    let p = blended_limit_poly(spec)?.discr().cleaned(1e-15);
    let roots = p.real_roots(refine_tol);
    let intervals = negative_set(|x| p.eval(x), &roots);
    Ok(LambdaBlended {
        discr_poly: p.coeffs,
        intervals,
    })
}

/// `{x : q(x) < 0}` for the quadratic `q = c0 + c1 x + c2 x²`.
pub fn negative_set_quadratic(c: [f64; 3]) -> Vec<Interval> {
    let [c0, c1, c2] = c;
    let scale = c0.abs().max(c1.abs()).max(c2.abs());
    let all = vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY)];
    if scale == 0.0 {
        return Vec::new();
    }
    if c2.abs() <= DEGENERATE_QUADRATIC * scale {
        // linear or constant
        if c1.abs() <= DEGENERATE_QUADRATIC * scale {
            return if c0 < 0.0 { all } else { Vec::new() };
        }
        let r = -c0 / c1;
        return if c1 > 0.0 {
            vec![Interval::new(f64::NEG_INFINITY, r)]
        } else {
            vec![Interval::new(r, f64::INFINITY)]
        };
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    let disc_scale = c1 * c1 + (4.0 * c2 * c0).abs();
    if disc.abs() <= DEGENERATE_QUADRATIC * disc_scale {
        let r = -c1 / (2.0 * c2);
        return if c2 < 0.0 {
            vec![Interval::new(f64::NEG_INFINITY, r), Interval::new(r, f64::INFINITY)]
        } else {
            Vec::new()
        };
    }
    if disc < 0.0 {
        return if c2 < 0.0 { all } else { Vec::new() };
    }
    // cancellation-free roots
    let q = if c1 >= 0.0 { -0.5 * (c1 + disc.sqrt()) } else { -0.5 * (c1 - disc.sqrt()) };
    let (r1, r2) = {
        let (u, v) = (q / c2, c0 / q);
        if u < v { (u, v) } else { (v, u) }
    };
    if c2 > 0.0 {
        vec![Interval::new(r1, r2)]
    } else {
        vec![Interval::new(f64::NEG_INFINITY, r1), Interval::new(r2, f64::INFINITY)]
    }
}

/// Λ for a critical modulated spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaCritical {
    pub r0: AffineMat2,
    /// `discr ℛ_0(x) = c0 + c1 x + c2 x²`.
    pub discr_coeffs: [f64; 3],
    pub intervals: Vec<Interval>,
    /// Whether `s`, `z` were given exactly rather than estimated.
    pub exact_limits: bool,
}

/// `(s, z)` of a modulated spec: as given, or read off at two windows and
/// required to agree to `1e-6` relative.
pub fn modulated_limits(m: &ModulatedSpec, probe: usize) -> Result<(PeriodicSeq, PeriodicSeq, bool)> {
    if let (Some(s), Some(z)) = (&m.s, &m.z) {
        return Ok((s.clone(), z.clone(), true));
    }
    let k1 = (probe / m.period).max(4);
    let (s1, z1) = m.estimate_sz(k1)?;
    let (s2, z2) = m.estimate_sz(k1 / 2)?;
    let settled = |u: &PeriodicSeq, v: &PeriodicSeq| {
        u.values()
            .iter()
            .zip(v.values())
            .all(|(x, y)| (x - y).abs() <= 1e-6 * x.abs().max(1.0))
    };
    if !settled(&s1, &s2) || !settled(&z1, &z2) {
        return Err(Error::InvalidArgument(format!(
            "the limits s, z do not settle between windows {} and {k1}; supply them in the spec",
            k1 / 2
        )));
    }
    let s = m.s.clone().unwrap_or(s1);
    let z = m.z.clone().unwrap_or(z1);
    Ok((s, z, false))
}

/// `Λ = {x : discr ℛ_0(x) < 0}` from the closed form of `ℛ_0`.
pub fn lambda_critical(spec: &JacobiSpec, probe: usize) -> Result<LambdaCritical> {
    let JacobiSpec::Modulated(m) = spec else {
        return Err(Error::Unsupported {
            variant: spec.variant_name().into(),
            message: "Λ from discr ℛ_0 needs a modulated spec".into(),
        });
    };
    let model = PeriodicModel::of(spec)?;
    model.critical_sigma()?;
    let (s, z, exact) = modulated_limits(m, probe)?;
    let r0 = closed_form_r_modulated(&model, &s, &z, 0)?;
    let c = r0.discr_coeffs();
    Ok(LambdaCritical {
        r0,
        discr_coeffs: c,
        intervals: negative_set_quadratic(c),
        exact_limits: exact,
    })
}

/// Carleman status read off from the growth of `γ_n/n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KmCarleman {
    CarlemanFails,
    CarlemanHolds,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmGrowth {
    pub verdict: KmCarleman,
    /// `(n, γ_n/n)` at dyadic `n`.
    pub ratios: Vec<(usize, f64)>,
    /// Fitted slope of `log(γ_n/n)` against `log n`.
    pub slope: Option<f64>,
}

/// Probe `γ_n/n` at `n = 2^4, …, 2^22`: a slope below `−0.05` of its
/// log-log fit means `γ_n/n → 0` (Carleman fails), above `0.05` means
/// `γ_n/n → ∞` (Carleman holds); anything else is indeterminate.
pub fn km_carleman_growth(gamma: &SequenceGen) -> Result<KmGrowth> {
    let mut ratios = Vec::new();
    for k in 4..=22 {
        let n = 1usize << k;
        let g = gamma.eval(n)?;
        if !(g > 0.0) {
            return Err(Error::Generation {
                index: n,
                message: format!("γ_{n} = {g} is not positive"),
            });
        }
        ratios.push((n, g / n as f64));
    }
    let tail = &ratios[ratios.len() - FIT_BLOCKS..];
    let xs: Vec<f64> = tail.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, r)| r.ln()).collect();
    let slope = ls_slope(&xs, &ys);
    let verdict = match slope {
        Some(s) if s < -0.05 => KmCarleman::CarlemanFails,
        Some(s) if s > 0.05 => KmCarleman::CarlemanHolds,
        _ => KmCarleman::Indeterminate,
    };
    Ok(KmGrowth {
        verdict,
        ratios,
        slope,
    })
}

/// Growth regime of γ fixing the self-adjointness threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaRegime {
    /// `γ_n = n + 1`: threshold `−1`.
    Linear,
    /// `γ_n/n → 0`: threshold `0`.
    Sublinear,
    Other,
}

fn gamma_regime(gamma: &SequenceGen) -> Result<GammaRegime> {
    let linear = (4..=22).all(|k| {
        let n = 1usize << k;
        gamma
            .eval(n)
            .map(|g| (g / (n as f64 + 1.0) - 1.0).abs() <= 1e-9)
            .unwrap_or(false)
    });
    if linear {
        return Ok(GammaRegime::Linear);
    }
    Ok(match km_carleman_growth(gamma)?.verdict {
        KmCarleman::CarlemanFails => GammaRegime::Sublinear,
        _ => GammaRegime::Other,
    })
}

/// Closed-form threshold `p = −κ + √(discr ℛ_0)/N` compared with `critical`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub regime: GammaRegime,
    pub exponent: f64,
    pub critical: f64,
    pub margin: f64,
}

/// Dyadic evidence on the product series whose divergence characterises
/// self-adjointness when `discr ℛ_i > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductSeriesEvidence {
    /// First window of the products.
    pub n0: usize,
    pub windows: usize,
    pub block_sums: Vec<f64>,
    /// Fitted log₂ growth of the block sums per block.
    pub log2_slope: Option<f64>,
    pub verdict: SeriesVerdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaVerdict {
    SelfAdjoint,
    NotSelfAdjoint,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictBasis {
    NegativeDiscriminant,
    Threshold,
    ProductSeries,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonCarlemanEvidence {
    pub i: usize,
    pub sigma: f64,
    pub r_limit: Mat2<f64>,
    pub trace: f64,
    pub discr: f64,
    /// ‖R_K − ℛ_i‖ at the last probed window.
    pub r_residual: f64,
    pub threshold: Option<Threshold>,
    pub product_series: Option<ProductSeriesEvidence>,
    pub basis: VerdictBasis,
    pub verdict: SaVerdict,
    /// Whether the product-series evidence agrees with the threshold.
    pub agreement: Option<bool>,
    pub notes: Vec<String>,
}

/// Windows `R_k = γ(X_{kN+i}(0) − σ)`, `k = 1..=K`, and their divisors.
fn gamma_windows(spec: &JacobiSpec, i: usize, probe: usize) -> Result<(Vec<Mat2<f64>>, Vec<f64>)> {
    let n_per = spec.window_len();
    let (a, b) = spec.build(probe)?;
    let last_k = (probe + 1 - i) / n_per - 1;
    if last_k < 8 {
        return Err(Error::InvalidArgument(format!("probe {probe} gives too few windows")));
    }
    let mut rs = Vec::with_capacity(last_k);
    let mut gs = Vec::with_capacity(last_k);
    for k in 1..=last_k {
        rs.push(scaled_deviation(spec, &a, &b, i, 0.0, k, Scaling::Gamma)?);
        gs.push(match spec {
            JacobiSpec::Km(km) => km.gamma.eval(k * n_per)?,
            JacobiSpec::Modulated(m) => m.gamma.as_ref().expect("checked by caller").eval(k)?,
            _ => unreachable!(),
        });
    }
    Ok((rs, gs))
}

/// Terms of the product series `t_n = ∏_{j=n₀}^{n}|1 + (σ tr R_j + √discr R_j)/(2γ_j)|²`.
pub fn product_series_terms(r: &[Mat2<f64>], gamma: &[f64], sigma: f64) -> Option<(usize, Vec<f64>)> {
    let factor = |k: usize| -> Option<f64> {
        let d = r[k].discr();
        if !(d > 0.0) {
            return None;
        }
        let f = 1.0 + (sigma * r[k].tr() + d.sqrt()) / (2.0 * gamma[k]);
        (f > 0.0).then_some(f)
    };
    let bad = (0..r.len()).rev().find(|&k| factor(k).is_none());
    let start = bad.map(|k| k + 1).unwrap_or(0);
    if start >= r.len() {
        return None;
    }
    let mut log = 0.0;
    let terms = (start..r.len())
        .map(|k| {
            log += 2.0 * factor(k).unwrap().ln();
            log.exp()
        })
        .collect();
    Some((start + 1, terms))
}

fn product_series_evidence(r: &[Mat2<f64>], gamma: &[f64], sigma: f64) -> Option<ProductSeriesEvidence> {
    let (n0, terms) = product_series_terms(r, gamma, sigma)?;
    let blocks = block_sums(&terms);
    let start = blocks.len().saturating_sub(FIT_BLOCKS);
    let ks: Vec<f64> = (start..blocks.len()).map(|k| k as f64).collect();
    let ls: Vec<f64> = blocks[start..].iter().map(|b| b.max(1e-300).log2()).collect();
    let slope = if blocks.len() >= 4 { ls_slope(&ks, &ls) } else { None };
    let verdict = match slope {
        Some(s) if s > SERIES_SLOPE_TOL => SeriesVerdict::Diverges,
        Some(s) if s < -SERIES_SLOPE_TOL => SeriesVerdict::Converges,
        _ => SeriesVerdict::Inconclusive,
    };
    Some(ProductSeriesEvidence {
        n0,
        windows: r.len(),
        block_sums: blocks,
        log2_slope: slope,
        verdict,
    })
}

/// Self-adjointness of a critical, non-Carleman spec from the limit `ℛ_i`.
///
/// A negative discriminant decides directly (not self-adjoint). A positive
/// one is judged by the closed-form threshold when γ is `n+1` or sublinear
/// and the margin exceeds [`MARGIN_TOL`], otherwise by the dyadic slope of
/// the product series. Both pieces of evidence are reported.
pub fn noncarleman_selfadjoint(spec: &JacobiSpec, i: usize, probe: usize) -> Result<NonCarlemanEvidence> {
    let model = PeriodicModel::of(spec)?;
    let sigma = model.critical_sigma()?;
    let n_per = model.period();
    if i >= n_per {
        return Err(Error::InvalidArgument(format!("i = {i} must be below N = {n_per}")));
    }
    let mut notes = Vec::new();
    let km: Option<&KmSpec> = match spec {
        JacobiSpec::Km(km) => Some(km),
        JacobiSpec::Modulated(m) if m.gamma.is_some() => None,
        JacobiSpec::Modulated(_) => {
            return Err(Error::InvalidArgument(
                "a modulated spec needs a `gamma` generator for the non-Carleman analysis".into(),
            ))
        }
        other => {
            return Err(Error::Unsupported {
                variant: other.variant_name().into(),
                message: "non-Carleman analysis needs modulated or km entries".into(),
            })
        }
    };
    let (rs, gs) = gamma_windows(spec, i, probe)?;
    let last = *rs.last().unwrap();
    let r_limit = match km {
        Some(km) => {
            let (frak, exact) = km.frak_f()?;
            if !exact {
                notes.push("periodic limit of f read off at a large index".into());
            }
            km_r(&model, &frak, km.kappa, i as i64)?
        }
        None => {
            notes.push("ℛ_i estimated by the last probed window".into());
            last
        }
    };
    let trace = r_limit.tr();
    let discr = r_limit.discr();
    let r_residual = (last - r_limit).norm();
    let mut out = NonCarlemanEvidence {
        i,
        sigma,
        r_limit,
        trace,
        discr,
        r_residual,
        threshold: None,
        product_series: None,
        basis: VerdictBasis::None,
        verdict: SaVerdict::Inconclusive,
        agreement: None,
        notes,
    };
    let scale = trace * trace + r_limit.max_abs().powi(2);
    if discr.abs() <= 1e-9 * scale.max(1e-300) {
        out.notes.push("discr ℛ_i vanishes within tolerance".into());
        return Ok(out);
    }
    if discr < 0.0 {
        out.basis = VerdictBasis::NegativeDiscriminant;
        out.verdict = SaVerdict::NotSelfAdjoint;
        return Ok(out);
    }
    if let Some(km) = km {
        let regime = gamma_regime(&km.gamma)?;
        let critical = match regime {
            GammaRegime::Linear => Some(-1.0),
            GammaRegime::Sublinear => Some(0.0),
            GammaRegime::Other => None,
        };
        if let Some(critical) = critical {
            let exponent = -km.kappa + discr.sqrt() / n_per as f64;
            out.threshold = Some(Threshold {
                regime,
                exponent,
                critical,
                margin: exponent - critical,
            });
        } else {
            out.notes
                .push("γ is neither n+1 nor sublinear: only product-series evidence (heuristic)".into());
        }
    }
    out.product_series = product_series_evidence(&rs, &gs, sigma);
    let series_verdict = out.product_series.as_ref().map(|e| match e.verdict {
        SeriesVerdict::Diverges => SaVerdict::SelfAdjoint,
        SeriesVerdict::Converges => SaVerdict::NotSelfAdjoint,
        SeriesVerdict::Inconclusive => SaVerdict::Inconclusive,
    });
    let threshold_verdict = out.threshold.and_then(|t| {
        (t.margin.abs() > MARGIN_TOL).then_some(if t.margin > 0.0 {
            SaVerdict::SelfAdjoint
        } else {
            SaVerdict::NotSelfAdjoint
        })
    });
    if let (Some(t), Some(s)) = (threshold_verdict, series_verdict) {
        out.agreement = Some(t == s);
    }
    match (threshold_verdict, series_verdict) {
        (Some(t), _) => {
            out.basis = VerdictBasis::Threshold;
            out.verdict = t;
        }
        (None, Some(s)) if s != SaVerdict::Inconclusive => {
            out.basis = VerdictBasis::ProductSeries;
            out.verdict = s;
            out.notes.push("verdict from finite partial products (heuristic)".into());
        }
        _ => {}
    }
    Ok(out)
}

/// Theorem route of a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    ThmA,
    ThmB,
    ThmC,
    #[serde(rename = "ThmD-sa")]
    ThmDSa,
    #[serde(rename = "ThmD-notsa")]
    ThmDNotSa,
    #[serde(rename = "Thm8-notsa")]
    Thm8NotSa,
    #[serde(rename = "external-negative-discr")]
    ExternalNegativeDiscr,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::ThmA => "ThmA",
            Route::ThmB => "ThmB",
            Route::ThmC => "ThmC",
            Route::ThmDSa => "ThmD-sa",
            Route::ThmDNotSa => "ThmD-notsa",
            Route::Thm8NotSa => "Thm8-notsa",
            Route::ExternalNegativeDiscr => "external-negative-discr",
            Route::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfAdjoint {
    Yes,
    No,
    /// Holds provided the user-asserted regularity hypotheses hold.
    Conditional,
}

/// A hypothesis that cannot be verified from finite data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Caveat {
    pub hypothesis: String,
    /// Always `"user-asserted"`; a probe is supporting evidence only.
    pub status: String,
    pub probe: Option<ProbeSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub sequence: String,
    pub terms: usize,
    pub verdict: StolzVerdict,
    pub sup_norm: f64,
    pub note: String,
}

fn caveat(hypothesis: impl Into<String>, probe: Option<ProbeSummary>) -> Caveat {
    Caveat {
        hypothesis: hypothesis.into(),
        status: "user-asserted".into(),
        probe,
    }
}

fn probe_matrices(name: &str, xs: &[Mat2<f64>]) -> Option<ProbeSummary> {
    let d = class_diagnostic(xs, 1, 0, usize::MAX).ok()?;
    Some(ProbeSummary {
        sequence: name.into(),
        terms: d.terms,
        verdict: d.verdict,
        sup_norm: d.sup_norm,
        note: d.note,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecSummary {
    pub variant: String,
    #[serde(rename = "N")]
    pub period: Option<usize>,
    pub window_len: usize,
}

/// Discriminant data gathered for the report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscrInfo {
    /// `discr 𝔛_0(0)`.
    pub x0: Option<f64>,
    /// Discriminants of the cyclic limit matrices at `cyclic_x`.
    pub cyclic: Vec<f64>,
    pub cyclic_x: Option<f64>,
    /// Largest relative spread of the cyclic discriminants over the probed points.
    pub cyclic_spread: Option<f64>,
    /// `discr 𝒳_1(x)` (blended) or `discr ℛ_0(x)` (critical), ascending.
    pub polynomial: Option<Vec<f64>>,
    /// Affine `ℛ_0(x)` of the critical Carleman case.
    pub r0: Option<AffineMat2>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub spec: SpecSummary,
    pub sigma: Option<f64>,
    pub x0: Option<Mat2<f64>>,
    pub trace_x0: Option<f64>,
    pub discr: DiscrInfo,
    pub route: Route,
    pub lambda: Vec<Interval>,
    pub self_adjoint: SelfAdjoint,
    pub sigma_ess: String,
    /// Conclusions cited from the applicable theorem; not computed.
    pub conclusions: Vec<String>,
    pub carleman: Option<CarlemanReport>,
    pub noncarleman: Option<NonCarlemanEvidence>,
    pub caveats: Vec<Caveat>,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = self.spec.period.map(|n| format!(", N = {n}")).unwrap_or_default();
        s.push_str(&format!("spec: {}{p}\n", self.spec.variant));
        s.push_str(&format!("route: {}\n", self.route));
        if let Some(t) = self.trace_x0 {
            s.push_str(&format!("tr X0(0) = {t}\n"));
        }
        if let Some(sg) = self.sigma {
            s.push_str(&format!("sigma = {sg}\n"));
        }
        let lam: Vec<String> = self.lambda.iter().map(|i| i.to_string()).collect();
        s.push_str(&format!(
            "Lambda: {}\n",
            if lam.is_empty() { "empty".into() } else { lam.join(" U ") }
        ));
        let sa = match self.self_adjoint {
            SelfAdjoint::Yes => "yes",
            SelfAdjoint::No => "no",
            SelfAdjoint::Conditional => "conditional",
        };
        s.push_str(&format!("self-adjoint: {sa}\n"));
        s.push_str(&format!("essential spectrum: {}\n", self.sigma_ess));
        for c in &self.conclusions {
            s.push_str(&format!("  - {c}\n"));
        }
        for c in &self.caveats {
            let probe = c
                .probe
                .as_ref()
                .map(|p| format!(" [probe {}: {:?}]", p.sequence, p.verdict))
                .unwrap_or_default();
            s.push_str(&format!("caveat ({}): {}{probe}\n", c.status, c.hypothesis));
        }
        for n in &self.notes {
            s.push_str(&format!("note: {n}\n"));
        }
        s
    }
}

/// Options of [`classify`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyOptions {
    /// Number of generated entries used by numerical probes.
    pub probe: usize,
    /// Root refinement tolerance for Λ.
    pub tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            probe: 1 << 18,
            tol: 1e-10,
        }
    }
}

const CONDITIONAL: &str = "per the theorem, conditional on the regularity hypotheses";

fn fmt_set(iv: &[Interval]) -> String {
    if iv.is_empty() {
        return "empty".into();
    }
    iv.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" U ")
}

fn relative_spread(v: &[f64]) -> f64 {
    let m = v.iter().fold(0.0_f64, |a, x| a.max(x.abs())).max(1.0);
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(*x), h.max(*x)));
    (hi - lo) / m
}

/// Classify a specification.
pub fn classify(spec: &JacobiSpec, opts: ClassifyOptions) -> Result<ClassificationReport> {
    spec.check()?;
    let summary = SpecSummary {
        variant: spec.variant_name().into(),
        period: spec.periodic().map(|p| p.0),
        window_len: spec.window_len(),
    };
    match spec {
        JacobiSpec::Explicit(_) => Err(Error::Unsupported {
            variant: "explicit".into(),
            message: "classification needs modulated, blended or km entries".into(),
        }),
        JacobiSpec::Blended(b) => classify_blended(spec, b.period, summary, opts),
        _ => classify_modulated(spec, summary, opts),
    }
}

fn empty_report(summary: SpecSummary, route: Route) -> ClassificationReport {
    ClassificationReport {
        spec: summary,
        sigma: None,
        x0: None,
        trace_x0: None,
        discr: DiscrInfo::default(),
        route,
        lambda: Vec::new(),
        self_adjoint: SelfAdjoint::Conditional,
        sigma_ess: "undetermined".into(),
        conclusions: Vec::new(),
        carleman: None,
        noncarleman: None,
        caveats: Vec::new(),
        notes: Vec::new(),
    }
}

fn classify_blended(
    spec: &JacobiSpec,
    n_per: usize,
    summary: SpecSummary,
    opts: ClassifyOptions,
) -> Result<ClassificationReport> {
    let lam = lambda_blended(spec, opts.tol)?;
    let mut rep = empty_report(summary, Route::ThmB);
    let xs = [0.0, 0.5, -1.7];
    let mut spread = 0.0_f64;
    for (k, &x) in xs.iter().enumerate() {
        let d: Vec<f64> = (1..=n_per)
            .map(|i| limit_matrix::<f64>(spec, i, x).map(|m| m.discr()))
            .collect::<Result<_>>()?;
        spread = spread.max(relative_spread(&d));
        if k == 0 {
            rep.discr.cyclic = d;
            rep.discr.cyclic_x = Some(x);
        }
    }
    rep.discr.cyclic_spread = Some(spread);
    if spread > 1e-10 {
        rep.notes.push(format!("cyclic discriminants differ by {spread:.2e}"));
    }
    rep.discr.polynomial = Some(lam.discr_poly);
    rep.lambda = lam.intervals;
    if rep.lambda.len() > n_per {
        rep.notes.push(format!(
            "Λ has {} components, more than N = {n_per}",
            rep.lambda.len()
        ));
    }
    rep.self_adjoint = SelfAdjoint::Conditional;
    rep.sigma_ess = format!("closure of Λ = {}", fmt_set(&rep.lambda));
    rep.conclusions = vec![
        format!("A is self-adjoint ({CONDITIONAL})"),
        "σ_sing(A) ∩ Λ = ∅ (cited, not computed)".into(),
        "σ_ac(A) = σ_ess(A) = closure of Λ (cited, not computed)".into(),
    ];
    let (a, b) = spec.build(opts.probe)?;
    let w = n_per + 2;
    let windows: Vec<Mat2<f64>> = (1..)
        .map(|k| k * w + 1)
        .take_while(|s| s + w <= a.len())
        .map(|s| window_product(&a, &b, s, w, 0.0))
        .collect::<Result<_>>()?;
    rep.caveats.push(caveat(
        format!("(X_{{n(N+2)+i}} : n) ∈ D_r(K, Mat(2,R)) on a compact K with at least {} points", n_per + 3),
        probe_matrices("X_{n(N+2)+1}(0)", &windows),
    ));
    Ok(rep)
}

fn classify_modulated(spec: &JacobiSpec, summary: SpecSummary, opts: ClassifyOptions) -> Result<ClassificationReport> {
    let model = PeriodicModel::of(spec)?;
    let n_per = model.period();
    let x0: Mat2<f64> = model.window(0, 0.0);
    let tr = x0.tr();
    let mut rep = empty_report(summary, Route::Inconclusive);
    rep.x0 = Some(x0);
    rep.trace_x0 = Some(tr);
    rep.discr.x0 = Some(x0.discr());
    rep.discr.cyclic = (0..n_per as i64).map(|i| model.window::<f64>(i, 0.0).discr()).collect();
    rep.discr.cyclic_x = Some(0.0);
    let spread = relative_spread(&rep.discr.cyclic);
    rep.discr.cyclic_spread = Some(spread);
    if spread > 1e-10 {
        rep.notes.push(format!("cyclic discriminants differ by {spread:.2e}"));
    }
    let (a, b) = spec.build(opts.probe)?;
    let windows = |start: usize| -> Result<Vec<Mat2<f64>>> {
        (1..)
            .map(|k| k * n_per + start)
            .take_while(|s| s + n_per <= a.len())
            .map(|s| window_product(&a, &b, s, n_per, 0.0))
            .collect()
    };
    let mut carl = carleman(&a, usize::MAX);
    if carl.verdict == CarlemanVerdict::Inconclusive {
        if let JacobiSpec::Km(km) = spec {
            match km_carleman_growth(&km.gamma)?.verdict {
                KmCarleman::CarlemanFails => {
                    carl.verdict = CarlemanVerdict::ConvergesConsistent;
                    rep.notes.push("Carleman status taken from the growth of γ_n/n".into());
                }
                KmCarleman::CarlemanHolds => {
                    carl.verdict = CarlemanVerdict::DivergesConsistent;
                    rep.notes.push("Carleman status taken from the growth of γ_n/n".into());
                }
                KmCarleman::Indeterminate => {}
            }
        }
    }

    if tr.abs() > 2.0 + CRITICAL_TRACE_TOL {
        rep.route = Route::ThmA;
        rep.self_adjoint = SelfAdjoint::Conditional;
        rep.sigma_ess = "empty".into();
        rep.conclusions = vec![
            format!("A is self-adjoint ({CONDITIONAL})"),
            "σ_ess(A) = ∅".into(),
        ];
        rep.caveats.push(caveat(
            format!("(X_{{nN+i}} : n) ∈ D_r(K, Mat(2,R)) on a compact K with at least {} points", n_per + 1),
            probe_matrices("X_{nN}(0)", &windows(0)?),
        ));
        rep.carleman = Some(carl);
        return Ok(rep);
    }
    if tr.abs() < 2.0 - CRITICAL_TRACE_TOL {
        rep.route = Route::ExternalNegativeDiscr;
        match carl.verdict {
            CarlemanVerdict::DivergesConsistent => {
                rep.self_adjoint = SelfAdjoint::Yes;
                rep.sigma_ess = "σ(A) = R".into();
                rep.conclusions = vec![
                    "A is self-adjoint (the Carleman condition holds)".into(),
                    "A is purely absolutely continuous and σ(A) = R (cited, not computed)".into(),
                ];
            }
            CarlemanVerdict::ConvergesConsistent => {
                rep.self_adjoint = SelfAdjoint::No;
                rep.sigma_ess = "not applicable".into();
                rep.conclusions = vec!["A is not self-adjoint (Carleman condition fails)".into()];
            }
            CarlemanVerdict::Inconclusive => {
                rep.self_adjoint = SelfAdjoint::Conditional;
                rep.conclusions = vec!["A is self-adjoint if and only if the Carleman condition holds".into()];
                rep.notes.push("Carleman series verdict inconclusive".into());
            }
        }
        rep.caveats.push(caveat(
            "regularity of (X_{nN} : n) required by the cited negative-discriminant result",
            probe_matrices("X_{nN}(0)", &windows(0)?),
        ));
        rep.carleman = Some(carl);
        return Ok(rep);
    }
    let Some(sigma) = model.sigma() else {
        rep.notes.push(format!(
            "|tr X0(0)| = 2 but X0(0) is not ±Id (tolerance {SIGMA_TOL}); no theorem applies"
        ));
        rep.carleman = Some(carl);
        return Ok(rep);
    };
    rep.sigma = Some(sigma);
    match carl.verdict {
        CarlemanVerdict::DivergesConsistent => match spec {
            JacobiSpec::Modulated(_) => match lambda_critical(spec, opts.probe) {
                Ok(lc) => {
                    rep.route = Route::ThmC;
                    rep.discr.polynomial = Some(lc.discr_coeffs.to_vec());
                    rep.discr.r0 = Some(lc.r0);
                    rep.lambda = lc.intervals;
                    if !lc.exact_limits {
                        rep.notes.push("s, z limits estimated from the entries".into());
                    }
                    rep.self_adjoint = SelfAdjoint::Conditional;
                    rep.sigma_ess = format!("closure of Λ = {}", fmt_set(&rep.lambda));
                    rep.conclusions = vec![
                        format!("A is self-adjoint ({CONDITIONAL})"),
                        "σ_sing(A) ∩ Λ = ∅ (cited, not computed)".into(),
                        "σ_ac(A) = σ_ess(A) = closure of Λ (cited, not computed)".into(),
                    ];
                    let last = (a.len() - 1) / n_per - 1;
                    let rs: Vec<Mat2<f64>> = (1..=last)
                        .map(|k| scaled_deviation(spec, &a, &b, 0, 0.0, k, Scaling::A))
                        .collect::<Result<_>>()?;
                    rep.caveats.push(caveat(
                        format!("(R_{{nN+i}} : n) ∈ D_1(K, Mat(2,R)) on a compact K with at least {} points", n_per + 1),
                        probe_matrices("R_{nN}(0)", &rs),
                    ));
                }
                Err(e) => rep.notes.push(format!("ℛ_0 unavailable: {e}")),
            },
            _ => {
                rep.self_adjoint = SelfAdjoint::Yes;
                rep.notes.push("Carleman condition holds: A is self-adjoint; Λ is not determined for km entries".into());
            }
        },
        CarlemanVerdict::ConvergesConsistent => match noncarleman_selfadjoint(spec, 0, opts.probe) {
            Ok(ev) => {
                let (route, sa) = match ev.verdict {
                    SaVerdict::NotSelfAdjoint if ev.basis == VerdictBasis::NegativeDiscriminant => {
                        (Route::Thm8NotSa, SelfAdjoint::No)
                    }
                    SaVerdict::NotSelfAdjoint => (Route::ThmDNotSa, SelfAdjoint::No),
                    SaVerdict::SelfAdjoint => (Route::ThmDSa, SelfAdjoint::Yes),
                    SaVerdict::Inconclusive => (Route::Inconclusive, SelfAdjoint::Conditional),
                };
                rep.route = route;
                rep.self_adjoint = sa;
                rep.sigma_ess = match sa {
                    SelfAdjoint::Yes => "empty".into(),
                    SelfAdjoint::No => "not applicable (A is not self-adjoint)".into(),
                    SelfAdjoint::Conditional => "empty provided A is self-adjoint".into(),
                };
                rep.conclusions = match route {
                    Route::Thm8NotSa => vec!["discr ℛ_i < 0: A is not self-adjoint".into()],
                    Route::ThmDSa => vec!["A is self-adjoint".into(), "σ_ess(A) = ∅".into()],
                    Route::ThmDNotSa => vec!["A is not self-adjoint".into()],
                    _ => vec!["σ_ess(A) = ∅ provided A is self-adjoint".into()],
                };
                let (rs, _) = gamma_windows(spec, 0, opts.probe)?;
                rep.caveats.push(caveat(
                    "(R_{nN+i}(0) : n) ∈ D_1(Mat(2,R))",
                    probe_matrices("R_{nN}(0)", &rs),
                ));
                rep.caveats.push(caveat("Σ 1/γ_n = ∞", None));
                rep.noncarleman = Some(ev);
            }
            Err(e) => rep.notes.push(format!("non-Carleman analysis unavailable: {e}")),
        },
        CarlemanVerdict::Inconclusive => rep.notes.push("Carleman series verdict inconclusive".into()),
    }
    rep.carleman = Some(carl);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BlendedSpec, KmSpec};

    fn pseq(v: &[f64]) -> PeriodicSeq {
        PeriodicSeq::new(v.to_vec()).unwrap()
    }

    fn blended(alpha: f64, beta: f64) -> JacobiSpec {
        JacobiSpec::Blended(BlendedSpec {
            period: 1,
            alpha: pseq(&[alpha]),
            beta: pseq(&[beta]),
            a_tilde: SequenceGen::constant(alpha),
            b_tilde: SequenceGen::constant(beta),
            c_tilde: SequenceGen::power(1.2),
        })
    }

    fn km(n: usize, beta: f64, kappa: f64, f: Vec<f64>) -> JacobiSpec {
        JacobiSpec::Km(KmSpec {
            period: n,
            alpha: PeriodicSeq::constant(1.0, n),
            beta: PeriodicSeq::constant(beta, n),
            a_tilde: SequenceGen::ExpSum {
                kappa,
                gamma: Box::new(SequenceGen::power(1.0)),
            },
            gamma: SequenceGen::power(1.0),
            f: SequenceGen::Periodic { values: f },
            kappa,
            f_limit: None,
        })
    }

    #[test]
    fn carleman_examples() {
        let a: Vec<f64> = (0..1 << 20).map(|n| n as f64 + 1.0).collect();
        assert_eq!(carleman(&a, usize::MAX).verdict, CarlemanVerdict::DivergesConsistent);
        let a: Vec<f64> = (0..1 << 20).map(|n| (n as f64 + 1.0).powi(2)).collect();
        let r = carleman(&a, usize::MAX);
        assert_eq!(r.verdict, CarlemanVerdict::ConvergesConsistent);
        assert!(r.partial_sum < std::f64::consts::PI.powi(2) / 6.0);
        let a: Vec<f64> = (0..1 << 20)
            .map(|n| (n as f64 + 1.0) * (n as f64 + 2.0).ln().powi(2))
            .collect();
        assert_eq!(carleman(&a, usize::MAX).verdict, CarlemanVerdict::ConvergesConsistent);
    }

    #[test]
    fn lambda_blended_examples() {
        let l = lambda_blended(&blended(1.0, 0.0), 1e-12).unwrap();
        assert_eq!(l.discr_poly, vec![-4.0, 0.0, 4.0]);
        assert_eq!(l.intervals.len(), 1);
        assert!((l.intervals[0].lo + 1.0).abs() < 1e-12 && (l.intervals[0].hi - 1.0).abs() < 1e-12);
        let l = lambda_blended(&blended(1.0, 2.0), 1e-12).unwrap();
        assert!(l.intervals[0].lo.abs() < 1e-12 && (l.intervals[0].hi - 2.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_cases() {
        let all = negative_set_quadratic([-1.0, 0.0, 0.0]);
        assert_eq!(all, vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY)]);
        assert!(negative_set_quadratic([1.0, 0.0, 0.0]).is_empty());
        let punctured = negative_set_quadratic([0.0, 0.0, -4.0]);
        assert_eq!(
            punctured,
            vec![Interval::new(f64::NEG_INFINITY, 0.0), Interval::new(0.0, f64::INFINITY)]
        );
        let inside = negative_set_quadratic([-1.0, 0.0, 1.0]);
        assert_eq!(inside, vec![Interval::new(-1.0, 1.0)]);
        let lin = negative_set_quadratic([2.0, -1.0, 1e-20]);
        assert_eq!(lin, vec![Interval::new(2.0, f64::INFINITY)]);
    }

    #[test]
    fn interval_serde_handles_infinity() {
        let iv = vec![Interval::new(f64::NEG_INFINITY, 0.0), Interval::new(0.0, f64::INFINITY)];
        let s = serde_json::to_string(&iv).unwrap();
        assert_eq!(s, r#"[{"lo":"-inf","hi":0.0},{"lo":0.0,"hi":"inf"}]"#);
        let back: Vec<Interval> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, iv);
    }

    #[test]
    fn growth_probe() {
        let sqrt = SequenceGen::power(0.5);
        assert_eq!(km_carleman_growth(&sqrt).unwrap().verdict, KmCarleman::CarlemanFails);
        assert_eq!(
            km_carleman_growth(&SequenceGen::power(2.0)).unwrap().verdict,
            KmCarleman::CarlemanHolds
        );
        assert_eq!(
            km_carleman_growth(&SequenceGen::power(1.0)).unwrap().verdict,
            KmCarleman::Indeterminate
        );
    }

    #[test]
    fn km_threshold_verdicts() {
        let opts = ClassifyOptions::default();
        let sa = classify(&km(2, 0.0, 2.0, vec![0.0, 1.5]), opts).unwrap();
        assert_eq!(sa.route, Route::ThmDSa);
        assert_eq!(sa.sigma_ess, "empty");
        let notsa = classify(&km(2, 0.0, 2.0, vec![0.0, 0.5]), opts).unwrap();
        assert_eq!(notsa.route, Route::ThmDNotSa);
        let ev = notsa.noncarleman.unwrap();
        assert_eq!(ev.agreement, Some(true));
        let neg = classify(&km(3, 1.0, 2.0, vec![0.0, 0.0, 1.0]), opts).unwrap();
        assert_eq!(neg.route, Route::Thm8NotSa);
    }

    #[test]
    fn report_roundtrip() {
        let rep = classify(&blended(1.0, 0.0), ClassifyOptions::default()).unwrap();
        assert_eq!(rep.route, Route::ThmB);
        let back = ClassificationReport::from_json(&rep.to_json()).unwrap();
        assert_eq!(back, rep);
    }
}
