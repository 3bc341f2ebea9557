//! Declarative specifications of Jacobi parameters and generation of `(a_n, b_n)`.
//!
//! A [`JacobiSpec`] is an immutable description; [`JacobiSpec::build`] turns
//! it into concrete arrays for any prefix length. Generators are closed forms
//! or tables, so every entry can be produced without iterating from zero
//! (the exp-sum kind is the one exception and is evaluated by a fixed,
//! deterministic accumulation).

use std::fmt;

use evalexpr::{ContextWithMutableVariables, HashMapContext, Node, Value};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{spec_err, Error, Result};

/// An `N`-periodic real sequence, defined for every integer index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PeriodicSeq {
    values: Vec<f64>,
}

impl PeriodicSeq {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("periodic sequence needs at least one value".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("periodic sequence values must be finite".into()));
        }
        Ok(PeriodicSeq { values })
    }

    pub fn constant(value: f64, period: usize) -> Self {
        PeriodicSeq {
            values: vec![value; period.max(1)],
        }
    }

    pub fn period(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, n: i64) -> f64 {
        self.values[n.rem_euclid(self.values.len() as i64) as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }
}

impl TryFrom<Vec<f64>> for PeriodicSeq {
    type Error = String;
    fn try_from(v: Vec<f64>) -> std::result::Result<Self, String> {
        PeriodicSeq::new(v).map_err(|e| e.to_string())
    }
}

impl From<PeriodicSeq> for Vec<f64> {
    fn from(p: PeriodicSeq) -> Vec<f64> {
        p.values
    }
}

/// A user expression in the variable `n`, e.g. `"(n + 1)^1.5"`.
///
/// Parsed once; evaluation binds `n` as a float so `n/2` is real division.
#[derive(Clone)]
pub struct Expression {
    src: String,
    tree: Node,
}

impl Expression {
    pub fn parse(src: &str) -> Result<Self> {
        let tree = evalexpr::build_operator_tree(src)
            .map_err(|e| spec_err("expr", format!("cannot parse `{src}`: {e}")))?;
        let e = Expression {
            src: src.to_string(),
            tree,
        };
        // catch unknown identifiers early
        e.eval(1).map_err(|err| spec_err("expr", err.to_string()))?;
        Ok(e)
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    pub fn eval(&self, n: usize) -> Result<f64> {
        let mut ctx = HashMapContext::new();
        ctx.set_value("n".into(), Value::Float(n as f64))
            .map_err(|e| Error::Generation {
                index: n,
                message: e.to_string(),
            })?;
        self.tree
            .eval_number_with_context(&ctx)
            .map_err(|e| Error::Generation {
                index: n,
                message: format!("`{}`: {e}", self.src),
            })
    }
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({:?})", self.src)
    }
}

impl PartialEq for Expression {
    fn eq(&self, o: &Self) -> bool {
        self.src == o.src
    }
}

impl Serialize for Expression {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.src.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let src = String::deserialize(d)?;
        Expression::parse(&src).map_err(serde::de::Error::custom)
    }
}

fn one() -> f64 {
    1.0
}

/// Closed-form sequence generator, evaluated at `n ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceGen {
    /// `value` for every n.
    Constant { value: f64 },
    /// `coef·(n + shift)^exponent`; `coef` and `shift` default to 1.
    Power {
        exponent: f64,
        #[serde(default = "one")]
        coef: f64,
        #[serde(default = "one")]
        shift: f64,
    },
    /// `coef·(n+1)·ln²(n+2)`.
    LogPower {
        #[serde(default = "one")]
        coef: f64,
    },
    /// `exp(Σ_{j=1}^{n} kappa/γ_j)`, accumulated multiplicatively.
    ExpSum { kappa: f64, gamma: Box<SequenceGen> },
    /// Explicit finite table; indices past the end are an error.
    Table { values: Vec<f64> },
    /// Table repeated with period `values.len()`.
    Periodic { values: Vec<f64> },
    /// Expression in `n`.
    Expr { expr: Expression },
}

impl SequenceGen {
    pub fn constant(value: f64) -> Self {
        SequenceGen::Constant { value }
    }

    /// `(n+1)^exponent`.
    pub fn power(exponent: f64) -> Self {
        SequenceGen::Power {
            exponent,
            coef: 1.0,
            shift: 1.0,
        }
    }

    pub fn expr(src: &str) -> Result<Self> {
        Ok(SequenceGen::Expr {
            expr: Expression::parse(src)?,
        })
    }

    pub fn eval(&self, n: usize) -> Result<f64> {
        let v = match self {
            SequenceGen::Constant { value } => *value,
            SequenceGen::Power {
                exponent,
                coef,
                shift,
            } => coef * (n as f64 + shift).powf(*exponent),
            SequenceGen::LogPower { coef } => {
                let l = (n as f64 + 2.0).ln();
                coef * (n as f64 + 1.0) * l * l
            }
            SequenceGen::ExpSum { kappa, gamma } => {
                let mut acc = 1.0;
                for j in 1..=n {
                    acc *= (kappa / gamma.eval(j)?).exp();
                }
                acc
            }
            SequenceGen::Table { values } => *values.get(n).ok_or_else(|| Error::Generation {
                index: n,
                message: format!("table has only {} entries", values.len()),
            })?,
            SequenceGen::Periodic { values } => {
                if values.is_empty() {
                    return Err(Error::Generation {
                        index: n,
                        message: "empty periodic table".into(),
                    });
                }
                values[n % values.len()]
            }
            SequenceGen::Expr { expr } => expr.eval(n)?,
        };
        if !v.is_finite() {
            return Err(Error::Generation {
                index: n,
                message: format!("non-finite value {v}"),
            });
        }
        Ok(v)
    }

    /// Values at `0..=n_max`.
    pub fn values(&self, n_max: usize) -> Result<Vec<f64>> {
        match self {
            SequenceGen::ExpSum { kappa, gamma } => gamma_to_atilde(gamma, *kappa, n_max),
            _ => (0..=n_max).map(|n| self.eval(n)).collect(),
        }
    }

    /// Exact `N`-periodic limit for constant and periodic kinds.
    fn periodic_limit(&self, period: usize) -> Option<Vec<f64>> {
        match self {
            SequenceGen::Constant { value } => Some(vec![*value; period]),
            SequenceGen::Periodic { values } if !values.is_empty() && period % values.len() == 0 => {
                Some((0..period).map(|i| values[i % values.len()]).collect())
            }
            _ => None,
        }
    }
}

/// `ã_n = exp(Σ_{j=1}^{n} κ/γ_j)` for `n = 0..=n_max`.
///
/// The product form keeps each ratio `ã_n/ã_{n−1}` within a few ulp of
/// `exp(κ/γ_n)`.
pub fn gamma_to_atilde(gamma: &SequenceGen, kappa: f64, n_max: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    let mut acc = 1.0_f64;
    for j in 1..=n_max {
        let g = gamma.eval(j)?;
        if g <= 0.0 {
            return Err(Error::Generation {
                index: j,
                message: format!("γ_{j} = {g} is not positive"),
            });
        }
        acc *= (kappa / g).exp();
        if !acc.is_finite() {
            return Err(Error::Generation {
                index: j,
                message: "exp-sum overflowed".into(),
            });
        }
        out.push(acc);
    }
    Ok(out)
}

/// Explicit `(a_n, b_n)` generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplicitSpec {
    pub a: SequenceGen,
    pub b: SequenceGen,
}

/// Entries periodically modulated by `(α, β)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulatedSpec {
    #[serde(rename = "N")]
    pub period: usize,
    pub alpha: PeriodicSeq,
    pub beta: PeriodicSeq,
    pub a: SequenceGen,
    pub b: SequenceGen,
    /// `s_n = lim (α_{n−1}/α_n)·a_n − a_{n−1}` along `n ≡ i mod N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<PeriodicSeq>,
    /// `z_n = lim (β_n/α_n)·a_n − b_n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<PeriodicSeq>,
    /// Scaling sequence for the non-Carleman analysis; window `k` is scaled by `γ_k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<SequenceGen>,
}

/// Periodically blended entries: blocks of `N` asymptotically periodic
/// entries interleaved with two unbounded entries per period of `N+2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlendedSpec {
    #[serde(rename = "N")]
    pub period: usize,
    pub alpha: PeriodicSeq,
    pub beta: PeriodicSeq,
    pub a_tilde: SequenceGen,
    pub b_tilde: SequenceGen,
    pub c_tilde: SequenceGen,
}

/// `a_n = α_n·ã_n·(1 + f_n/γ_n)`, `b_n = (β_n/α_n)·a_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmSpec {
    #[serde(rename = "N")]
    pub period: usize,
    pub alpha: PeriodicSeq,
    pub beta: PeriodicSeq,
    pub a_tilde: SequenceGen,
    pub gamma: SequenceGen,
    pub f: SequenceGen,
    pub kappa: f64,
    /// Periodic limit of `f`; derived from `f` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_limit: Option<PeriodicSeq>,
}

/// Index at which limits of sequences are estimated numerically.
pub const LIMIT_PROBE: usize = 1 << 22;

impl KmSpec {
    /// The `N`-periodic limit 𝔣 of `f` and whether it is exact (as opposed
    /// to read off at a large index).
    pub fn frak_f(&self) -> Result<(PeriodicSeq, bool)> {
        if let Some(f) = &self.f_limit {
            return Ok((f.clone(), true));
        }
        if let Some(v) = self.f.periodic_limit(self.period) {
            return Ok((PeriodicSeq::new(v)?, true));
        }
        let base = (LIMIT_PROBE / self.period) * self.period;
        let v = (0..self.period)
            .map(|i| self.f.eval(base + i))
            .collect::<Result<Vec<_>>>()?;
        Ok((PeriodicSeq::new(v)?, false))
    }
}

impl ModulatedSpec {
    /// Estimates of `(s, z)` read off at window `k` (indices `kN + i`).
    pub fn estimate_sz(&self, k: usize) -> Result<(PeriodicSeq, PeriodicSeq)> {
        let n_per = self.period;
        let mut s = Vec::with_capacity(n_per);
        let mut z = Vec::with_capacity(n_per);
        for i in 0..n_per {
            let n = (k * n_per + i).max(1);
            let (al, alm, be) = (
                self.alpha.get(n as i64),
                self.alpha.get(n as i64 - 1),
                self.beta.get(n as i64),
            );
            let (an, anm, bn) = (self.a.eval(n)?, self.a.eval(n - 1)?, self.b.eval(n)?);
            s.push(alm / al * an - anm);
            z.push(be / al * an - bn);
        }
        // reorder so that entry i corresponds to residue i
        let rot = |v: Vec<f64>| -> Result<PeriodicSeq> {
            let mut out = vec![0.0; n_per];
            for (i, x) in v.into_iter().enumerate() {
                out[((k * n_per + i).max(1)) % n_per] = x;
            }
            PeriodicSeq::new(out)
        };
        Ok((rot(s)?, rot(z)?))
    }
}

/// Tagged Jacobi parameter specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum JacobiSpec {
    Explicit(ExplicitSpec),
    Modulated(ModulatedSpec),
    Blended(BlendedSpec),
    Km(KmSpec),
}

impl JacobiSpec {
    /// Parse and check a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let variant = value
            .get("variant")
            .and_then(|v| v.as_str())
            .ok_or_else(|| spec_err("variant", "missing or not a string"))?
            .to_string();
        fn part<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Result<T> {
            serde_path_to_error::deserialize(v).map_err(|e| {
                let path = e.path().to_string();
                let msg = e.into_inner().to_string();
                let field = if path != "." {
                    path
                } else {
                    // a missing top-level field names itself only in the message
                    msg.split('`').nth(1).unwrap_or_default().to_string()
                };
                spec_err(field, msg)
            })
        }
        let spec = match variant.as_str() {
            "explicit" => JacobiSpec::Explicit(part(value)?),
            "modulated" => JacobiSpec::Modulated(part(value)?),
            "blended" => JacobiSpec::Blended(part(value)?),
            "km" => JacobiSpec::Km(part(value)?),
            other => {
                return Err(spec_err(
                    "variant",
                    format!("unknown variant `{other}` (expected explicit, modulated, blended or km)"),
                ))
            }
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            JacobiSpec::Explicit(_) => "explicit",
            JacobiSpec::Modulated(_) => "modulated",
            JacobiSpec::Blended(_) => "blended",
            JacobiSpec::Km(_) => "km",
        }
    }

    /// Structural validation of the document (independent of generation).
    pub fn check(&self) -> Result<()> {
        let check_periodic = |n: usize, alpha: &PeriodicSeq, beta: &PeriodicSeq| -> Result<()> {
            if n == 0 {
                return Err(spec_err("N", "period must be at least 1"));
            }
            if alpha.period() != n {
                return Err(spec_err("alpha", format!("expected {n} values, got {}", alpha.period())));
            }
            if beta.period() != n {
                return Err(spec_err("beta", format!("expected {n} values, got {}", beta.period())));
            }
            if !alpha.is_positive() {
                return Err(spec_err("alpha", "values must be strictly positive"));
            }
            Ok(())
        };
        match self {
            JacobiSpec::Explicit(_) => Ok(()),
            JacobiSpec::Modulated(m) => {
                check_periodic(m.period, &m.alpha, &m.beta)?;
                for (name, p) in [("s", &m.s), ("z", &m.z)] {
                    if let Some(p) = p {
                        if p.period() != m.period {
                            return Err(spec_err(name, format!("expected {} values", m.period)));
                        }
                    }
                }
                Ok(())
            }
            JacobiSpec::Blended(b) => check_periodic(b.period, &b.alpha, &b.beta),
            JacobiSpec::Km(k) => {
                check_periodic(k.period, &k.alpha, &k.beta)?;
                if !(k.kappa > 0.0) {
                    return Err(spec_err("kappa", "must be a positive real"));
                }
                if let Some(f) = &k.f_limit {
                    if f.period() != k.period {
                        return Err(spec_err("f_limit", format!("expected {} values", k.period)));
                    }
                }
                Ok(())
            }
        }
    }

    /// Period `N` and the periodic model `(α, β)`, if the variant has one.
    pub fn periodic(&self) -> Option<(usize, &PeriodicSeq, &PeriodicSeq)> {
        match self {
            JacobiSpec::Explicit(_) => None,
            JacobiSpec::Modulated(m) => Some((m.period, &m.alpha, &m.beta)),
            JacobiSpec::Blended(b) => Some((b.period, &b.alpha, &b.beta)),
            JacobiSpec::Km(k) => Some((k.period, &k.alpha, &k.beta)),
        }
    }

    /// Length of a transfer-matrix window: `N+2` for blended entries, `N` otherwise.
    pub fn window_len(&self) -> usize {
        match self {
            JacobiSpec::Explicit(_) => 1,
            JacobiSpec::Blended(b) => b.period + 2,
            _ => self.periodic().map(|p| p.0).unwrap_or(1),
        }
    }

    /// Generate `a[0..=n_max]`, `b[0..=n_max]`.
    pub fn build(&self, n_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let (a, b) = match self {
            JacobiSpec::Explicit(e) => (e.a.values(n_max)?, e.b.values(n_max)?),
            JacobiSpec::Modulated(m) => (m.a.values(n_max)?, m.b.values(n_max)?),
            JacobiSpec::Blended(bl) => {
                let n_per = bl.period;
                let at = bl.a_tilde.values(n_max)?;
                let bt = bl.b_tilde.values(n_max)?;
                let ct = bl.c_tilde.values(n_max)?;
                let mut a = Vec::with_capacity(n_max + 1);
                let mut b = Vec::with_capacity(n_max + 1);
                for n in 0..=n_max {
                    let (k, i) = (n / (n_per + 2), n % (n_per + 2));
                    if i < n_per {
                        a.push(at[k * n_per + i]);
                        b.push(bt[k * n_per + i]);
                    } else {
                        a.push(ct[2 * k + (i - n_per)]);
                        b.push(0.0);
                    }
                }
                (a, b)
            }
            JacobiSpec::Km(km) => {
                let at = km.a_tilde.values(n_max)?;
                let f = km.f.values(n_max)?;
                let g = km.gamma.values(n_max)?;
                let mut a = Vec::with_capacity(n_max + 1);
                let mut b = Vec::with_capacity(n_max + 1);
                for n in 0..=n_max {
                    if g[n] <= 0.0 {
                        return Err(Error::Generation {
                            index: n,
                            message: format!("γ_{n} = {} is not positive", g[n]),
                        });
                    }
                    let (al, be) = (km.alpha.get(n as i64), km.beta.get(n as i64));
                    let an = al * at[n] * (1.0 + f[n] / g[n]);
                    a.push(an);
                    b.push(be / al * an);
                }
                (a, b)
            }
        };
        for (n, (&an, &bn)) in a.iter().zip(&b).enumerate() {
            if !(an > 0.0) || !an.is_finite() {
                return Err(Error::Generation {
                    index: n,
                    message: format!("a_{n} = {an} is not a positive real"),
                });
            }
            if !bn.is_finite() {
                return Err(Error::Generation {
                    index: n,
                    message: format!("b_{n} = {bn} is not finite"),
                });
            }
        }
        Ok((a, b))
    }

    /// Report residuals of the defining limits at probe indices.
    pub fn validate(&self, probe_n: usize) -> ValidationReport {
        validate(self, probe_n)
    }
}

/// Residuals measured at one probe index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub n: usize,
    pub a_n: f64,
    /// Residual of the ratio condition on `a`, where applicable.
    pub a_residual: Option<f64>,
    /// Residual of the ratio condition on `b`, where applicable.
    pub b_residual: Option<f64>,
}

/// Heuristic validation report; never a hard failure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub variant: String,
    pub probes: Vec<ProbeRow>,
    pub flags: Vec<String>,
    pub error: Option<String>,
    pub note: String,
}

/// Residuals above this at the last probe are flagged.
pub const VALIDATE_THRESHOLD: f64 = 1e-2;

fn probe_indices(probe_n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = [probe_n / 100, probe_n / 10, probe_n]
        .into_iter()
        .filter(|&n| n >= 2)
        .collect();
    v.dedup();
    v
}

fn validate(spec: &JacobiSpec, probe_n: usize) -> ValidationReport {
    let mut rep = ValidationReport {
        variant: spec.variant_name().into(),
        probes: Vec::new(),
        flags: Vec::new(),
        error: None,
        note: format!(
            "heuristic: residuals above {VALIDATE_THRESHOLD} at the largest probe, or residuals \
             that grow between probes, are flagged; finite data cannot prove a limit"
        ),
    };
    if let Err(e) = spec.check() {
        rep.error = Some(e.to_string());
        return rep;
    }
    let probes = probe_indices(probe_n);
    let row = |n: usize| -> Result<ProbeRow> {
        let ni = n as i64;
        match spec {
            JacobiSpec::Explicit(e) => Ok(ProbeRow {
                n,
                a_n: e.a.eval(n)?,
                a_residual: None,
                b_residual: None,
            }),
            JacobiSpec::Modulated(m) => {
                let (an, anm, bn) = (m.a.eval(n)?, m.a.eval(n - 1)?, m.b.eval(n)?);
                Ok(ProbeRow {
                    n,
                    a_n: an,
                    a_residual: Some((anm / an - m.alpha.get(ni - 1) / m.alpha.get(ni)).abs()),
                    b_residual: Some((bn / an - m.beta.get(ni) / m.alpha.get(ni)).abs()),
                })
            }
            JacobiSpec::Blended(bl) => {
                // ã and b̃ must approach (α, β); c̃ must satisfy c̃_{2k+1}/c̃_{2k} → 1
                let nb = n - n % bl.period.max(1);
                let at = bl.a_tilde.eval(nb)?;
                let bt = bl.b_tilde.eval(nb)?;
                let k = n / 2;
                let c0 = bl.c_tilde.eval(2 * k)?;
                let c1 = bl.c_tilde.eval(2 * k + 1)?;
                Ok(ProbeRow {
                    n,
                    a_n: c0,
                    a_residual: Some(
                        (at - bl.alpha.get(nb as i64)).abs().max((c1 / c0 - 1.0).abs()),
                    ),
                    b_residual: Some((bt - bl.beta.get(nb as i64)).abs()),
                })
            }
            JacobiSpec::Km(km) => {
                let g = km.gamma.eval(n)?;
                let (at, atm) = (km.a_tilde.eval(n)?, km.a_tilde.eval(n - 1)?);
                let (frak, _) = km.frak_f()?;
                Ok(ProbeRow {
                    n,
                    a_n: at,
                    a_residual: Some((g * (1.0 - atm / at) - km.kappa).abs()),
                    b_residual: Some((km.f.eval(n)? - frak.get(ni)).abs()),
                })
            }
        }
    };
    for &n in &probes {
        match row(n) {
            Ok(r) => rep.probes.push(r),
            Err(e) => {
                rep.error = Some(e.to_string());
                return rep;
            }
        }
    }
    if let (Some(first), Some(last)) = (rep.probes.first(), rep.probes.last()) {
        if rep.probes.len() > 1 && !(last.a_n > first.a_n) {
            rep.flags.push(format!("a_n does not grow between n={} and n={}", first.n, last.n));
        }
        for (name, get) in [
            ("a", (|r: &ProbeRow| r.a_residual) as fn(&ProbeRow) -> Option<f64>),
            ("b", |r: &ProbeRow| r.b_residual),
        ] {
            let vals: Vec<f64> = rep.probes.iter().filter_map(get).collect();
            if let Some(&v) = vals.last() {
                if !(v <= VALIDATE_THRESHOLD) {
                    rep.flags.push(format!(
                        "{name}-residual {v:.3e} at n={} exceeds {VALIDATE_THRESHOLD}",
                        last.n
                    ));
                } else if vals.len() > 1 && v > vals[0] && v > 1e-8 {
                    rep.flags.push(format!("{name}-residual grows between probes"));
                }
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_modulated(b: SequenceGen, beta: f64) -> JacobiSpec {
        JacobiSpec::Modulated(ModulatedSpec {
            period: 1,
            alpha: PeriodicSeq::constant(1.0, 1),
            beta: PeriodicSeq::constant(beta, 1),
            a: SequenceGen::power(1.0),
            b,
            s: None,
            z: None,
            gamma: None,
        })
    }

    #[test]
    fn explicit_build() {
        let s = JacobiSpec::Explicit(ExplicitSpec {
            a: SequenceGen::power(1.0),
            b: SequenceGen::constant(0.0),
        });
        let (a, b) = s.build(3).unwrap();
        assert_eq!(a, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(b, vec![0.0; 4]);
    }

    #[test]
    fn km_with_zero_f_reduces_to_atilde() {
        let s = JacobiSpec::Km(KmSpec {
            period: 1,
            alpha: PeriodicSeq::constant(1.0, 1),
            beta: PeriodicSeq::constant(0.0, 1),
            a_tilde: SequenceGen::power(2.0),
            gamma: SequenceGen::power(1.0),
            f: SequenceGen::constant(0.0),
            kappa: 2.0,
            f_limit: None,
        });
        let (a, b) = s.build(9).unwrap();
        assert_eq!(a[9], 100.0);
        assert_eq!(b[9], 0.0);
    }

    #[test]
    fn blended_index_layout() {
        let s = JacobiSpec::Blended(BlendedSpec {
            period: 1,
            alpha: PeriodicSeq::constant(1.0, 1),
            beta: PeriodicSeq::constant(0.0, 1),
            a_tilde: SequenceGen::constant(1.0),
            b_tilde: SequenceGen::constant(0.0),
            c_tilde: SequenceGen::power(1.2),
        });
        let (a, b) = s.build(20).unwrap();
        // k = 2, i = 1 (N = 1): the slot for c̃_{2k}
        assert_eq!(a[2 * 3 + 1], 5f64.powf(1.2));
        assert_eq!(a[2 * 3 + 2], 6f64.powf(1.2));
        assert_eq!(a[2 * 3], 1.0);
        assert_eq!(b[2 * 3 + 1], 0.0);
    }

    #[test]
    fn exp_sum_small_cases() {
        let a = gamma_to_atilde(&SequenceGen::constant(1.0), 1.0, 2).unwrap();
        assert_eq!(a[0], 1.0);
        assert!((a[1] - 1f64.exp()).abs() < 1e-15);
        assert!((a[2] - 2f64.exp()).abs() < 4e-15 * a[2]);
        let a = gamma_to_atilde(&SequenceGen::Power { exponent: 1.0, coef: 1.0, shift: 0.0 }, 1.0, 3).unwrap();
        let expect = (11.0f64 / 6.0).exp();
        assert!((a[3] - expect).abs() < 8.0 * f64::EPSILON * expect);
    }

    #[test]
    fn exp_sum_recovers_kappa() {
        let g = SequenceGen::Power { exponent: 1.0, coef: 1.0, shift: 0.0 };
        let a = gamma_to_atilde(&g, 2.0, 1000).unwrap();
        let est = 1000.0 * (1.0 - a[999] / a[1000]);
        assert!((est - 2.0).abs() < 0.003, "{est}");
        assert!(a.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn nonpositive_entry_names_index() {
        let s = JacobiSpec::Explicit(ExplicitSpec {
            a: SequenceGen::expr("3 - n").unwrap(),
            b: SequenceGen::constant(0.0),
        });
        match s.build(10) {
            Err(Error::Generation { index, .. }) => assert_eq!(index, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn expression_generator() {
        let g = SequenceGen::expr("(n + 1)^1.5").unwrap();
        assert!((g.eval(3).unwrap() - 8.0).abs() < 1e-12);
        let g = SequenceGen::expr("n / 2").unwrap();
        assert_eq!(g.eval(1).unwrap(), 0.5);
        assert!(SequenceGen::expr("m + 1").is_err());
    }

    #[test]
    fn validate_examples() {
        let rep = free_modulated(SequenceGen::constant(0.0), 0.0).validate(10_000);
        assert!(rep.flags.is_empty(), "{:?}", rep.flags);
        let last = rep.probes.last().unwrap();
        assert!(last.a_residual.unwrap() < 1e-3 && last.b_residual.unwrap() < 1e-3);

        let rep = free_modulated(SequenceGen::power(1.0), 1.0).validate(10_000);
        assert!(rep.probes.iter().all(|r| r.b_residual == Some(0.0)));

        let rep = free_modulated(SequenceGen::Power { exponent: 2.0, coef: 1.0, shift: 0.0 }, 0.0)
            .validate(10_000);
        assert!(!rep.flags.is_empty());
        let last = rep.probes.last().unwrap();
        assert!((last.b_residual.unwrap() / last.n as f64 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn json_roundtrip_and_field_errors() {
        let txt = r#"{"variant":"km","N":2,"alpha":[1,1],"beta":[0,0],
            "a_tilde":{"kind":"power","exponent":2},
            "gamma":{"kind":"power","exponent":1},
            "f":{"kind":"periodic","values":[0,1.5]},"kappa":2}"#;
        let s = JacobiSpec::from_json(txt).unwrap();
        let back = JacobiSpec::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);

        let bad = r#"{"variant":"modulated","N":2,"alpha":[1,-1],"beta":[0,0],
            "a":{"kind":"power","exponent":1},"b":{"kind":"constant","value":0}}"#;
        match JacobiSpec::from_json(bad) {
            Err(Error::Spec { field, .. }) => assert_eq!(field, "alpha"),
            other => panic!("{other:?}"),
        }
        let missing = r#"{"variant":"explicit","a":{"kind":"power"},"b":{"kind":"constant","value":0}}"#;
        match JacobiSpec::from_json(missing) {
            Err(Error::Spec { field, message }) => {
                assert_eq!(field, "a");
                assert!(message.contains("exponent"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let broken = "{\"variant\":\"explicit\",\n\"a\": [1,}";
        let msg = JacobiSpec::from_json(broken).unwrap_err().to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn frak_f_from_periodic_and_numeric() {
        let mut km = KmSpec {
            period: 2,
            alpha: PeriodicSeq::constant(1.0, 2),
            beta: PeriodicSeq::constant(0.0, 2),
            a_tilde: SequenceGen::power(2.0),
            gamma: SequenceGen::power(1.0),
            f: SequenceGen::Periodic { values: vec![0.0, 1.5] },
            kappa: 2.0,
            f_limit: None,
        };
        assert_eq!(km.frak_f().unwrap(), (PeriodicSeq::new(vec![0.0, 1.5]).unwrap(), true));
        km.f = SequenceGen::expr("1.5 * (n % 2) + 1 / (n + 1)").unwrap();
        let (f, exact) = km.frak_f().unwrap();
        assert!(!exact);
        assert!((f.get(1) - 1.5).abs() < 1e-6 && f.get(0).abs() < 1e-6);
    }
}
