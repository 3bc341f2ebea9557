//! Finite differences and numerical diagnostics for Stolz classes.
//!
//! A sequence belongs to `𝒟_{r,s}` when `Σ_n ‖Δ^j x_n‖^{r/(j+s)} < ∞` for
//! `j = 1..=r−s`. Membership is asymptotic, so diagnostics are three-valued
//! and explicitly heuristic: an order is consistent when its dyadic block
//! sums decay with fitted ratio below 0.9, violated when they do not decay
//! at all (ratio ≥ 0.99) or the sequence itself appears unbounded.

use std::ops::Sub;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{Mat2, Scalar};
use crate::series::{block_sums, geometric_ratio, ls_slope};

/// Fitted block ratio below which an order counts as consistent.
pub const CONSISTENT_RATIO: f64 = 0.9;
/// Fitted block ratio at or above which an order counts as violated.
pub const VIOLATED_RATIO: f64 = 0.99;

/// Sequences whose elements carry a norm (2-norm for matrices).
pub trait Normed {
    fn norm_value(&self) -> f64;
}

impl Normed for f64 {
    fn norm_value(&self) -> f64 {
        self.abs()
    }
}

impl Normed for Complex64 {
    fn norm_value(&self) -> f64 {
        self.norm()
    }
}

impl<T: Scalar> Normed for Mat2<T> {
    fn norm_value(&self) -> f64 {
        self.norm()
    }
}

/// `Δ^j x`: `Δx_n = x_{n+1} − x_n`, applied `j` times.
pub fn diff<T: Copy + Sub<Output = T>>(x: &[T], j: usize) -> Result<Vec<T>> {
    if x.len() < j {
        return Err(Error::InvalidArgument(format!(
            "difference of order {j} needs at least {j} terms, got {}",
            x.len()
        )));
    }
    let mut cur = x.to_vec();
    for _ in 0..j {
        cur = cur.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(cur)
}

/// `(x_{nN+i})_n`.
pub fn strided<T: Clone>(x: &[T], period: usize, i: usize) -> Result<Vec<T>> {
    if period == 0 || i >= period {
        return Err(Error::InvalidArgument(format!("need 0 ≤ i < N, got i = {i}, N = {period}")));
    }
    Ok(x.iter().skip(i).step_by(period).cloned().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StolzVerdict {
    Consistent,
    Inconclusive,
    Violated,
}

/// Partial sums of one summability condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderSums {
    /// Difference order; 0 for the `Σ‖x_n‖^{r/s}` condition.
    pub order: usize,
    pub exponent: f64,
    /// Indices `n` at which partial sums are reported (dyadic, then the last).
    pub checkpoints: Vec<usize>,
    pub partial_sums: Vec<f64>,
    pub block_sums: Vec<f64>,
    pub fitted_ratio: Option<f64>,
    pub verdict: StolzVerdict,
}

/// Diagnostic for `𝒟_{r,s}` membership.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StolzDiagnostic {
    pub r: usize,
    pub s: usize,
    pub terms: usize,
    pub orders: Vec<OrderSums>,
    /// Present for `s > 0`: the condition `Σ‖x_n‖^{r/s} < ∞` of the 𝒟⁰ variant.
    pub zero_class: Option<OrderSums>,
    pub sup_norm: f64,
    pub bounded: bool,
    pub verdict: StolzVerdict,
    pub note: String,
}

const NOTE: &str = "heuristic: dyadic block sums with fitted ratio < 0.9 are consistent, \
                    ratio ≥ 0.99 or unbounded terms are violations; finite data cannot prove membership";

fn order_sums(order: usize, exponent: f64, terms: &[f64]) -> OrderSums {
    let mut checkpoints = Vec::new();
    let mut partial_sums = Vec::new();
    let mut acc = 0.0;
    for (m, t) in terms.iter().enumerate() {
        acc += t;
        let n = m + 1;
        if (n + 1).is_power_of_two() || n == terms.len() {
            checkpoints.push(n);
            partial_sums.push(acc);
        }
    }
    let blocks = block_sums(terms);
    let fitted_ratio = geometric_ratio(&blocks);
    let verdict = match fitted_ratio {
        Some(r) if r < CONSISTENT_RATIO => StolzVerdict::Consistent,
        Some(r) if r >= VIOLATED_RATIO => StolzVerdict::Violated,
        _ => StolzVerdict::Inconclusive,
    };
    OrderSums {
        order,
        exponent,
        checkpoints,
        partial_sums,
        block_sums: blocks,
        fitted_ratio,
        verdict,
    }
}

/// Boundedness probe: growth of per-block suprema on a log scale.
fn bounded_probe(norms: &[f64]) -> (f64, bool) {
    let sup = norms.iter().fold(0.0_f64, |a, &b| a.max(b));
    let mut sups = Vec::new();
    let mut k = 0;
    while (1usize << (k + 1)) - 1 <= norms.len() {
        let lo = (1usize << k) - 1;
        let hi = (1usize << (k + 1)) - 1;
        sups.push(norms[lo..hi].iter().fold(0.0_f64, |a, &b| a.max(b)));
        k += 1;
    }
    if !sup.is_finite() {
        return (sup, false);
    }
    if sups.len() < 3 {
        return (sup, true);
    }
    let start = sups.len().saturating_sub(6);
    let ks: Vec<f64> = (start..sups.len()).map(|k| k as f64).collect();
    let ls: Vec<f64> = sups[start..].iter().map(|s| s.max(1e-300).log2()).collect();
    let slope = ls_slope(&ks, &ls).unwrap_or(0.0);
    (sup, slope <= 0.1)
}

fn combine(parts: &[StolzVerdict], bounded: bool) -> StolzVerdict {
    if !bounded || parts.contains(&StolzVerdict::Violated) {
        StolzVerdict::Violated
    } else if parts.iter().all(|v| *v == StolzVerdict::Consistent) {
        StolzVerdict::Consistent
    } else {
        StolzVerdict::Inconclusive
    }
}

/// Diagnostic of `x ∈ 𝒟_{r,s}` over the first `n_max` terms.
pub fn class_diagnostic<T>(x: &[T], r: usize, s: usize, n_max: usize) -> Result<StolzDiagnostic>
where
    T: Normed + Copy + Sub<Output = T>,
{
    if r == 0 || s >= r {
        return Err(Error::InvalidArgument(format!("need 0 ≤ s ≤ r − 1, got r = {r}, s = {s}")));
    }
    let x = &x[..x.len().min(n_max)];
    let norms: Vec<f64> = x.iter().map(|v| v.norm_value()).collect();
    let (sup_norm, bounded) = bounded_probe(&norms);
    let mut orders = Vec::new();
    for j in 1..=r - s {
        let p = r as f64 / (j + s) as f64;
        let terms: Vec<f64> = diff(x, j)?.iter().map(|d| d.norm_value().powf(p)).collect();
        orders.push(order_sums(j, p, &terms));
    }
    let zero_class = (s > 0).then(|| {
        let p = r as f64 / s as f64;
        let terms: Vec<f64> = norms.iter().map(|v| v.powf(p)).collect();
        order_sums(0, p, &terms)
    });
    let mut parts: Vec<StolzVerdict> = orders.iter().map(|o| o.verdict).collect();
    if let Some(z) = &zero_class {
        parts.push(z.verdict);
    }
    Ok(StolzDiagnostic {
        r,
        s,
        terms: x.len(),
        verdict: combine(&parts, bounded),
        orders,
        zero_class,
        sup_norm,
        bounded,
        note: NOTE.into(),
    })
}

/// Diagnostic of the weighted condition `Σ ‖Δx_n‖·w_n < ∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedDiagnostic {
    pub sums: OrderSums,
    pub verdict: StolzVerdict,
    pub note: String,
}

/// `Σ_{n ≤ n_max} ‖Δx_n‖·w_n` with block report. `w[m]` weights `Δx[m]`.
pub fn weighted_diagnostic<T>(x: &[T], w: &[f64], n_max: usize) -> Result<WeightedDiagnostic>
where
    T: Normed + Copy + Sub<Output = T>,
{
    if let Some((m, &bad)) = w.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::InvalidArgument(format!("weight w[{m}] = {bad} is not positive")));
    }
    let d = diff(&x[..x.len().min(n_max.saturating_add(1))], 1)?;
    if w.len() < d.len() {
        return Err(Error::InvalidArgument(format!(
            "need {} weights, got {}",
            d.len(),
            w.len()
        )));
    }
    let terms: Vec<f64> = d.iter().zip(w).map(|(v, wn)| v.norm_value() * wn).collect();
    let sums = order_sums(1, 1.0, &terms);
    Ok(WeightedDiagnostic {
        verdict: sums.verdict,
        sums,
        note: NOTE.into(),
    })
}
