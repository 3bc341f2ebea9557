//! Finite sections of Jacobi matrices: Sturm counts and bisection.
//!
//! Finite-section spectra only mirror the essential spectrum heuristically
//! (truncation can create spurious edge eigenvalues), so the empirical
//! checks here work with counts rather than individual eigenvalues.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::Interval;
use crate::error::{Error, Result};
use crate::model::JacobiSpec;

/// Principal `n×n` truncation: diagonal `d_k = b_k`, off-diagonal `e_k = a_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalSection {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pivmin: f64,
}

impl TridiagonalSection {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::InvalidArgument("empty section".into()));
        }
        if e.len() + 1 != d.len() {
            return Err(Error::InvalidArgument(format!(
                "{} diagonal entries need {} off-diagonal ones, got {}",
                d.len(),
                d.len() - 1,
                e.len()
            )));
        }
        if let Some(k) = e.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("e[{k}] = {} is not positive", e[k])));
        }
        if let Some(k) = d.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("d[{k}] is not finite")));
        }
        let emax = e.iter().fold(1.0_f64, |m, v| m.max(v * v));
        Ok(TridiagonalSection {
            d,
            e,
            pivmin: f64::MIN_POSITIVE * emax,
        })
    }

    /// Section of size `n` from entry arrays covering `0..n`.
    pub fn from_entries(a: &[f64], b: &[f64], n: usize) -> Result<Self> {
        if n == 0 || b.len() < n || a.len() + 1 < n {
            return Err(Error::InvalidArgument(format!("entries too short for a section of size {n}")));
        }
        TridiagonalSection::new(b[..n].to_vec(), a[..n - 1].to_vec())
    }

    /// Section of size `n` generated from a spec.
    pub fn from_spec(spec: &JacobiSpec, n: usize) -> Result<Self> {
        let (a, b) = spec.build(n.max(1))?;
        TridiagonalSection::from_entries(&a, &b, n)
    }

    pub fn size(&self) -> usize {
        self.d.len()
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.size();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..n {
            let r = if k > 0 { self.e[k - 1] } else { 0.0 } + if k + 1 < n { self.e[k] } else { 0.0 };
            lo = lo.min(self.d[k] - r);
            hi = hi.max(self.d[k] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues below `x`.
    ///
    /// Uses the ratio form `q_k = d_k − x − e_{k−1}²/q_{k−1}` of the Sturm
    /// recurrence, which neither overflows nor underflows; tiny pivots are
    /// replaced by `−pivmin`.
    pub fn sturm_count(&self, x: f64) -> usize {
        if x == f64::INFINITY {
            return self.size();
        }
        if x == f64::NEG_INFINITY {
            return 0;
        }
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q.abs() < self.pivmin {
            q = -self.pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for k in 1..self.size() {
            let e = self.e[k - 1];
            q = self.d[k] - x - e * e / q;
            if q.abs() < self.pivmin {
                q = -self.pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Number of eigenvalues in the open interval `iv`.
    pub fn count_in(&self, iv: &Interval) -> usize {
        if !(iv.lo < iv.hi) {
            return 0;
        }
        // count(x) counts λ < x; eigenvalues exactly at lo are excluded
        // by shifting the lower end to the next float
        let lo = if iv.lo.is_finite() { next_up(iv.lo) } else { iv.lo };
        self.sturm_count(iv.hi).saturating_sub(self.sturm_count(lo))
    }

    /// Default bisection tolerance `1e-10·spread`.
    pub fn default_tol(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        1e-10 * (hi - lo).max(f64::MIN_POSITIVE)
    }

    /// Eigenvalues in `[lo, hi]`, ascending, each located to `tol`.
    pub fn eigs_in(&self, lo: f64, hi: f64, tol: f64) -> Result<Vec<f64>> {
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!("empty range [{lo}, {hi}]")));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        let (glo, ghi) = self.gershgorin();
        let (lo, hi) = (lo.max(glo - tol), hi.min(ghi + tol));
        if lo > hi {
            return Ok(Vec::new());
        }
        let k0 = self.sturm_count(lo);
        let k1 = self.sturm_count(next_up(hi));
        let find = |k: usize| -> f64 {
            // smallest x with count(x) > k lies in (l, u]
            let (mut l, mut u) = (lo, next_up(hi));
            while u - l > tol {
                let mid = 0.5 * (l + u);
                if mid <= l || mid >= u {
                    break;
                }
                if self.sturm_count(mid) > k {
                    u = mid;
                } else {
                    l = mid;
                }
            }
            0.5 * (l + u)
        };
        let mut out: Vec<f64> = with_pool(|| (k0..k1).into_par_iter().map(find).collect());
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(out)
    }
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

/// Run `f` on a pool capped by `JACSPEC_THREADS` when that is set.
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    match std::env::var("JACSPEC_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

/// Counts of one section size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccumulationRow {
    pub size: usize,
    /// Eigenvalues in `Λ_ε ∩ window`, Λ shrunk by ε.
    pub in_count: usize,
    /// Eigenvalues in `window` at distance more than ε from the closure of Λ.
    pub out_count: usize,
}

/// `Λ_ε ∩ window` and `window \ (Λ̄ + ε)` as interval lists.
pub fn margin_sets(lambda: &[Interval], window: &Interval, eps: f64) -> (Vec<Interval>, Vec<Interval>) {
    let clip = |iv: Interval| Interval::new(iv.lo.max(window.lo), iv.hi.min(window.hi));
    let inside: Vec<Interval> = lambda
        .iter()
        .map(|iv| clip(Interval::new(iv.lo + eps, iv.hi - eps)))
        .filter(|iv| iv.lo < iv.hi)
        .collect();
    let mut outside = Vec::new();
    let mut cursor = window.lo;
    for iv in lambda {
        let (lo, hi) = (iv.lo - eps, iv.hi + eps);
        if lo > cursor {
            outside.push(Interval::new(cursor, lo.min(window.hi)));
        }
        cursor = cursor.max(hi);
    }
    if cursor < window.hi {
        outside.push(Interval::new(cursor, window.hi));
    }
    outside.retain(|iv| iv.lo < iv.hi);
    (inside, outside)
}

/// Empirical accumulation of finite-section spectra inside and outside Λ.
///
/// `lambda` is the classifier's Λ (sorted, disjoint). This is a heuristic
/// picture of the essential spectrum, not a verification.
pub fn accumulation_profile(
    spec: &JacobiSpec,
    sizes: &[usize],
    window: &Interval,
    eps: f64,
    lambda: &[Interval],
) -> Result<Vec<AccumulationRow>> {
    let max = sizes.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Ok(Vec::new());
    }
    let (a, b) = spec.build(max)?;
    let (inside, outside) = margin_sets(lambda, window, eps);
    with_pool(|| {
        sizes
            .par_iter()
            .map(|&n| {
                let t = TridiagonalSection::from_entries(&a, &b, n)?;
                Ok(AccumulationRow {
                    size: n,
                    in_count: inside.iter().map(|iv| t.count_in(iv)).sum(),
                    out_count: outside.iter().map(|iv| t.count_in(iv)).sum(),
                })
            })
            .collect()
    })
}

/// Nearest-neighbour gaps of a sorted list.
pub fn gap_profile(eigs: &[f64]) -> Result<Vec<f64>> {
    if let Some(k) = eigs.windows(2).position(|w| !(w[0] <= w[1])) {
        return Err(Error::Unsorted { index: k + 1 });
    }
    Ok(eigs.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Gap between the consecutive eigenvalues closest to `x` on either side.
pub fn gap_at(eigs: &[f64], x: f64) -> Option<f64> {
    if eigs.len() < 2 {
        return None;
    }
    let k = eigs.partition_point(|&v| v < x).clamp(1, eigs.len() - 1);
    Some(eigs[k] - eigs[k - 1])
}
