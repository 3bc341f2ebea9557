//! Levinson-type diagonalization and asymptotics of generalized eigenvectors.
//!
//! [`split_diagonalize`] is the one-step re-diagonalization of a 2×2 matrix
//! with distinct eigenvalues; [`cascade`] iterates it along a sequence of
//! window matrices. The recursion solvers produce actual solutions of the
//! three-term recurrence: dominant solutions by forward recursion, recessive
//! ones by backward (Miller-style) recursion validated by buffer doubling.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{CMat2, Mat2, Scalar};
use crate::series::{summarize, SeriesVerdict};
use crate::stolz::{class_diagnostic, StolzVerdict};

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// Default relative near-degeneracy floor: `δ_floor = 1e-8·‖W‖`.
pub const DELTA_FLOOR_REL: f64 = 1e-8;

/// Eigenvalue structure of a diagonalized matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Two distinct real eigenvalues, `μ+` the one of larger modulus.
    RealSplit,
    /// A complex pair, `μ+` the one with positive imaginary part.
    ComplexPair,
}

/// Which eigenvector normalisation is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// `Y = [[1, v−], [v+, 1]]`, tending to `Id` as the couplings vanish.
    Direct,
    /// `Y = J·Y′` for the matrix conjugated by `J = [[0,1],[1,0]]`.
    Exchanged,
}

/// Result of one re-diagonalization `W = Y·diag(μ+, μ−)·Y⁻¹`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagStep {
    pub mu_plus: C,
    pub mu_minus: C,
    pub y: CMat2,
    pub mode: Mode,
    /// Sign of the branch of `√discr` taken for `μ+`.
    pub sigma: f64,
    pub pairing: Pairing,
    pub residual: f64,
}

impl DiagStep {
    pub fn d(&self) -> CMat2 {
        Mat2::diag(self.mu_plus, self.mu_minus)
    }
}

fn floor_of(w: &CMat2, delta_floor: Option<f64>) -> f64 {
    delta_floor.unwrap_or(DELTA_FLOOR_REL * w.norm())
}

struct Eigen {
    mu_plus: C,
    mu_minus: C,
    mode: Mode,
    sigma: f64,
}

fn eigen(w: &CMat2, delta: f64) -> std::result::Result<Eigen, f64> {
    let d = w.discr();
    if d.norm() < delta * delta {
        return Err(d.norm());
    }
    let tr = w.tr();
    let real_disc = d.im.abs() <= 1e-10 * d.norm();
    if real_disc && d.re < 0.0 {
        let root = C::new(0.0, (-d.re).sqrt());
        Ok(Eigen {
            mu_plus: (tr + root) / 2.0,
            mu_minus: (tr - root) / 2.0,
            mode: Mode::ComplexPair,
            sigma: 1.0,
        })
    } else {
        let root = if real_disc { c(d.re.sqrt()) } else { d.sqrt() };
        let s = if tr.re < 0.0 { -1.0 } else { 1.0 };
        Ok(Eigen {
            mu_plus: (tr + root * s) / 2.0,
            mu_minus: (tr - root * s) / 2.0,
            mode: Mode::RealSplit,
            sigma: s,
        })
    }
}

/// Smallest denominator of the eigenvector formulas for a pairing.
fn pairing_margin(w: &CMat2, e: &Eigen, p: Pairing) -> f64 {
    let [[w11, _], [_, w22]] = w.e;
    match p {
        Pairing::Direct => (e.mu_plus - w22).norm().min((e.mu_minus - w11).norm()),
        Pairing::Exchanged => (e.mu_plus - w11).norm().min((e.mu_minus - w22).norm()),
    }
}

fn build_step(w: &CMat2, e: Eigen, p: Pairing) -> DiagStep {
    let [[w11, w12], [w21, w22]] = w.e;
    let one = c(1.0);
    let y = match p {
        Pairing::Direct => Mat2::new(one, w12 / (e.mu_minus - w11), w21 / (e.mu_plus - w22), one),
        Pairing::Exchanged => Mat2::new(w12 / (e.mu_plus - w11), one, one, w21 / (e.mu_minus - w22)),
    };
    let d = Mat2::diag(e.mu_plus, e.mu_minus);
    let residual = match y.inv() {
        Some(yi) => (*w - y * d * yi).norm() / w.norm().max(f64::MIN_POSITIVE),
        None => f64::INFINITY,
    };
    DiagStep {
        mu_plus: e.mu_plus,
        mu_minus: e.mu_minus,
        y,
        mode: e.mode,
        sigma: e.sigma,
        pairing: p,
        residual,
    }
}

/// Diagonalize `W`, preferring the direct pairing when its denominators are
/// at least `δ_floor/2`; the exchanged pairing is used otherwise.
pub fn split_diagonalize<T: Scalar>(w: &Mat2<T>, delta_floor: Option<f64>) -> Result<DiagStep> {
    split_with_pairing(w, delta_floor, None)
}

/// As [`split_diagonalize`] with an optional forced pairing.
pub fn split_with_pairing<T: Scalar>(
    w: &Mat2<T>,
    delta_floor: Option<f64>,
    pairing: Option<Pairing>,
) -> Result<DiagStep> {
    let w = w.to_complex();
    let delta = floor_of(&w, delta_floor);
    let e = eigen(&w, delta).map_err(|d| Error::NearDegenerate {
        stage: 0,
        window: 0,
        discr: d,
    })?;
    let p = match pairing {
        Some(p) => p,
        None => {
            if pairing_margin(&w, &e, Pairing::Direct) >= delta / 2.0 {
                Pairing::Direct
            } else {
                Pairing::Exchanged
            }
        }
    };
    Ok(build_step(&w, e, p))
}

/// One stage of the cascade.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub stage: usize,
    /// Window index of the first entry (`= stage`).
    pub offset: usize,
    pub pairing: Pairing,
    pub c: Vec<CMat2>,
    pub d: Vec<[C; 2]>,
    pub modes: Vec<Mode>,
    /// `‖W − C·D·C⁻¹‖/‖W‖` per window.
    pub residuals: Vec<f64>,
}

/// Stages `0..r` of the re-diagonalization cascade and the accumulated
/// `Q_m = C_{m,0}⋯C_{m,r−1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeState {
    pub r: usize,
    pub stages: Vec<Stage>,
    /// `q[m − (r−1)] = Q_m`.
    pub q: Vec<CMat2>,
}

impl CascadeState {
    pub fn c(&self, n: usize, k: usize) -> Option<CMat2> {
        let s = self.stages.get(k)?;
        s.c.get(n.checked_sub(s.offset)?).copied()
    }

    pub fn d(&self, n: usize, k: usize) -> Option<[C; 2]> {
        let s = self.stages.get(k)?;
        s.d.get(n.checked_sub(s.offset)?).copied()
    }

    pub fn q(&self, m: usize) -> Option<CMat2> {
        self.q.get(m.checked_sub(self.r - 1)?).copied()
    }

    /// Largest stage residual over all windows.
    pub fn max_residual(&self) -> f64 {
        self.stages
            .iter()
            .flat_map(|s| s.residuals.iter().copied())
            .fold(0.0, f64::max)
    }

    /// A solution `Φ_{n+1} = X_nΦ_n` normalized by `∏_{j<n} μ_j` with `μ_j` the
    /// final-stage diagonal entry of `branch` (0 for `μ+`, 1 for `μ−`).
    ///
    /// Returns `(n_first, Φ̃, μ)` with `Φ̃[k]` at window index `n_first + k`
    /// and `μ[k] = μ_{n_first+k}`. The dominant branch of a real split is
    /// propagated forward from `Φ̃ = Q e`; every other branch backward from
    /// the last window, so the normalized vector tends to `Q_∞ e`.
    pub fn solution(&self, windows: &[CMat2], branch: usize) -> Result<(usize, Vec<[C; 2]>, Vec<C>)> {
        let last = self.stages.last().ok_or_else(|| Error::InvalidArgument("empty cascade".into()))?;
        let first = self.r;
        let end = windows.len();
        if end <= first + 1 {
            return Err(Error::InvalidArgument("too few windows for a solution".into()));
        }
        let mu: Vec<C> = (first..end).map(|n| self.d(n, self.r - 1).unwrap()[branch]).collect();
        let e = |q: CMat2| [q.e[0][branch], q.e[1][branch]];
        let forward = branch == 0 && last.modes.last() == Some(&Mode::RealSplit);
        let len = end - first;
        let mut phi = vec![[c(0.0); 2]; len];
        if forward {
            phi[0] = e(self.q(first - 1).unwrap());
            for k in 0..len - 1 {
                let v = windows[first + k].apply(phi[k]);
                phi[k + 1] = [v[0] / mu[k], v[1] / mu[k]];
            }
        } else {
            phi[len - 1] = e(self.q(end - 2).unwrap());
            for k in (0..len - 1).rev() {
                let inv = windows[first + k]
                    .inv()
                    .ok_or_else(|| Error::InvalidArgument("singular window".into()))?;
                let v = inv.apply(phi[k + 1]);
                phi[k] = [v[0] * mu[k], v[1] * mu[k]];
            }
        }
        Ok((first, phi, mu))
    }
}

fn stage_from(windows: &[(usize, CMat2)], stage: usize, delta_floor: Option<f64>) -> Result<Stage> {
    let mut eig = Vec::with_capacity(windows.len());
    for (n, w) in windows {
        let delta = floor_of(w, delta_floor);
        let e = eigen(w, delta).map_err(|d| Error::NearDegenerate {
            stage,
            window: *n,
            discr: d,
        })?;
        eig.push((e, delta));
    }
    let admissible = |p: Pairing| {
        windows
            .iter()
            .zip(&eig)
            .all(|((_, w), (e, delta))| pairing_margin(w, e, p) >= delta / 2.0)
    };
    let pairing = if admissible(Pairing::Direct) {
        Pairing::Direct
    } else if admissible(Pairing::Exchanged) {
        Pairing::Exchanged
    } else {
        return Err(Error::Pairing { stage });
    };
    let mut st = Stage {
        stage,
        offset: windows.first().map(|w| w.0).unwrap_or(stage),
        pairing,
        c: Vec::with_capacity(windows.len()),
        d: Vec::with_capacity(windows.len()),
        modes: Vec::with_capacity(windows.len()),
        residuals: Vec::with_capacity(windows.len()),
    };
    for ((_, w), (e, _)) in windows.iter().zip(eig) {
        let step = build_step(w, e, pairing);
        st.c.push(step.y);
        st.d.push([step.mu_plus, step.mu_minus]);
        st.modes.push(step.mode);
        st.residuals.push(step.residual);
    }
    Ok(st)
}

/// Run `r` stages of re-diagonalization over the windows `X_0, X_1, …`.
///
/// Stage 0 diagonalizes `X_n = C_{n,0}D_{n,0}C_{n,0}⁻¹`; stage `k` diagonalizes
/// `D_{n,k−1}C_{n,k−1}⁻¹C_{n−1,k−1}` for `n ≥ k`. Each stage uses one pairing
/// for all of its windows so that the `C_{n,k}` form a single continuous
/// family in `n`.
pub fn cascade(windows: &[CMat2], r: usize, delta_floor: Option<f64>) -> Result<CascadeState> {
    if r == 0 {
        return Err(Error::InvalidArgument("cascade depth must be at least 1".into()));
    }
    if windows.len() <= r {
        return Err(Error::InvalidArgument(format!(
            "need more than {r} windows, got {}",
            windows.len()
        )));
    }
    let mut stages: Vec<Stage> = Vec::with_capacity(r);
    let input: Vec<(usize, CMat2)> = windows.iter().copied().enumerate().collect();
    stages.push(stage_from(&input, 0, delta_floor)?);
    for k in 1..r {
        let prev = &stages[k - 1];
        let mut ws = Vec::with_capacity(windows.len() - k);
        for n in k..windows.len() {
            let i = n - prev.offset;
            let d = Mat2::diag(prev.d[i][0], prev.d[i][1]);
            let ci = prev.c[i]
                .inv()
                .ok_or_else(|| Error::NearDegenerate {
                    stage: k,
                    window: n,
                    discr: 0.0,
                })?;
            ws.push((n, d * ci * prev.c[i - 1]));
        }
        stages.push(stage_from(&ws, k, delta_floor)?);
    }
    let q = (r - 1..windows.len())
        .map(|m| {
            stages
                .iter()
                .fold(Mat2::identity(), |acc, s| acc * s.c[m - s.offset])
        })
        .collect();
    Ok(CascadeState { r, stages, q })
}

/// A solution of the recurrence with values `values[n]·2^{log2_scale[n]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Propagation<T> {
    pub values: Vec<T>,
    pub log2_scale: Vec<f64>,
}

impl<T: Scalar> Propagation<T> {
    /// Unscaled value (may overflow to infinity).
    pub fn value(&self, n: usize) -> T {
        self.values[n] * T::from_real(self.log2_scale[n].exp2())
    }
}

const RENORM_HI: f64 = 1e150;
const RENORM_LO: f64 = 1e-150;

/// Forward recursion `a_{n−1}u_{n−1} + b_n u_n + a_n u_{n+1} = x u_n`
/// for `n = 1..n_max−1`, from `(u_0, u_1)`.
///
/// With `renormalize`, the running pair is rescaled by exact powers of two
/// whenever it leaves `[1e-150, 1e150]`; the scale is kept in `log2_scale`.
pub fn propagate<T: Scalar>(
    a: &[f64],
    b: &[f64],
    x: T,
    u0: T,
    u1: T,
    n_max: usize,
    renormalize: bool,
) -> Result<Propagation<T>> {
    if u0 == T::zero() && u1 == T::zero() {
        return Err(Error::InvalidArgument("initial pair must not vanish".into()));
    }
    if n_max >= a.len() || n_max >= b.len() {
        return Err(Error::InvalidArgument(format!(
            "n_max = {n_max} exceeds generated length {}",
            a.len().min(b.len())
        )));
    }
    let mut values = Vec::with_capacity(n_max + 1);
    let mut scales = Vec::with_capacity(n_max + 1);
    values.push(u0);
    scales.push(0.0);
    if n_max >= 1 {
        values.push(u1);
        scales.push(0.0);
    }
    let mut scale = 0.0;
    let (mut prev, mut cur) = (u0, u1);
    for n in 1..n_max {
        let next = ((x - T::from_real(b[n])) * cur - T::from_real(a[n - 1]) * prev) / T::from_real(a[n]);
        prev = cur;
        cur = next;
        if renormalize {
            let m = prev.modulus().max(cur.modulus());
            if m > RENORM_HI || (m < RENORM_LO && m > 0.0) {
                let e = m.log2().floor();
                let f = T::from_real((-e).exp2());
                prev = prev * f;
                cur = cur * f;
                scale += e;
                // keep the stored previous value consistent with the new scale
                if let Some(last) = values.last_mut() {
                    *last = prev;
                }
                if let Some(last) = scales.last_mut() {
                    *last = scale;
                }
            }
        }
        values.push(cur);
        scales.push(scale);
    }
    Ok(Propagation {
        values,
        log2_scale: scales,
    })
}

/// Relative three-term residuals at `n = 1..len−1`.
pub fn three_term_residual<T: Scalar>(a: &[f64], b: &[f64], x: T, u: &[T]) -> Vec<f64> {
    (1..u.len().saturating_sub(1))
        .map(|n| {
            let t1 = T::from_real(a[n - 1]) * u[n - 1];
            let t2 = (T::from_real(b[n]) - x) * u[n];
            let t3 = T::from_real(a[n]) * u[n + 1];
            let den = t1.modulus() + t2.modulus() + t3.modulus();
            if den == 0.0 {
                0.0
            } else {
                (t1 + t2 + t3).modulus() / den
            }
        })
        .collect()
}

fn backward(a: &[f64], b: &[f64], x: f64, n_max: usize, top: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    let (mut up, mut u) = (0.0, 1.0); // u_{n+1}, u_n at n = top
    if top <= n_max {
        out[top] = 1.0;
    }
    for n in (1..=top).rev() {
        let down = ((x - b[n]) * u - a[n] * up) / a[n - 1];
        up = u;
        u = down;
        let m = up.abs().max(u.abs());
        if m > RENORM_HI {
            let f = 1.0 / m;
            up *= f;
            u *= f;
            for v in out.iter_mut().skip(n) {
                *v *= f;
            }
        }
        if n - 1 <= n_max {
            out[n - 1] = u;
        }
    }
    let norm = if out[0] != 0.0 { out[0] } else { out[1] };
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// Minimal solution by backward recursion from `(u_{T+1}, u_T) = (0, 1)` at
/// `T = n_max + buffer`, normalized at `n = 0`.
///
/// The run is repeated with a doubled buffer; if the two disagree by more
/// than `1e-6` (relative, on consecutive pairs) over `0..=n_max`, the result
/// is rejected as unstable.
pub fn recessive_solution(a: &[f64], b: &[f64], x: f64, n_max: usize, buffer: usize) -> Result<Vec<f64>> {
    let top2 = n_max + 2 * buffer.max(1);
    if top2 >= a.len() || top2 >= b.len() {
        return Err(Error::InvalidArgument(format!(
            "need entries up to index {top2} for buffer doubling, have {}",
            a.len().min(b.len())
        )));
    }
    let u = backward(a, b, x, n_max, n_max + buffer.max(1));
    let v = backward(a, b, x, n_max, top2);
    let mut worst = 0.0_f64;
    for n in 0..n_max {
        let num = (u[n] - v[n]).hypot(u[n + 1] - v[n + 1]);
        let den = v[n].hypot(v[n + 1]);
        let rel = if den > 0.0 { num / den } else { f64::INFINITY };
        worst = worst.max(if rel.is_nan() { f64::INFINITY } else { rel });
    }
    if worst > 1e-6 {
        return Err(Error::Unstable { disagreement: worst });
    }
    Ok(v)
}

/// Residual profiles of `Φ_n/∏_{j<n} μ_j` against `v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitProfile {
    /// `‖Φ_n/∏_{j<n}μ_j − v‖`.
    pub residual: Vec<f64>,
    /// Sine of the angle between `Φ_n` and `v` (scale free).
    pub projective: Vec<f64>,
}

fn vnorm(v: &[C; 2]) -> f64 {
    v[0].norm().hypot(v[1].norm())
}

/// Compare normalized solutions with the limiting eigenvector `v`.
pub fn normalized_limit_check(phi: &[[C; 2]], mu: &[C], v: [C; 2]) -> Result<LimitProfile> {
    if mu.len() + 1 < phi.len() {
        return Err(Error::InvalidArgument(format!(
            "{} vectors need at least {} multipliers",
            phi.len(),
            phi.len().saturating_sub(1)
        )));
    }
    if let Some(j) = mu.iter().position(|m| m.norm() == 0.0) {
        return Err(Error::InvalidArgument(format!("μ_{j} vanishes")));
    }
    let vn = vnorm(&v);
    let mut p = c(1.0);
    let mut residual = Vec::with_capacity(phi.len());
    let mut projective = Vec::with_capacity(phi.len());
    for (n, f) in phi.iter().enumerate() {
        if n > 0 {
            p *= mu[n - 1];
        }
        let g = [f[0] / p, f[1] / p];
        residual.push(vnorm(&[g[0] - v[0], g[1] - v[1]]));
        let fn_ = vnorm(f);
        let inner = (f[0].conj() * v[0] + f[1].conj() * v[1]).norm() / (fn_ * vn);
        projective.push((1.0 - inner.min(1.0).powi(2)).max(0.0).sqrt());
    }
    Ok(LimitProfile {
        residual,
        projective,
    })
}

/// Product estimates `lhs± = ∏_{j=n₀}^{n}|σ + μ^±_j/γ_j|²` against
/// `rhs± = exp(Γ_n(σ·tr ℛ ± √discr ℛ))`, `Γ_n = Σ_{j≤n} 1/γ_j`,
/// with `μ^±_j = (tr R_j ± σ√discr R_j)/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductGrowth {
    /// First index (1-based) of the product.
    pub n0: usize,
    pub n: usize,
    pub lhs_plus: f64,
    pub lhs_minus: f64,
    pub rhs_plus: f64,
    pub rhs_minus: f64,
    /// Profiles over `j = 1..=n` (entry `j−1`); products are empty before `n₀`.
    pub gamma_sum: Vec<f64>,
    pub log_lhs_plus: Vec<f64>,
    pub log_lhs_minus: Vec<f64>,
    pub log_rhs_plus: Vec<f64>,
    pub log_rhs_minus: Vec<f64>,
}

/// Evaluate [`ProductGrowth`] for `R_j = r[j−1]`, `γ_j = gamma[j−1]`.
pub fn product_growth(
    r: &[Mat2<f64>],
    gamma: &[f64],
    sigma: f64,
    r_limit: &Mat2<f64>,
    n: usize,
) -> Result<ProductGrowth> {
    if n == 0 || n > r.len() || n > gamma.len() {
        return Err(Error::InvalidArgument(format!(
            "n = {n} must be in 1..={}",
            r.len().min(gamma.len())
        )));
    }
    if let Some(j) = gamma[..n].iter().position(|g| !(*g > 0.0)) {
        return Err(Error::InvalidArgument(format!("γ_{} is not positive", j + 1)));
    }
    let d_lim = r_limit.discr();
    if d_lim < 0.0 {
        return Err(Error::NegativeDiscriminant {
            index: 0,
            discr: d_lim,
        });
    }
    let last_bad = r[..n].iter().rposition(|m| !(m.discr() > 0.0));
    let n0 = last_bad.map(|k| k + 2).unwrap_or(1);
    if n0 > n {
        return Err(Error::NegativeDiscriminant {
            index: n,
            discr: r[n - 1].discr(),
        });
    }
    let (tr_l, sd_l) = (r_limit.tr(), d_lim.sqrt());
    let mut gs = 0.0;
    let (mut lp, mut lm) = (0.0, 0.0);
    let mut out = ProductGrowth {
        n0,
        n,
        lhs_plus: 0.0,
        lhs_minus: 0.0,
        rhs_plus: 0.0,
        rhs_minus: 0.0,
        gamma_sum: Vec::with_capacity(n),
        log_lhs_plus: Vec::with_capacity(n),
        log_lhs_minus: Vec::with_capacity(n),
        log_rhs_plus: Vec::with_capacity(n),
        log_rhs_minus: Vec::with_capacity(n),
    };
    for j in 1..=n {
        let (m, g) = (&r[j - 1], gamma[j - 1]);
        gs += 1.0 / g;
        if j >= n0 {
            let sd = m.discr().sqrt();
            let mu_p = (m.tr() + sigma * sd) / 2.0;
            let mu_m = (m.tr() - sigma * sd) / 2.0;
            lp += 2.0 * (sigma + mu_p / g).abs().ln();
            lm += 2.0 * (sigma + mu_m / g).abs().ln();
        }
        out.gamma_sum.push(gs);
        out.log_lhs_plus.push(lp);
        out.log_lhs_minus.push(lm);
        out.log_rhs_plus.push(gs * (sigma * tr_l + sd_l));
        out.log_rhs_minus.push(gs * (sigma * tr_l - sd_l));
    }
    out.lhs_plus = lp.exp();
    out.lhs_minus = lm.exp();
    out.rhs_plus = out.log_rhs_plus[n - 1].exp();
    out.rhs_minus = out.log_rhs_minus[n - 1].exp();
    Ok(out)
}

/// Asymptotic basis `u^±_n = (∏_{j≤n}λ^±_j(0))(1 + ε^±_n)` for non-Carleman
/// entries, `λ^±_j(0)` the eigenvalues of `B_j(0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YafaevReport {
    pub q: f64,
    pub mode: Mode,
    /// Index at which both solutions are anchored (`ε = 0` there).
    pub terminal: usize,
    /// Values at `n = 0..=n_max`.
    pub u_plus: Vec<C>,
    pub u_minus: Vec<C>,
    /// `|ε^±_n|`, `n = 1..=n_max` (entry `n−1`).
    pub eps_plus: Vec<f64>,
    pub eps_minus: Vec<f64>,
    /// Relative three-term residuals at `n = 1..n_max`.
    pub residual_plus: Vec<f64>,
    pub residual_minus: Vec<f64>,
    pub carleman_partial_sum: f64,
    /// Bounded-variation probes of `a_{n−1}/a_n`, `b_n/a_n` and `1/a_n`.
    pub hypothesis_probes: Vec<(String, StolzVerdict)>,
}

fn lambdas(a: &[f64], b: &[f64], j: usize) -> (C, C) {
    // eigenvalues of [[0,1],[−a_{j−1}/a_j, −b_j/a_j]]
    let r = a[j - 1] / a[j];
    let s = b[j] / a[j];
    let disc = s * s - 4.0 * r;
    if disc >= 0.0 {
        let q = disc.sqrt();
        (c((-s + q) / 2.0), c((-s - q) / 2.0))
    } else {
        let q = (-disc).sqrt();
        (C::new(-s / 2.0, q / 2.0), C::new(-s / 2.0, -q / 2.0))
    }
}

/// Solution whose normalized vector `Φ_n/Π_{n−1}` tends to `(1, λ_n)`.
///
/// Returns `ε_n = (Φ̃_n)_2/λ_n − 1` for `n = 1..=terminal` and `u_n`.
fn yafaev_branch(a: &[f64], b: &[f64], z: C, terminal: usize, branch: usize, forward: bool) -> (Vec<C>, Vec<C>) {
    let lam: Vec<C> = (0..=terminal)
        .map(|j| if j == 0 { c(1.0) } else { let l = lambdas(a, b, j); if branch == 0 { l.0 } else { l.1 } })
        .collect();
    let bz = |j: usize| -> CMat2 {
        Mat2::new(c(0.0), c(1.0), c(-a[j - 1] / a[j]), (z - b[j]) / a[j])
    };
    // phi[n] = Φ_n/Π_{n−1}, Φ_n = (u_{n−1}, u_n)
    let mut phi = vec![[c(0.0); 2]; terminal + 1];
    if forward {
        phi[1] = [c(1.0), lam[1]];
        for n in 1..terminal {
            let v = bz(n).apply(phi[n]);
            phi[n + 1] = [v[0] / lam[n], v[1] / lam[n]];
        }
        let norm = phi[terminal][1] / lam[terminal];
        for v in phi.iter_mut().skip(1) {
            *v = [v[0] / norm, v[1] / norm];
        }
    } else {
        phi[terminal] = [c(1.0), lam[terminal]];
        for n in (1..terminal).rev() {
            let inv = bz(n).inv().expect("transfer matrices are invertible");
            let v = inv.apply(phi[n + 1]);
            phi[n] = [v[0] * lam[n], v[1] * lam[n]];
        }
    }
    let eps: Vec<C> = (1..=terminal).map(|n| phi[n][1] / lam[n] - 1.0).collect();
    // u_{n−1} = Π_{n−1}·phi[n][0], u_n = Π_{n−1}·phi[n][1]
    let mut u = Vec::with_capacity(terminal + 1);
    let mut prod = c(1.0);
    u.push(phi[1][0]);
    for n in 1..=terminal {
        u.push(prod * phi[n][1]);
        prod *= lam[n];
    }
    (eps, u)
}

/// Compute the asymptotic basis at `z` over `n = 0..=n_max`, anchoring both
/// solutions at the last available index.
///
/// The entry arrays must extend beyond `n_max`; the longer they are, the
/// closer the anchored normalisation is to the one at infinity.
pub fn yafaev_asymptotics(a: &[f64], b: &[f64], z: C, n_max: usize) -> Result<YafaevReport> {
    let len = a.len().min(b.len());
    if len < n_max + 2 || n_max < 2 {
        return Err(Error::InvalidArgument(format!(
            "need entries beyond n_max = {n_max}, have {len}"
        )));
    }
    let terminal = len - 1;
    let q = b[terminal] / (2.0 * (a[terminal - 1] * a[terminal]).sqrt());
    if (q.abs() - 1.0).abs() < 1e-3 {
        return Err(Error::BoundaryCase { q });
    }
    let inv: Vec<f64> = a[1..].iter().map(|v| 1.0 / v).collect();
    let series = summarize(&inv);
    if series.verdict != SeriesVerdict::Converges {
        return Err(Error::CarlemanHolds {
            partial_sum: series.partial_sum,
        });
    }
    let mode = if q.abs() < 1.0 {
        Mode::ComplexPair
    } else {
        Mode::RealSplit
    };
    // in a real split the branch of larger modulus is dominant
    let (lp, lm) = lambdas(a, b, terminal);
    let plus_dominant = mode == Mode::RealSplit && lp.norm() > lm.norm();
    let minus_dominant = mode == Mode::RealSplit && lm.norm() > lp.norm();
    let (ep, up) = yafaev_branch(a, b, z, terminal, 0, plus_dominant);
    let (em, um) = yafaev_branch(a, b, z, terminal, 1, minus_dominant);
    let probes = {
        let ratio: Vec<f64> = (1..len).map(|n| a[n - 1] / a[n]).collect();
        let bq: Vec<f64> = (1..len).map(|n| b[n] / a[n]).collect();
        [("a_{n-1}/a_n", ratio), ("b_n/a_n", bq), ("1/a_n", inv.clone())]
            .into_iter()
            .map(|(name, x)| {
                let v = class_diagnostic(&x, 1, 0, usize::MAX)
                    .map(|d| d.verdict)
                    .unwrap_or(StolzVerdict::Inconclusive);
                (name.to_string(), v)
            })
            .collect()
    };
    let up: Vec<C> = up[..=n_max].to_vec();
    let um: Vec<C> = um[..=n_max].to_vec();
    Ok(YafaevReport {
        q,
        mode,
        terminal,
        residual_plus: three_term_residual(a, b, z, &up),
        residual_minus: three_term_residual(a, b, z, &um),
        u_plus: up,
        u_minus: um,
        eps_plus: ep[..n_max].iter().map(|e| e.norm()).collect(),
        eps_minus: em[..n_max].iter().map(|e| e.norm()).collect(),
        carleman_partial_sum: series.partial_sum,
        hypothesis_probes: probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(a: f64, b: f64, c_: f64, d: f64) -> CMat2 {
        Mat2::new(c(a), c(b), c(c_), c(d))
    }

    #[test]
    fn diagonal_input() {
        let s = split_diagonalize(&Mat2::diag(2.0, 0.5), None).unwrap();
        assert_eq!(s.mu_plus, c(2.0));
        assert_eq!(s.mu_minus, c(0.5));
        assert_eq!(s.y, Mat2::identity());
        assert_eq!(s.mode, Mode::RealSplit);
        assert_eq!(s.pairing, Pairing::Direct);
    }

    #[test]
    fn swapped_diagonal_uses_exchange() {
        let s = split_diagonalize(&Mat2::diag(0.5, 2.0), None).unwrap();
        assert_eq!(s.mu_plus, c(2.0));
        assert_eq!(s.pairing, Pairing::Exchanged);
        assert!(s.residual < 1e-15);
    }

    #[test]
    fn rotation_is_complex_pair() {
        let s = split_diagonalize(&Mat2::new(0.0, 1.0, -1.0, 0.0), None).unwrap();
        assert_eq!(s.mode, Mode::ComplexPair);
        assert!((s.mu_plus - C::i()).norm() < 1e-15);
        assert!((s.mu_minus + C::i()).norm() < 1e-15);
        assert!(s.residual < 1e-14);
    }

    #[test]
    fn triangular_input() {
        let s = split_diagonalize(&Mat2::new(1.0, 1.0, 0.0, 2.0), None).unwrap();
        assert!((s.mu_plus - 2.0).norm() < 1e-15 && (s.mu_minus - 1.0).norm() < 1e-15);
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn degenerate_rejected() {
        assert!(matches!(
            split_diagonalize(&Mat2::<f64>::identity(), None),
            Err(Error::NearDegenerate { .. })
        ));
    }

    #[test]
    fn constant_cascade_is_trivial() {
        let w = vec![cm(2.0, 0.0, 0.0, 0.5); 10];
        let st = cascade(&w, 3, None).unwrap();
        for k in 0..3 {
            for n in k..10 {
                assert_eq!(st.c(n, k).unwrap(), Mat2::identity());
                assert_eq!(st.d(n, k).unwrap(), [c(2.0), c(0.5)]);
            }
        }
        assert_eq!(st.q(5).unwrap(), Mat2::identity());
    }

    #[test]
    fn perturbed_cascade_converges() {
        let base = Mat2::new(1.0, 0.5, 0.25, 3.0);
        let w: Vec<CMat2> = (1..400)
            .map(|n| {
                let e = 1.0 / (n as f64).powi(2);
                (base + Mat2::new(e, -e, 2.0 * e, e)).to_complex()
            })
            .collect();
        let st = cascade(&w, 2, None).unwrap();
        assert!(st.max_residual() < 1e-9);
        let dev: Vec<f64> = (1..w.len()).map(|n| (st.c(n, 1).unwrap() - Mat2::identity()).norm()).collect();
        assert!(dev.last().unwrap() < &(dev[0] * 1e-3));
    }

    #[test]
    fn propagate_examples() {
        let a = vec![1.0; 12];
        let b = vec![0.0; 12];
        let u = propagate(&a, &b, 0.0, 0.0, 1.0, 8, false).unwrap();
        assert_eq!(u.values, vec![0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0]);
        let u = propagate(&a, &b, 2.0, 0.0, 1.0, 6, false).unwrap();
        assert_eq!(u.values, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(propagate(&a, &b, 0.0, 0.0, 0.0, 6, false).is_err());
    }

    #[test]
    fn renormalized_propagation_tracks_scale() {
        let n = 2000;
        let a = vec![1.0; n + 1];
        let b = vec![0.0; n + 1];
        // u_{n+1} = 3u_n − u_{n−1} grows like 2.618^n, overflowing f64 near n = 1475
        let u = propagate(&a, &b, 3.0, 0.0, 1.0, n, true).unwrap();
        assert!(u.values.iter().all(|v| v.is_finite()));
        let phi = (3.0 + 5f64.sqrt()) / 2.0;
        let log2_u = u.values[n].abs().log2() + u.log2_scale[n];
        let expect = n as f64 * phi.log2() - 5f64.sqrt().log2();
        assert!((log2_u - expect).abs() < 1e-6, "{log2_u} vs {expect}");
    }

    #[test]
    fn recessive_toy() {
        let len = 400;
        let a = vec![1.0; len];
        let b = vec![0.0; len];
        let u = recessive_solution(&a, &b, 3.0, 50, 100).unwrap();
        let ratio = u[41] / u[40];
        assert!((ratio - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn recessive_free_case_unstable() {
        let a = vec![1.0; 1000];
        let b = vec![0.0; 1000];
        assert!(matches!(
            recessive_solution(&a, &b, 0.3, 100, 200),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn limit_check_examples() {
        let v = [c(1.0), c(-2.0)];
        let e = [c(0.6), c(0.8)];
        let phi: Vec<[C; 2]> = (0..20).map(|n| [v[0] * 2f64.powi(n), v[1] * 2f64.powi(n)]).collect();
        let mu = vec![c(2.0); 20];
        let p = normalized_limit_check(&phi, &mu, v).unwrap();
        assert!(p.residual.iter().all(|r| *r == 0.0));
        let phi: Vec<[C; 2]> = (1..20)
            .map(|n| {
                let s = 2f64.powi(n);
                let t = 1.0 / n as f64;
                [(v[0] + e[0] * t) * s, (v[1] + e[1] * t) * s]
            })
            .collect();
        // index shift: entry k holds n = k + 1, so seed the product with one factor
        let mut mu = vec![c(2.0); 20];
        mu.insert(0, c(2.0));
        let p = normalized_limit_check(&phi, &mu[1..], [v[0] * 2.0, v[1] * 2.0]).unwrap();
        for (k, r) in p.residual.iter().enumerate() {
            assert!((r - 2.0 / (k + 1) as f64).abs() < 1e-12, "{k}: {r}");
        }
    }

    #[test]
    fn harmonic_gamma_sum() {
        let r = vec![Mat2::diag(1.0, 3.0); 100];
        let g: Vec<f64> = (1..=100).map(|j| j as f64).collect();
        let p = product_growth(&r, &g, 1.0, &Mat2::diag(1.0, 3.0), 100).unwrap();
        assert!((p.gamma_sum[99] - 5.187_377_517_639_621).abs() < 1e-12);
    }

    #[test]
    fn constant_r_ratio_converges() {
        let n = 1 << 16;
        let r = vec![Mat2::diag(1.0, 3.0); n];
        let g: Vec<f64> = (1..=n).map(|j| j as f64).collect();
        let p = product_growth(&r, &g, 1.0, &Mat2::diag(1.0, 3.0), n).unwrap();
        let ratio = |m: usize| (p.log_lhs_minus[m - 1] - p.log_rhs_minus[m - 1]).exp();
        // ∏(1 + 1/j)² = (n+1)² against exp(2H_n) ⇒ ratio → e^{−2γ_E}
        let limit = (-2.0 * 0.577_215_664_901_532_9_f64).exp();
        assert!((ratio(n) - limit).abs() < 1e-4);
        assert!((ratio(n) - ratio(n / 2)).abs() < 1e-4);
    }
}
