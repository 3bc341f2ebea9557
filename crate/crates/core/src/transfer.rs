//! Transfer matrices, window products and the limit matrices of the
//! periodic models.
//!
//! The transfer matrix of the three-term recurrence is
//! `B_j(x) = [[0, 1], [−a_{j−1}/a_j, (x − b_j)/a_j]]`; products are ordered
//! with the highest index on the left.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{AffineMat2, Mat2, Scalar};
use crate::model::{JacobiSpec, PeriodicSeq};

/// Entrywise tolerance when comparing a period matrix to `±Id`.
pub const SIGMA_TOL: f64 = 1e-12;

fn index_err(j: usize, len: usize) -> Error {
    Error::InvalidArgument(format!("index {j} outside the generated range 0..{len}"))
}

/// `B_j(x)`. Requires `j ≥ 1`.
pub fn transfer<T: Scalar>(a: &[f64], b: &[f64], j: usize, x: T) -> Result<Mat2<T>> {
    if j == 0 {
        return Err(Error::InvalidArgument(
            "transfer matrix B_0 needs a_{-1}; start at j = 1".into(),
        ));
    }
    if j >= a.len() || j >= b.len() {
        return Err(index_err(j, a.len().min(b.len())));
    }
    let aj = a[j];
    if !(aj > 0.0) {
        return Err(Error::InvalidArgument(format!("a_{j} = {aj} is not positive")));
    }
    Ok(Mat2::new(
        T::zero(),
        T::one(),
        T::from_real(-a[j - 1] / aj),
        (x - T::from_real(b[j])) / T::from_real(aj),
    ))
}

/// `B_{n+len−1}(x)⋯B_n(x)`.
pub fn window_product<T: Scalar>(
    a: &[f64],
    b: &[f64],
    n: usize,
    len: usize,
    x: T,
) -> Result<Mat2<T>> {
    let mut m = Mat2::identity();
    for j in n..n + len {
        m = transfer(a, b, j, x)? * m;
    }
    Ok(m)
}

/// The periodic model `(α, β)` with its transfer matrices 𝔅_n and
/// associated polynomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicModel {
    pub alpha: PeriodicSeq,
    pub beta: PeriodicSeq,
}

impl PeriodicModel {
    pub fn new(alpha: PeriodicSeq, beta: PeriodicSeq) -> Result<Self> {
        if alpha.period() != beta.period() {
            return Err(Error::InvalidArgument(format!(
                "α has period {} but β has period {}",
                alpha.period(),
                beta.period()
            )));
        }
        if !alpha.is_positive() {
            return Err(Error::InvalidArgument("α must be strictly positive".into()));
        }
        Ok(PeriodicModel { alpha, beta })
    }

    /// Model of a spec that has one.
    pub fn of(spec: &JacobiSpec) -> Result<Self> {
        match spec.periodic() {
            Some((_, al, be)) => PeriodicModel::new(al.clone(), be.clone()),
            None => Err(Error::Unsupported {
                variant: spec.variant_name().into(),
                message: "no periodic model".into(),
            }),
        }
    }

    pub fn period(&self) -> usize {
        self.alpha.period()
    }

    fn al(&self, n: i64) -> f64 {
        self.alpha.get(n)
    }

    /// 𝔅_n(x).
    pub fn transfer<T: Scalar>(&self, n: i64, x: T) -> Mat2<T> {
        let an = self.al(n);
        Mat2::new(
            T::zero(),
            T::one(),
            T::from_real(-self.al(n - 1) / an),
            (x - T::from_real(self.beta.get(n))) / T::from_real(an),
        )
    }

    /// `∏_{m=from}^{to} 𝔅_m(x)`, the identity when `to < from`.
    pub fn product<T: Scalar>(&self, from: i64, to: i64, x: T) -> Mat2<T> {
        let mut m = Mat2::identity();
        for j in from..=to {
            m = self.transfer(j, x) * m;
        }
        m
    }

    /// 𝔛_n(x) = 𝔅_{n+N−1}(x)⋯𝔅_n(x).
    pub fn window<T: Scalar>(&self, n: i64, x: T) -> Mat2<T> {
        self.product(n, n + self.period() as i64 - 1, x)
    }

    /// Value at `x` and derivative at `x` of the associated polynomial 𝔭^{[k]}_n.
    ///
    /// `𝔭_{−1} = 0`, `𝔭_0 = 1` and
    /// `α_{m+k−1}𝔭_{m−1} + β_{m+k}𝔭_m + α_{m+k}𝔭_{m+1} = x𝔭_m`.
    /// The derivative satisfies the differentiated recurrence, so it is exact
    /// up to rounding.
    pub fn poly_with_derivative(&self, k: i64, n: i64, x: f64) -> (f64, f64) {
        if n < 0 {
            return (0.0, 0.0);
        }
        let (mut p_prev, mut p) = (0.0, 1.0);
        let (mut d_prev, mut d) = (0.0, 0.0);
        for m in 0..n {
            let (am, amm, bm) = (self.al(m + k), self.al(m + k - 1), self.beta.get(m + k));
            let p_next = ((x - bm) * p - amm * p_prev) / am;
            let d_next = (p + (x - bm) * d - amm * d_prev) / am;
            (p_prev, p) = (p, p_next);
            (d_prev, d) = (d, d_next);
        }
        (p, d)
    }

    /// σ ∈ {−1, 1} when 𝔛_0(0) = σ·Id to [`SIGMA_TOL`].
    pub fn sigma(&self) -> Option<f64> {
        let x0: Mat2<f64> = self.window(0, 0.0);
        [1.0, -1.0]
            .into_iter()
            .find(|&s| (x0 - Mat2::identity().scale(s)).max_abs() <= SIGMA_TOL)
    }

    /// σ, or a non-critical error carrying the trace of 𝔛_0(0).
    pub fn critical_sigma(&self) -> Result<f64> {
        self.sigma().ok_or_else(|| Error::NonCritical {
            trace: self.window(0, 0.0).tr(),
        })
    }

    /// `Σ_j {∏_{m>j}𝔅_{i+m}(0)}·E_j·{∏_{m<j}𝔅_{i+m}(0)}` with `E_j` from `insert`.
    fn sandwich_sum(&self, i: i64, insert: impl Fn(i64) -> Mat2<f64>) -> Mat2<f64> {
        let n = self.period() as i64;
        let mut acc = Mat2::zero();
        for j in 0..n {
            let left = self.product(i + j + 1, i + n - 1, 0.0);
            let right = self.product(i, i + j - 1, 0.0);
            acc = acc + left * insert(i + j) * right;
        }
        acc
    }
}

/// 𝔅_n(x) of the periodic model.
pub fn periodic_transfer<T: Scalar>(alpha: &PeriodicSeq, beta: &PeriodicSeq, n: i64, x: T) -> Result<Mat2<T>> {
    Ok(PeriodicModel::new(alpha.clone(), beta.clone())?.transfer(n, x))
}

/// 𝔛_n(x) of the periodic model.
pub fn periodic_window<T: Scalar>(alpha: &PeriodicSeq, beta: &PeriodicSeq, n: i64, x: T) -> Result<Mat2<T>> {
    Ok(PeriodicModel::new(alpha.clone(), beta.clone())?.window(n, x))
}

/// `(𝔭^{[k]}_n(x), (𝔭^{[k]}_n)′(0))`.
pub fn periodic_poly(alpha: &PeriodicSeq, beta: &PeriodicSeq, k: i64, n: i64, x: f64) -> Result<(f64, f64)> {
    let model = PeriodicModel::new(alpha.clone(), beta.clone())?;
    Ok((model.poly_with_derivative(k, n, x).0, model.poly_with_derivative(k, n, 0.0).1))
}

/// The matrix `𝒞(x)` absorbing the two unbounded entries of a blended period.
fn blend_core<T: Scalar>(model: &PeriodicModel, x: T) -> Mat2<T> {
    let n = model.period() as i64;
    let a0 = model.al(0);
    Mat2::new(
        T::zero(),
        -T::one(),
        T::from_real(model.al(n - 1) / a0),
        -(T::from_real(2.0) * x - T::from_real(model.beta.get(0))) / T::from_real(a0),
    )
}

/// Limit `𝒳_i(x)` of the window products.
///
/// For modulated and KM specs this is 𝔛_i(0) for every `x`. For blended
/// specs `i ∈ 1..=N` and `𝒳_i = (∏_{j=1}^{i−1}𝔅_j)·𝒞(x)·(∏_{j=i}^{N−1}𝔅_j)`;
/// the case `i = N` uses the same product with an empty right factor.
pub fn limit_matrix<T: Scalar>(spec: &JacobiSpec, i: usize, x: T) -> Result<Mat2<T>> {
    let model = PeriodicModel::of(spec)?;
    match spec {
        JacobiSpec::Modulated(_) | JacobiSpec::Km(_) => Ok(model.window(i as i64, T::zero())),
        JacobiSpec::Blended(b) => {
            let n = b.period;
            if i == 0 || i > n {
                return Err(Error::InvalidArgument(format!(
                    "blended limit matrices are indexed by i in 1..={n}, got {i}"
                )));
            }
            let left = model.product(1, i as i64 - 1, x);
            let right = model.product(i as i64, n as i64 - 1, x);
            Ok(left * blend_core(&model, x) * right)
        }
        JacobiSpec::Explicit(_) => Err(Error::Unsupported {
            variant: "explicit".into(),
            message: "limit matrices need a periodic model".into(),
        }),
    }
}

/// Normalisation of the deviation `X − σ·Id`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// Multiply by `a_{(k+1)N+i−1}`.
    A,
    /// Multiply by the γ sequence: `γ_{kN}` for KM specs, `γ_k` for
    /// modulated specs carrying a `gamma` generator.
    Gamma,
}

/// Scaled deviation `R` of window `k`: the window product starting at
/// `kN + i`, minus `σ·Id`, times the chosen scale.
///
/// `a`, `b` must cover index `(k+1)N + i − 1`.
pub fn scaled_deviation<T: Scalar>(
    spec: &JacobiSpec,
    a: &[f64],
    b: &[f64],
    i: usize,
    x: T,
    k: usize,
    scaling: Scaling,
) -> Result<Mat2<T>> {
    let model = PeriodicModel::of(spec)?;
    if matches!(spec, JacobiSpec::Blended(_)) {
        return Err(Error::Unsupported {
            variant: "blended".into(),
            message: "scaled deviations are defined for critical modulated entries".into(),
        });
    }
    let sigma = model.critical_sigma()?;
    let n_per = model.period();
    if i >= n_per {
        return Err(Error::InvalidArgument(format!("i = {i} must be below N = {n_per}")));
    }
    let start = k * n_per + i;
    if start == 0 {
        return Err(Error::InvalidArgument("window k = 0, i = 0 needs B_0; use k ≥ 1".into()));
    }
    let x_n = window_product(a, b, start, n_per, x)?;
    let dev = x_n - Mat2::identity().scale(T::from_real(sigma));
    let scale = match (scaling, spec) {
        (Scaling::A, _) => {
            let idx = (k + 1) * n_per + i - 1;
            *a.get(idx).ok_or_else(|| index_err(idx, a.len()))?
        }
        (Scaling::Gamma, JacobiSpec::Km(km)) => km.gamma.eval(k * n_per)?,
        (Scaling::Gamma, JacobiSpec::Modulated(m)) => match &m.gamma {
            Some(g) => g.eval(k)?,
            None => {
                return Err(Error::InvalidArgument(
                    "γ-based scaling needs a `gamma` generator on the modulated spec".into(),
                ))
            }
        },
        _ => unreachable!("variants filtered above"),
    };
    Ok(dev.scale(T::from_real(scale)))
}

/// `ℛ_i(x) = α_{i−1}𝒞_i(x) + α_{i−1}𝒟_i` for critical modulated entries
/// with limits `s`, `z`.
pub fn closed_form_r_modulated(
    model: &PeriodicModel,
    s: &PeriodicSeq,
    z: &PeriodicSeq,
    i: i64,
) -> Result<AffineMat2> {
    model.critical_sigma()?;
    let n = model.period() as i64;
    let ratio = model.al(i - 1) / model.al(i);
    let d = |k: i64, m: i64| model.poly_with_derivative(k, m, 0.0).1;
    let c = Mat2::new(
        -ratio * d(i + 1, n - 2),
        d(i, n - 1),
        -ratio * d(i + 1, n - 1),
        d(i, n),
    );
    let dd = model.sandwich_sum(i, |m| {
        let am = model.al(m);
        Mat2::new(0.0, 0.0, s.get(m) / am, z.get(m) / am)
    });
    let w = model.al(i - 1);
    Ok(AffineMat2 {
        constant: dd.scale(w),
        linear: c.scale(w),
    })
}

/// `−σ·α_{i−1}·Σ_j s_{i+j}/α_{i+j−1}`, the trace of [`closed_form_r_modulated`].
pub fn modulated_trace_formula(model: &PeriodicModel, s: &PeriodicSeq, i: i64) -> Result<f64> {
    let sigma = model.critical_sigma()?;
    let n = model.period() as i64;
    let sum: f64 = (0..n).map(|j| s.get(i + j) / model.al(i + j - 1)).sum();
    Ok(-sigma * model.al(i - 1) * sum)
}

/// ℛ_i of the non-Carleman construction with its trace from the closed formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonCarlemanR {
    pub matrix: Mat2<f64>,
    /// `−σ·Σ_j s̃_{i+j}·α_{i+j}/α_{i+j−1}`.
    pub trace_formula: f64,
}

/// `ℛ_i = Σ_j {∏_{m>j}𝔅_{i+m}(0)}·[[0,0],[s̃_{i+j}, z̃_{i+j}]]·{∏_{m<j}𝔅_{i+m}(0)}`.
pub fn closed_form_r_noncarleman(
    model: &PeriodicModel,
    i: i64,
    s_tilde: &PeriodicSeq,
    z_tilde: &PeriodicSeq,
) -> Result<NonCarlemanR> {
    let sigma = model.critical_sigma()?;
    let n = model.period() as i64;
    let matrix = model.sandwich_sum(i, |m| Mat2::new(0.0, 0.0, s_tilde.get(m), z_tilde.get(m)));
    let trace_formula = -sigma
        * (0..n)
            .map(|j| s_tilde.get(i + j) * model.al(i + j) / model.al(i + j - 1))
            .sum::<f64>();
    Ok(NonCarlemanR {
        matrix,
        trace_formula,
    })
}

/// ℛ_i for the Kostyuchenko–Mirzoev class with periodic limit 𝔣 of `f`:
/// `Σ_j (α_{i+j−1}/α_{i+j})(κ + 𝔣_{i+j} − 𝔣_{i+j−1})·{∏_{m>j}𝔅}·[[0,0],[1,0]]·{∏_{m<j}𝔅}`.
pub fn km_r(model: &PeriodicModel, frak_f: &PeriodicSeq, kappa: f64, i: i64) -> Result<Mat2<f64>> {
    model.critical_sigma()?;
    Ok(model.sandwich_sum(i, |m| {
        let w = model.al(m - 1) / model.al(m) * (kappa + frak_f.get(m) - frak_f.get(m - 1));
        Mat2::new(0.0, 0.0, w, 0.0)
    }))
}

/// Closed-form `(tr ℛ_0, discr ℛ_0)` for even `N`, balanced α and β ≡ 0:
/// `(−(−1)^{N/2}·N·κ, 4(Σ_j (−1)^j 𝔣_j)²)`.
pub fn km_r_even_closed(
    alpha: &PeriodicSeq,
    beta: &PeriodicSeq,
    frak_f: &PeriodicSeq,
    kappa: f64,
) -> Result<(f64, f64)> {
    let n = alpha.period();
    if n % 2 != 0 {
        return Err(Error::InvalidArgument(format!("N = {n} is odd")));
    }
    if beta.period() != n || beta.values().iter().any(|&b| b != 0.0) {
        return Err(Error::InvalidArgument("β must vanish identically".into()));
    }
    if frak_f.period() != n {
        return Err(Error::InvalidArgument(format!("𝔣 must have period {n}")));
    }
    let even: f64 = alpha.values().iter().step_by(2).product();
    let odd: f64 = alpha.values().iter().skip(1).step_by(2).product();
    if (even - odd).abs() > 1e-12 * even.max(odd) {
        return Err(Error::InvalidArgument(format!(
            "α is not balanced: even product {even} vs odd product {odd}"
        )));
    }
    let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let alt: f64 = frak_f
        .values()
        .iter()
        .enumerate()
        .map(|(j, f)| if j % 2 == 0 { *f } else { -*f })
        .sum();
    Ok((-sign * n as f64 * kappa, 4.0 * alt * alt))
}

/// `(‖X_n(z) − X_n(0)‖, bound)` with `bound = c·Σ_{j<len} 1/a_{n+j}`.
///
/// Writing `X(z) − X(0)` as a telescoping sum of products in which exactly
/// one factor is `B_{n+j}(z) − B_{n+j}(0)` (norm `|z|/a_{n+j}`), every other
/// factor is bounded by `s_m = max(‖B_{n+m}(0)‖, ‖B_{n+m}(z)‖)`, hence
/// `c = |z|·max_j ∏_{m≠j} s_m`. The bound carries an 8-ulp allowance for
/// its own floating-point evaluation.
pub fn perturbation_bound(a: &[f64], b: &[f64], n: usize, len: usize, z: Complex64) -> Result<(f64, f64)> {
    let actual = (window_product(a, b, n, len, z)? - window_product(a, b, n, len, Complex64::from_real(0.0))?).norm();
    let mut sups = Vec::with_capacity(len);
    let mut inv_sum = 0.0;
    for j in n..n + len {
        let s0 = transfer(a, b, j, 0.0)?.norm();
        let sz = transfer(a, b, j, z)?.norm();
        sups.push(s0.max(sz));
        inv_sum += 1.0 / a[j];
    }
    let m = (0..len)
        .map(|j| {
            sups.iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, s)| s)
                .product::<f64>()
        })
        .fold(0.0_f64, f64::max);
    let bound = z.norm() * m * inv_sum * (1.0 + 8.0 * f64::EPSILON);
    Ok((actual, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BlendedSpec, KmSpec, ModulatedSpec, SequenceGen};

    fn ps(v: &[f64]) -> PeriodicSeq {
        PeriodicSeq::new(v.to_vec()).unwrap()
    }

    fn model(alpha: &[f64], beta: &[f64]) -> PeriodicModel {
        PeriodicModel::new(ps(alpha), ps(beta)).unwrap()
    }

    fn close(a: Mat2<f64>, b: Mat2<f64>, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn transfer_examples() {
        let a = vec![1.0; 5];
        let b = vec![0.0; 5];
        assert_eq!(transfer(&a, &b, 1, 0.0).unwrap(), Mat2::new(0.0, 1.0, -1.0, 0.0));
        assert!(transfer(&a, &b, 0, 0.0).is_err());
        let b1 = vec![1.0; 5];
        assert_eq!(transfer(&a, &b1, 2, 0.0).unwrap(), Mat2::new(0.0, 1.0, -1.0, -1.0));
        let a2: Vec<f64> = (1..6).map(|n| n as f64).collect();
        for &x in &[0.0, 3.5, -7.0] {
            assert_eq!(transfer(&a2, &b, 1, x).unwrap().det(), 0.5);
        }
    }

    #[test]
    fn window_examples() {
        let a = vec![1.0; 8];
        let b0 = vec![0.0; 8];
        let b1 = vec![1.0; 8];
        assert_eq!(window_product(&a, &b0, 1, 2, 0.0).unwrap(), -Mat2::identity());
        assert_eq!(window_product(&a, &b1, 1, 3, 0.0).unwrap(), Mat2::identity());
        let a2: Vec<f64> = (1..9).map(|n| n as f64).collect();
        let d = window_product(&a2, &b0, 1, 2, 0.0).unwrap().det();
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn periodic_examples() {
        assert!(close(model(&[1.0, 1.0], &[0.0, 0.0]).window(0, 0.0), -Mat2::identity(), 0.0));
        assert!(close(model(&[1.0; 3], &[1.0; 3]).window(0, 0.0), Mat2::identity(), 0.0));
        let ex2 = model(&[1.0; 4], &[1.0, 0.0, -1.0, 0.0]);
        assert!(close(ex2.window(0, 0.0), Mat2::identity(), 0.0));
        assert_eq!(ex2.sigma(), Some(1.0));
        // det 𝔛 = 1 for any positive α
        let m = model(&[1.0, 2.5, 0.7], &[0.3, -1.0, 2.0]);
        assert!((m.window(5, 1.3).det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn periodic_poly_examples() {
        let (al, be) = (ps(&[1.0]), ps(&[0.0]));
        assert_eq!(periodic_poly(&al, &be, 0, 2, 0.0).unwrap().0, -1.0);
        assert_eq!(periodic_poly(&al, &be, 0, 3, 0.0).unwrap().0, 0.0);
        assert_eq!(periodic_poly(&al, &be, 0, 1, 0.0).unwrap().1, 1.0);
        assert_eq!(periodic_poly(&al, &be, 0, 2, 0.0).unwrap().1, 0.0);
        // parity formula at β ≡ 0, α ≡ 1: 𝔭_{2m}(0) = (−1)^m
        for m in 0..6 {
            let v = periodic_poly(&al, &be, 0, 2 * m, 0.0).unwrap().0;
            assert_eq!(v, if m % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn product_identity_with_polynomials() {
        // ∏_{m=k}^{l}𝔅_m(0) expressed through associated polynomials
        let m = model(&[1.0, 2.0, 0.5], &[0.3, -0.2, 1.1]);
        for k in 0..3i64 {
            for l in k..k + 5 {
                let p = |s: i64, n: i64| m.poly_with_derivative(s, n, 0.0).0;
                let r = -m.al(k - 1) / m.al(k);
                let expect = Mat2::new(
                    r * p(k + 1, l - k - 1),
                    p(k, l - k),
                    r * p(k + 1, l - k),
                    p(k, l - k + 1),
                );
                assert!(close(m.product(k, l, 0.0), expect, 1e-12), "k={k} l={l}");
            }
        }
    }

    #[test]
    fn blended_limit_examples() {
        let spec = JacobiSpec::Blended(BlendedSpec {
            period: 1,
            alpha: ps(&[1.0]),
            beta: ps(&[0.0]),
            a_tilde: SequenceGen::constant(1.0),
            b_tilde: SequenceGen::constant(0.0),
            c_tilde: SequenceGen::power(1.2),
        });
        let x = 0.7;
        assert_eq!(limit_matrix(&spec, 1, x).unwrap(), Mat2::new(0.0, -1.0, 1.0, -2.0 * x));
        assert!((limit_matrix(&spec, 1, x).unwrap().discr() - (4.0 * x * x - 4.0)).abs() < 1e-14);
        assert!(limit_matrix(&spec, 0, x).is_err());
        assert!(limit_matrix(&spec, 2, x).is_err());
    }

    fn mod_spec(alpha: &[f64], beta: &[f64], a: SequenceGen, b: SequenceGen) -> JacobiSpec {
        JacobiSpec::Modulated(ModulatedSpec {
            period: alpha.len(),
            alpha: ps(alpha),
            beta: ps(beta),
            a,
            b,
            s: None,
            z: None,
            gamma: None,
        })
    }

    #[test]
    fn scaled_deviation_examples() {
        let spec = mod_spec(&[1.0, 1.0], &[0.0, 0.0], SequenceGen::power(1.0), SequenceGen::constant(0.0));
        let (a, b) = spec.build(200).unwrap();
        let r = scaled_deviation(&spec, &a, &b, 0, 0.0, 50, Scaling::A).unwrap();
        assert!(close(r, Mat2::identity(), 2.0 / 50.0), "{r:?}");

        let spec = mod_spec(&[1.0; 3], &[1.0; 3], SequenceGen::power(1.0), SequenceGen::power(1.0));
        let (a, b) = spec.build(400).unwrap();
        for k in 1..100 {
            assert!(scaled_deviation(&spec, &a, &b, 1, 0.0, k, Scaling::A).unwrap().is_finite());
        }

        let spec = mod_spec(&[1.0], &[3.0], SequenceGen::power(1.0), SequenceGen::Power { exponent: 1.0, coef: 3.0, shift: 1.0 });
        let (a, b) = spec.build(10).unwrap();
        assert!(matches!(
            scaled_deviation(&spec, &a, &b, 0, 0.0, 2, Scaling::A),
            Err(Error::NonCritical { .. })
        ));
    }

    #[test]
    fn modulated_r_fixture() {
        let m = model(&[1.0, 1.0], &[0.0, 0.0]);
        let r = closed_form_r_modulated(&m, &ps(&[1.0, 1.0]), &ps(&[0.0, 0.0]), 0).unwrap();
        for &x in &[-1.5, 0.0, 2.0] {
            assert!(close(r.eval(x), Mat2::new(1.0, x, -x, 1.0), 1e-15));
        }
        assert_eq!(m.critical_sigma().unwrap(), -1.0);
        assert_eq!(modulated_trace_formula(&m, &ps(&[1.0, 1.0]), 0).unwrap(), 2.0);
        assert_eq!(r.linear.tr(), 0.0);
    }

    #[test]
    fn noncarleman_examples() {
        let m = model(&[1.0, 1.0], &[0.0, 0.0]);
        let kappa = 1.7;
        let r = closed_form_r_noncarleman(&m, 0, &ps(&[kappa, kappa]), &ps(&[0.0, 0.0])).unwrap();
        assert!((r.matrix.tr() - 2.0 * kappa).abs() < 1e-14);
        assert!((r.trace_formula - 2.0 * kappa).abs() < 1e-14);
        let zero = closed_form_r_noncarleman(&m, 1, &ps(&[0.0, 0.0]), &ps(&[0.0, 0.0])).unwrap();
        assert_eq!(zero.matrix, Mat2::zero());
    }

    #[test]
    fn km_r_example_one() {
        let m = model(&[1.0; 3], &[1.0; 3]);
        let (kappa, t) = (1.3, 0.4);
        let r = km_r(&m, &ps(&[0.0, 0.0, t]), kappa, 0).unwrap();
        let expect = Mat2::new(-kappa + t, kappa, -kappa - t, -2.0 * kappa - t);
        assert!(close(r, expect, 1e-14), "{r:?}");
        assert!((r.discr() - (4.0 * t * t - 3.0 * kappa * kappa)).abs() < 1e-13);
        assert!((r.tr() + 3.0 * kappa).abs() < 1e-14);
    }

    #[test]
    fn km_r_example_two() {
        let m = model(&[1.0; 4], &[1.0, 0.0, -1.0, 0.0]);
        let f = [0.3, -1.1, 0.25, 2.0];
        let r = km_r(&m, &ps(&f), 0.8, 0).unwrap();
        let alt = f[0] - f[1] + f[2] - f[3];
        assert!((r.discr() - 4.0 * alt * alt).abs() < 1e-12);
    }

    #[test]
    fn even_closed_forms() {
        let (f0, f1, kappa) = (0.4, -0.9, 1.5);
        let (tr, d) = km_r_even_closed(&ps(&[1.0, 1.0]), &ps(&[0.0, 0.0]), &ps(&[f0, f1]), kappa).unwrap();
        assert_eq!(tr, 2.0 * kappa);
        assert!((d - 4.0 * (f0 - f1) * (f0 - f1)).abs() < 1e-14);
        let (_, d) = km_r_even_closed(&ps(&[1.0, 1.0]), &ps(&[0.0, 0.0]), &ps(&[2.0, 2.0]), kappa).unwrap();
        assert_eq!(d, 0.0);
        assert!(km_r_even_closed(&ps(&[1.0; 3]), &ps(&[0.0; 3]), &ps(&[0.0; 3]), 1.0).is_err());
        assert!(km_r_even_closed(&ps(&[1.0, 2.0]), &ps(&[0.0; 2]), &ps(&[0.0; 2]), 1.0).is_err());
        assert!(km_r_even_closed(&ps(&[1.0; 2]), &ps(&[0.0, 1.0]), &ps(&[0.0; 2]), 1.0).is_err());
        let alpha = ps(&[1.0, 2.0, 2.0, 1.0]);
        let f = ps(&[0.2, 0.7, -0.4, 1.9]);
        let (tr, d) = km_r_even_closed(&alpha, &ps(&[0.0; 4]), &f, 0.6).unwrap();
        let r = km_r(&PeriodicModel::new(alpha, ps(&[0.0; 4])).unwrap(), &f, 0.6, 0).unwrap();
        assert!((r.tr() - tr).abs() < 1e-12 && (r.discr() - d).abs() < 1e-8 * d.max(1.0));
    }

    #[test]
    fn perturbation_examples() {
        let a: Vec<f64> = (0..300).map(|n| ((n + 1) as f64).powi(2)).collect();
        let b = vec![0.0; 300];
        let (act, _) = perturbation_bound(&a, &b, 10, 3, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(act, 0.0);
        let z = Complex64::new(0.6, -1.3);
        let (act, bound) = perturbation_bound(&a, &b, 40, 1, z).unwrap();
        assert!((act - z.norm() / a[40]).abs() < 1e-15 * act.max(1e-300) + 1e-18);
        assert!(act <= bound);
        let a: Vec<f64> = (0..300).map(|n| ((n + 1) as f64).powf(1.5)).collect();
        let (act, bound) = perturbation_bound(&a, &b, 100, 2, Complex64::new(1.0, 0.0)).unwrap();
        assert!(act <= bound && act > 0.0);
    }

    #[test]
    fn km_scaled_deviation_approaches_km_r() {
        let spec = JacobiSpec::Km(KmSpec {
            period: 2,
            alpha: ps(&[1.0, 1.0]),
            beta: ps(&[0.0, 0.0]),
            a_tilde: SequenceGen::power(2.0),
            gamma: SequenceGen::power(1.0),
            f: SequenceGen::Periodic { values: vec![0.0, 1.5] },
            kappa: 2.0,
            f_limit: None,
        });
        let k = 20_000;
        let (a, b) = spec.build(2 * k + 4).unwrap();
        let r = scaled_deviation(&spec, &a, &b, 0, 0.0, k, Scaling::Gamma).unwrap();
        let m = PeriodicModel::of(&spec).unwrap();
        let exact = km_r(&m, &ps(&[0.0, 1.5]), 2.0, 0).unwrap();
        assert!(close(r, exact, 1e-3), "{r:?} vs {exact:?}");
    }
}
