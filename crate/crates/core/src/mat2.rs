//! 2×2 matrices over real or complex scalars.
//!
//! Everything in the transfer-matrix formalism is a 2×2 product, so the
//! matrix type is small, `Copy`, and generic over [`Scalar`].

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Field of matrix entries: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_real(x: f64) -> Self;
    /// Absolute value / complex modulus.
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
    fn to_complex(self) -> Complex64;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn conj(self) -> Self {
        self
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn is_finite(self) -> bool {
        Complex64::is_finite(self)
    }
}

/// A 2×2 matrix stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T> {
    pub e: [[T; 2]; 2],
}

pub type CMat2 = Mat2<Complex64>;

impl<T: Scalar> Mat2<T> {
    pub fn new(a11: T, a12: T, a21: T, a22: T) -> Self {
        Mat2 {
            e: [[a11, a12], [a21, a22]],
        }
    }

    pub fn identity() -> Self {
        Self::diag(T::one(), T::one())
    }

    pub fn zero() -> Self {
        Self::diag(T::zero(), T::zero())
    }

    pub fn diag(d1: T, d2: T) -> Self {
        Self::new(d1, T::zero(), T::zero(), d2)
    }

    /// The exchange matrix `[[0,1],[1,0]]`.
    pub fn exchange() -> Self {
        Self::new(T::zero(), T::one(), T::one(), T::zero())
    }

    pub fn det(&self) -> T {
        self.e[0][0] * self.e[1][1] - self.e[0][1] * self.e[1][0]
    }

    pub fn tr(&self) -> T {
        self.e[0][0] + self.e[1][1]
    }

    /// `tr² − 4·det`.
    pub fn discr(&self) -> T {
        let t = self.tr();
        t * t - T::from_real(4.0) * self.det()
    }

    /// Inverse by the adjugate formula. Returns `None` for a zero determinant.
    pub fn inv(&self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() || !d.is_finite() {
            return None;
        }
        let [[a, b], [c, dd]] = self.e;
        Some(Self::new(dd / d, -b / d, -c / d, a / d))
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Mat2<U> {
        let [[a, b], [c, d]] = self.e;
        Mat2::new(f(a), f(b), f(c), f(d))
    }

    pub fn to_complex(&self) -> CMat2 {
        self.map(|v| v.to_complex())
    }

    pub fn transpose(&self) -> Self {
        let [[a, b], [c, d]] = self.e;
        Self::new(a, c, b, d)
    }

    pub fn apply(&self, v: [T; 2]) -> [T; 2] {
        [
            self.e[0][0] * v[0] + self.e[0][1] * v[1],
            self.e[1][0] * v[0] + self.e[1][1] * v[1],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().flatten().all(|v| v.is_finite())
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.e
            .iter()
            .flatten()
            .map(|v| v.modulus().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Operator 2-norm (largest singular value) in closed form.
    ///
    /// Uses the largest eigenvalue of the Hermitian Gram matrix `MᴴM`, which
    /// is a sum of nonnegative terms and so free of cancellation. Entries
    /// are pre-scaled to keep the squares in range.
    pub fn norm(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 || !m.is_finite() {
            return m;
        }
        let s = self.map(|v| (v / T::from_real(m)).to_complex());
        let [[a, b], [c, d]] = s.e;
        let p = a.norm_sqr() + c.norm_sqr();
        let r = b.norm_sqr() + d.norm_sqr();
        let q = (a.conj() * b + c.conj() * d).norm();
        let half = 0.5 * (p - r);
        m * (0.5 * (p + r) + half.hypot(q)).sqrt()
    }

    /// Maximum entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.e
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.modulus()))
    }
}

impl<T: Scalar> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.e[0][0] + o.e[0][0],
            self.e[0][1] + o.e[0][1],
            self.e[1][0] + o.e[1][0],
            self.e[1][1] + o.e[1][1],
        )
    }
}

impl<T: Scalar> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.e[0][0] - o.e[0][0],
            self.e[0][1] - o.e[0][1],
            self.e[1][0] - o.e[1][0],
            self.e[1][1] - o.e[1][1],
        )
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let [[a, b], [c, d]] = self.e;
        let [[p, q], [r, s]] = o.e;
        Self::new(a * p + b * r, a * q + b * s, c * p + d * r, c * q + d * s)
    }
}

impl<T: Scalar> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|v| -v)
    }
}

impl<T: Scalar + Serialize> Serialize for Mat2<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let [[a, b], [c, d]] = self.e;
        [a, b, c, d].serialize(s)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for Mat2<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [a, b, c, e] = <[T; 4]>::deserialize(d)?;
        Ok(Mat2::new(a, b, c, e))
    }
}

/// An affine matrix function `x ↦ constant + x·linear`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMat2 {
    pub constant: Mat2<f64>,
    pub linear: Mat2<f64>,
}

impl AffineMat2 {
    pub fn constant(m: Mat2<f64>) -> Self {
        AffineMat2 {
            constant: m,
            linear: Mat2::zero(),
        }
    }

    pub fn eval(&self, x: f64) -> Mat2<f64> {
        self.constant + self.linear.scale(x)
    }

    pub fn eval_complex(&self, z: Complex64) -> CMat2 {
        self.constant.to_complex() + self.linear.to_complex().scale(z)
    }

    /// Coefficients `[c0, c1, c2]` of the quadratic `x ↦ discr(M0 + x·M1)`.
    pub fn discr_coeffs(&self) -> [f64; 3] {
        let m0 = &self.constant.e;
        let m1 = &self.linear.e;
        let t0 = m0[0][0] + m0[1][1];
        let t1 = m1[0][0] + m1[1][1];
        // det(M0 + xM1) = det M0 + x·mixed + x²·det M1
        let mixed = m0[0][0] * m1[1][1] + m1[0][0] * m0[1][1]
            - m0[0][1] * m1[1][0]
            - m1[0][1] * m0[1][0];
        [
            t0 * t0 - 4.0 * self.constant.det(),
            2.0 * t0 * t1 - 4.0 * mixed,
            t1 * t1 - 4.0 * self.linear.det(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_tr_discr() {
        let m = Mat2::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(m.det(), -2.0);
        assert_eq!(m.tr(), 5.0);
        assert_eq!(m.discr(), 33.0);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2::new(2.0, 1.0, 1.0, 3.0);
        let p = m * m.inv().unwrap();
        assert!((p - Mat2::identity()).max_abs() < 1e-15);
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).inv().is_none());
    }

    #[test]
    fn two_norm_matches_known_values() {
        assert!((Mat2::diag(3.0, -5.0).norm() - 5.0).abs() < 1e-14);
        // rotation is an isometry
        let r = Mat2::new(0.6, -0.8, 0.8, 0.6);
        assert!((r.norm() - 1.0).abs() < 1e-14);
        // nilpotent Jordan block
        assert!((Mat2::new(0.0, 2.0, 0.0, 0.0).norm() - 2.0).abs() < 1e-14);
        let big = Mat2::new(1e200, 0.0, 0.0, 1e199);
        assert!((big.norm() / 1e200 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complex_norm_of_unitary() {
        let i = Complex64::i();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = Mat2::new(
            Complex64::from_real(s),
            i * s,
            i * s,
            Complex64::from_real(s),
        );
        assert!((u.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn serializes_row_major() {
        let m = Mat2::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(serde_json::to_string(&m).unwrap(), "[1.0,2.0,3.0,4.0]");
        let c = Mat2::new(
            Complex64::new(1.0, -1.0),
            Complex64::zero(),
            Complex64::zero(),
            Complex64::one(),
        );
        let txt = serde_json::to_string(&c).unwrap();
        assert_eq!(txt, "[[1.0,-1.0],[0.0,0.0],[0.0,0.0],[1.0,0.0]]");
        let back: CMat2 = serde_json::from_str(&txt).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn affine_discriminant_coefficients() {
        // [[1, x], [-x, 1]] has discr = -4x²
        let r = AffineMat2 {
            constant: Mat2::identity(),
            linear: Mat2::new(0.0, 1.0, -1.0, 0.0),
        };
        assert_eq!(r.discr_coeffs(), [0.0, 0.0, -4.0]);
        for &x in &[-2.0, 0.3, 5.0] {
            let [c0, c1, c2] = r.discr_coeffs();
            assert!((r.eval(x).discr() - (c0 + c1 * x + c2 * x * x)).abs() < 1e-12);
        }
    }
}
