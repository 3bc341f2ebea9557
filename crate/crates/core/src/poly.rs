//! Real polynomials in one variable and real-root isolation.

use std::ops::{Add, Mul, Neg, Sub};

/// Polynomial with coefficients stored in ascending order of degree.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Poly::new(vec![0.0, 1.0])
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0.0 {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::constant(0.0);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Drop coefficients that are negligible relative to the largest one.
    pub fn cleaned(&self, rel: f64) -> Poly {
        let m = self.coeffs.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        Poly::new(
            self.coeffs
                .iter()
                .map(|&c| if c.abs() <= rel * m { 0.0 } else { c })
                .collect(),
        )
    }

    /// Cauchy bound: every real root lies in `[-B, B]`.
    pub fn root_bound(&self) -> f64 {
        let lead = self.leading();
        let m = self.coeffs[..self.degree()]
            .iter()
            .fold(0.0_f64, |a, c| a.max((c / lead).abs()));
        1.0 + m
    }

    /// Distinct real roots in ascending order.
    ///
    /// Roots of the derivative split the line into monotone pieces, each
    /// holding at most one simple root found by bisection. Critical points
    /// where the polynomial is numerically zero are reported as (even
    /// multiplicity) roots.
    pub fn real_roots(&self, tol: f64) -> Vec<f64> {
        let p = self.cleaned(1e-15);
        if p.degree() == 0 {
            return Vec::new();
        }
        if p.degree() == 1 {
            return vec![-p.coeffs[0] / p.coeffs[1]];
        }
        let bound = p.root_bound();
        let crit = p.derivative().real_roots(tol);
        let scale = p
            .coeffs
            .iter()
            .fold(0.0_f64, |a, c| a.max(c.abs()));
        let mut knots = vec![-bound];
        knots.extend(crit.iter().copied().filter(|c| c.abs() < bound));
        knots.push(bound);

        let mut roots = Vec::new();
        for &c in &crit {
            let mag = (1.0 + c.abs()).powi(p.degree() as i32);
            if p.eval(c).abs() <= 64.0 * f64::EPSILON * scale * mag {
                roots.push(c);
            }
        }
        for w in knots.windows(2) {
            let (mut lo, mut hi) = (w[0], w[1]);
            let (flo, fhi) = (p.eval(lo), p.eval(hi));
            if flo == 0.0 || fhi == 0.0 || flo.signum() == fhi.signum() {
                continue;
            }
            let rising = fhi > 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= tol || mid <= lo || mid >= hi {
                    break;
                }
                if (p.eval(mid) > 0.0) == rising {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots.dedup_by(|a, b| (*a - *b).abs() <= tol);
        roots
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(0.0) + o.coeffs.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        self + &(-o)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        let mut c = vec![0.0; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }
}

/// 2×2 matrix of polynomials, used to assemble period products exactly in x.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMat2 {
    pub e: [[Poly; 2]; 2],
}

impl PolyMat2 {
    pub fn new(a: Poly, b: Poly, c: Poly, d: Poly) -> Self {
        PolyMat2 {
            e: [[a, b], [c, d]],
        }
    }

    pub fn identity() -> Self {
        PolyMat2::new(
            Poly::constant(1.0),
            Poly::constant(0.0),
            Poly::constant(0.0),
            Poly::constant(1.0),
        )
    }

    pub fn mul(&self, o: &PolyMat2) -> PolyMat2 {
        let e = &self.e;
        let f = &o.e;
        PolyMat2::new(
            &(&e[0][0] * &f[0][0]) + &(&e[0][1] * &f[1][0]),
            &(&e[0][0] * &f[0][1]) + &(&e[0][1] * &f[1][1]),
            &(&e[1][0] * &f[0][0]) + &(&e[1][1] * &f[1][0]),
            &(&e[1][0] * &f[0][1]) + &(&e[1][1] * &f[1][1]),
        )
    }

    pub fn tr(&self) -> Poly {
        &self.e[0][0] + &self.e[1][1]
    }

    pub fn det(&self) -> Poly {
        &(&self.e[0][0] * &self.e[1][1]) - &(&self.e[0][1] * &self.e[1][0])
    }

    pub fn discr(&self) -> Poly {
        let t = self.tr();
        &(&t * &t) - &self.det().scale(4.0)
    }

    pub fn eval(&self, x: f64) -> crate::mat2::Mat2<f64> {
        crate::mat2::Mat2::new(
            self.e[0][0].eval(x),
            self.e[0][1].eval(x),
            self.e[1][0].eval(x),
            self.e[1][1].eval(x),
        )
    }
}
