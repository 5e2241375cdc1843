use std::fmt;

use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Truncated Laurent expansion `sum_{k=kmin}^{kmax} c_k u^k` in one base variable.
#[derive(Clone, PartialEq)]
pub struct LaurentSeries {
    var: String,
    kmin: i32,
    coeffs: Vec<Complex64>,
}

impl LaurentSeries {
    pub fn new(var: impl Into<String>, kmin: i32, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Structural("empty coefficient array".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("LaurentSeries"));
        }
        Ok(Self {
            var: var.into(),
            kmin,
            coeffs,
        })
    }

    pub fn zero(var: impl Into<String>) -> Self {
        Self {
            var: var.into(),
            kmin: 0,
            coeffs: vec![Complex64::zero()],
        }
    }

    pub fn constant(var: impl Into<String>, c: Complex64) -> Self {
        Self {
            var: var.into(),
            kmin: 0,
            coeffs: vec![c],
        }
    }

    pub fn monomial(var: impl Into<String>, c: Complex64, k: i32) -> Self {
        Self {
            var: var.into(),
            kmin: k,
            coeffs: vec![c],
        }
    }

    /// Builds a series from `(exponent, coefficient)` pairs; repeated exponents add up.
    pub fn from_terms(var: impl Into<String>, terms: &[(i32, Complex64)]) -> Self {
        if terms.is_empty() {
            return Self::zero(var);
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut coeffs = vec![Complex64::zero(); (hi - lo + 1) as usize];
        for &(k, c) in terms {
            coeffs[(k - lo) as usize] += c;
        }
        Self {
            var: var.into(),
            kmin: lo,
            coeffs,
        }
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn kmin(&self) -> i32 {
        self.kmin
    }

    pub fn kmax(&self) -> i32 {
        self.kmin + self.coeffs.len() as i32 - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: i32) -> Complex64 {
        if k < self.kmin || k > self.kmax() {
            Complex64::zero()
        } else {
            self.coeffs[(k - self.kmin) as usize]
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (self.kmin + i as i32, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        // Horner on the polynomial part, then shift by u^kmin.
        let mut acc = Complex64::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * u + c;
        }
        acc * u.powi(self.kmin)
    }

    pub fn derivative(&self) -> Self {
        let terms: Vec<(i32, Complex64)> = self
            .terms()
            .filter(|(k, _)| *k != 0)
            .map(|(k, c)| (k - 1, c * k as f64))
            .collect();
        Self::from_terms(self.var.clone(), &terms)
    }

    /// Primitive without constant term, together with the discarded residue
    /// (the coefficient of `u^-1`, which has no single-valued primitive).
    pub fn antiderivative(&self) -> (Self, Complex64) {
        let residue = self.coeff(-1);
        let terms: Vec<(i32, Complex64)> = self
            .terms()
            .filter(|(k, _)| *k != -1)
            .map(|(k, c)| (k + 1, c / (k + 1) as f64))
            .collect();
        (Self::from_terms(self.var.clone(), &terms), residue)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            var: self.var.clone(),
            kmin: self.kmin,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let lo = self.kmin.min(other.kmin);
        let hi = self.kmax().max(other.kmax());
        let coeffs = (lo..=hi).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Self {
            var: self.var.clone(),
            kmin: lo,
            coeffs,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Full (untruncated) Cauchy product.
    pub fn mul(&self, other: &Self) -> Self {
        let mut coeffs = vec![Complex64::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self {
            var: self.var.clone(),
            kmin: self.kmin + other.kmin,
            coeffs,
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(self.var.clone(), Complex64::new(1.0, 0.0));
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Restricts to the window `[lo, hi]`; the flag reports whether a nonzero
    /// coefficient was dropped.
    pub fn truncate(&self, lo: i32, hi: i32) -> (Self, bool) {
        let mut dropped = false;
        let coeffs = (lo..=hi).map(|k| self.coeff(k)).collect();
        for (k, c) in self.terms() {
            if (k < lo || k > hi) && !c.is_zero() {
                dropped = true;
            }
        }
        (
            Self {
                var: self.var.clone(),
                kmin: lo,
                coeffs,
            },
            dropped,
        )
    }

    /// Drops leading and trailing zero coefficients.
    pub fn trimmed(&self) -> Self {
        let first = self.coeffs.iter().position(|c| !c.is_zero());
        match first {
            None => Self::zero(self.var.clone()),
            Some(f) => {
                let last = self.coeffs.iter().rposition(|c| !c.is_zero()).unwrap();
                Self {
                    var: self.var.clone(),
                    kmin: self.kmin + f as i32,
                    coeffs: self.coeffs[f..=last].to_vec(),
                }
            }
        }
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        let lo = self.kmin.min(other.kmin);
        let hi = self.kmax().max(other.kmax());
        (lo..=hi)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }

    /// Coefficients `lo..=hi` of a function holomorphic near `|u| = rho`,
    /// from `n` equispaced samples (trapezoidal rule, `n > hi - lo`).
    pub fn from_circle_samples(
        var: impl Into<String>,
        f: impl Fn(Complex64) -> Complex64,
        rho: f64,
        lo: i32,
        hi: i32,
        n: usize,
    ) -> Result<Self> {
        if hi < lo || n <= (hi - lo) as usize {
            return Err(Error::Structural("sample count must exceed the window width".into()));
        }
        let samples: Vec<Complex64> = (0..n)
            .map(|j| f(Complex64::from_polar(rho, 2.0 * std::f64::consts::PI * j as f64 / n as f64)))
            .collect();
        let coeffs = (lo..=hi)
            .map(|k| {
                let mut acc = Complex64::zero();
                for (j, s) in samples.iter().enumerate() {
                    let idx = (i64::from(k) * j as i64).rem_euclid(n as i64);
                    let ang = -2.0 * std::f64::consts::PI * idx as f64 / n as f64;
                    acc += s * Complex64::from_polar(1.0, ang);
                }
                acc / (n as f64 * rho.powi(k))
            })
            .collect();
        Self::new(var, lo, coeffs)
    }
}

impl fmt::Debug for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}{:+}i){}^{}", c.re, c.im, self.var, k)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesLiteral {
    var: String,
    kmin: i32,
    kmax: i32,
    coeffs: Vec<[f64; 2]>,
}

impl Serialize for LaurentSeries {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesLiteral {
            var: self.var.clone(),
            kmin: self.kmin,
            kmax: self.kmax(),
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentSeries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let lit = SeriesLiteral::deserialize(d)?;
        if lit.kmax < lit.kmin || (lit.kmax - lit.kmin + 1) as usize != lit.coeffs.len() {
            return Err(serde::de::Error::custom(format!(
                "series window [{}, {}] does not match {} coefficients",
                lit.kmin,
                lit.kmax,
                lit.coeffs.len()
            )));
        }
        let coeffs = lit.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect();
        LaurentSeries::new(lit.var, lit.kmin, coeffs).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eval_laurent_polynomial() {
        let s = LaurentSeries::from_terms("u", &[(-1, c(1.0)), (2, c(3.0))]);
        let u = Complex64::new(0.3, -0.7);
        let expected = u.inv() + u * u * 3.0;
        assert!((s.eval(u) - expected).norm() < 1e-14);
    }

    #[test]
    fn antiderivative_reports_residue() {
        let s = LaurentSeries::from_terms("u", &[(-1, c(2.0)), (3, c(1.0))]);
        let (p, res) = s.antiderivative();
        assert_eq!(res, c(2.0));
        assert_eq!(p.coeff(4), c(0.25));
        assert_eq!(p.derivative().coeff(3), c(1.0));
    }

    #[test]
    fn truncate_flags_dropped_terms() {
        let s = LaurentSeries::from_terms("u", &[(0, c(1.0)), (5, c(1.0))]);
        let (t, dropped) = s.truncate(-2, 3);
        assert!(dropped);
        assert_eq!(t.kmax(), 3);
        let (_, dropped) = s.truncate(0, 5);
        assert!(!dropped);
    }

    #[test]
    fn json_literal_round_trip() {
        let json = r#"{"var":"u","kmin":-1,"kmax":2,"coeffs":[[1,0],[0,0],[0,1],[2,0]]}"#;
        let s: LaurentSeries = serde_json::from_str(json).unwrap();
        assert_eq!(s.coeff(1), Complex64::new(0.0, 1.0));
        let back: LaurentSeries = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"var":"u","kmin":0,"kmax":2,"coeffs":[[1,0]]}"#;
        assert!(serde_json::from_str::<LaurentSeries>(bad).is_err());
    }
}
