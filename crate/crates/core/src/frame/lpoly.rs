use std::fmt::Debug;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::series::LaurentSeries;

/// Gaussian rational.
pub type GaussQ = Complex<BigRational>;

/// Coefficient field for Laurent polynomials.
pub trait Coeff: Clone + Debug + PartialEq {
    /// Exact arithmetic: no rounding and no chopping.
    const EXACT: bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn is_zero(&self) -> bool;
    fn magnitude(&self) -> f64;
    fn to_c64(&self) -> Complex64;
    fn from_c64(c: Complex64) -> Result<Self>;
}

impl Coeff for GaussQ {
    const EXACT: bool = true;
    fn zero() -> Self {
        Complex::new(BigRational::zero(), BigRational::zero())
    }
    fn one() -> Self {
        Complex::new(BigRational::one(), BigRational::zero())
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }
    fn from_c64(c: Complex64) -> Result<Self> {
        let re = BigRational::from_float(c.re).ok_or(Error::NonFinite("exact coefficient"))?;
        let im = BigRational::from_float(c.im).ok_or(Error::NonFinite("exact coefficient"))?;
        Ok(Complex::new(re, im))
    }
}

impl Coeff for Complex64 {
    const EXACT: bool = false;
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn is_zero(&self) -> bool {
        *self == Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn from_c64(c: Complex64) -> Result<Self> {
        Ok(c)
    }
}

/// Gaussian integer `a + b i` as a Gaussian rational.
pub fn gauss_int(a: i64, b: i64) -> GaussQ {
    Complex::new(BigRational::from_integer(BigInt::from(a)), BigRational::from_integer(BigInt::from(b)))
}

/// Relative size below which float coefficients are treated as cancelled.
pub const NUMERIC_CHOP: f64 = 1e-11;

/// Laurent polynomial `sum_k c_k u^k`, stored trimmed: the first and last
/// coefficients are nonzero; the zero polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LPoly<T: Coeff> {
    kmin: i32,
    coeffs: Vec<T>,
}

impl<T: Coeff> LPoly<T> {
    pub fn zero() -> Self {
        Self {
            kmin: 0,
            coeffs: Vec::new(),
        }
    }

    pub fn one() -> Self {
        Self::monomial(T::one(), 0)
    }

    pub fn monomial(c: T, k: i32) -> Self {
        Self::from_coeffs(k, vec![c])
    }

    pub fn from_coeffs(kmin: i32, coeffs: Vec<T>) -> Self {
        let mut p = Self { kmin, coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(T::is_zero) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.kmin += lead as i32;
        }
        if self.coeffs.is_empty() {
            self.kmin = 0;
        }
    }

    /// Zeroes float coefficients below `NUMERIC_CHOP * scale`.
    fn chop(&mut self, scale: f64) {
        if T::EXACT {
            return;
        }
        for c in &mut self.coeffs {
            if c.magnitude() <= NUMERIC_CHOP * scale {
                *c = T::zero();
            }
        }
        self.trim();
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn kmin(&self) -> i32 {
        self.kmin
    }

    pub fn kmax(&self) -> i32 {
        self.kmin + self.coeffs.len() as i32 - 1
    }

    /// Euclidean size: `kmax - kmin`; zero for monomials.
    pub fn span(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_unit(&self) -> bool {
        self.coeffs.len() == 1
    }

    pub fn coeff(&self, k: i32) -> T {
        if self.is_zero() || k < self.kmin || k > self.kmax() {
            T::zero()
        } else {
            self.coeffs[(k - self.kmin) as usize].clone()
        }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn scale_norm(&self) -> f64 {
        self.coeffs.iter().map(T::magnitude).fold(0.0, f64::max)
    }

    pub fn add(&self, o: &Self) -> Self {
        self.combine(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.combine(o, |a, b| a.sub(b))
    }

    fn combine(&self, o: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        if self.is_zero() && o.is_zero() {
            return Self::zero();
        }
        let lo = if self.is_zero() {
            o.kmin
        } else if o.is_zero() {
            self.kmin
        } else {
            self.kmin.min(o.kmin)
        };
        let hi = self.kmax().max(o.kmax());
        let coeffs = (lo..=hi).map(|k| f(&self.coeff(k), &o.coeff(k))).collect();
        let mut out = Self::from_coeffs(lo, coeffs);
        out.chop(self.scale_norm().max(o.scale_norm()));
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![T::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        Self::from_coeffs(self.kmin + o.kmin, coeffs)
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::from_coeffs(self.kmin, self.coeffs.iter().map(|x| x.mul(c)).collect())
    }

    pub fn neg(&self) -> Self {
        Self::zero().sub(self)
    }

    /// Inverse of a unit `c u^k`.
    pub fn unit_inverse(&self) -> Option<Self> {
        if self.is_unit() {
            Some(Self::monomial(T::one().div(&self.coeffs[0]), -self.kmin))
        } else {
            None
        }
    }

    /// Euclidean division in `C[u, 1/u]`: `self = q * b + r` with
    /// `r = 0` or `span(r) < span(b)`.
    pub fn div_rem(&self, b: &Self) -> (Self, Self) {
        assert!(!b.is_zero(), "division by the zero Laurent polynomial");
        if self.is_zero() {
            return (Self::zero(), Self::zero());
        }
        // self = u^i A(u), b = u^j B(u) with A(0), B(0) nonzero.
        let db = b.span();
        let lead_b = b.coeffs[db].clone();
        let mut rem: Vec<T> = self.coeffs.clone();
        let scale = self.scale_norm().max(b.scale_norm());
        let da = rem.len() - 1;
        if da < db {
            return (Self::zero(), self.clone());
        }
        let mut q = vec![T::zero(); da - db + 1];
        for top in (db..=da).rev() {
            let c = rem[top].div(&lead_b);
            if c.is_zero() {
                continue;
            }
            for (k, bk) in b.coeffs.iter().enumerate() {
                let idx = top - db + k;
                rem[idx] = rem[idx].sub(&c.mul(bk));
            }
            rem[top] = T::zero();
            q[top - db] = c;
        }
        rem.truncate(db);
        let mut r = Self::from_coeffs(self.kmin, rem);
        r.chop(scale);
        let q = Self::from_coeffs(self.kmin - b.kmin, q);
        (q, r)
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * u + c.to_c64();
        }
        if self.is_zero() {
            acc
        } else {
            acc * u.powi(self.kmin)
        }
    }

    pub fn to_series(&self, var: &str) -> LaurentSeries {
        if self.is_zero() {
            return LaurentSeries::zero(var);
        }
        let terms: Vec<(i32, Complex64)> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (self.kmin + i as i32, c.to_c64()))
            .collect();
        LaurentSeries::from_terms(var, &terms)
    }

    pub fn from_series(s: &LaurentSeries) -> Result<Self> {
        let coeffs = s.coeffs().iter().map(|c| T::from_c64(*c)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_coeffs(s.kmin(), coeffs))
    }

    /// Roots in `C*` of the polynomial part (for witnesses), via the companion matrix.
    pub fn roots(&self) -> Vec<Complex64> {
        let d = self.span();
        if d == 0 {
            return Vec::new();
        }
        let c: Vec<Complex64> = self.coeffs.iter().map(T::to_c64).collect();
        let lead = c[d];
        let comp = nalgebra::DMatrix::<Complex64>::from_fn(d, d, |i, j| {
            if j == d - 1 {
                -c[i] / lead
            } else if i == j + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        comp.schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
    }
}

impl LPoly<GaussQ> {
    /// Largest numerator or denominator among the coefficients.
    pub fn max_height(&self) -> BigInt {
        self.coeffs
            .iter()
            .flat_map(|c| [c.re.numer().abs(), c.re.denom().clone(), c.im.numer().abs(), c.im.denom().clone()])
            .max()
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = LPoly<GaussQ>;

    fn poly(kmin: i32, c: &[i64]) -> Q {
        Q::from_coeffs(kmin, c.iter().map(|&x| gauss_int(x, 0)).collect())
    }

    #[test]
    fn euclidean_division_reduces_span() {
        let a = poly(-2, &[1, 0, 3, 1, 2]);
        let b = poly(1, &[2, 1, 1]);
        let (q, r) = a.div_rem(&b);
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.span() < b.span());
    }

    #[test]
    fn units() {
        let u = Q::monomial(gauss_int(0, 2), -3);
        assert_eq!(u.mul(&u.unit_inverse().unwrap()), Q::one());
        assert!(poly(0, &[1, 1]).unit_inverse().is_none());
    }

    #[test]
    fn companion_roots() {
        let p = poly(-1, &[-2, 0, 1]); // u^-1 (u^2 - 2)
        let mut r: Vec<f64> = p.roots().iter().map(|z| z.re).collect();
        r.sort_by(f64::total_cmp);
        assert!((r[0] + 2f64.sqrt()).abs() < 1e-12 && (r[1] - 2f64.sqrt()).abs() < 1e-12);
    }
}
