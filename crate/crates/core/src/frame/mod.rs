//! Completion of a full-rank `m x p` matrix of holomorphic functions on the
//! base to an invertible `p x p` matrix `B` with `A B = (I_m, 0)`.
//!
//! On curve bases the entries are Laurent polynomials and the ring
//! `C[u, 1/u]` is Euclidean, so column Euclid produces `B` directly:
//! exactly over Gaussian rationals, or in floating point followed by a
//! sampled correction. Truncated Taylor jets over a polydisc are completed
//! from a constant completion at the origin.

mod lpoly;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{BaseInverse, Jet, JetMatrix, LaurentSeries};

pub use lpoly::{gauss_int, Coeff, GaussQ, LPoly, NUMERIC_CHOP};

/// Minimum singular value required at every sample point.
pub const TOL_RANK: f64 = 1e-9;
/// Sampled residual bound in numeric mode.
pub const TOL_NUMERIC: f64 = 1e-10;
/// Lower bound for `|det B|` on samples in numeric mode.
pub const TOL_DET: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameMode {
    Exact,
    Numeric,
}

/// Matrix of Laurent series in one base variable.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<LaurentSeries>,
}

impl FunctionMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<LaurentSeries>) -> Result<Self> {
        if entries.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::Structural("function matrix shape mismatch".into()));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_rows(rows: Vec<Vec<LaurentSeries>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Structural("ragged function matrix".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentSeries {
        &self.entries[i * self.cols + j]
    }

    pub fn eval(&self, u: Complex64) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(u))
    }

    pub fn mul(&self, o: &FunctionMatrix) -> FunctionMatrix {
        let var = self.entries[0].var().to_string();
        let entries = (0..self.rows * o.cols)
            .map(|k| {
                let (i, j) = (k / o.cols, k % o.cols);
                let mut acc = LaurentSeries::zero(var.clone());
                for l in 0..self.cols {
                    acc = acc.add(&self.get(i, l).mul(o.get(l, j)));
                }
                acc.trimmed()
            })
            .collect();
        FunctionMatrix {
            rows: self.rows,
            cols: o.cols,
            entries,
        }
    }

    fn to_lmatrix<T: Coeff>(&self) -> Result<LMatrix<T>> {
        Ok(LMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(LPoly::from_series).collect::<Result<Vec<_>>>()?,
        })
    }
}

/// Matrix of Laurent polynomials over a coefficient field.
#[derive(Clone, Debug, PartialEq)]
pub struct LMatrix<T: Coeff> {
    rows: usize,
    cols: usize,
    entries: Vec<LPoly<T>>,
}

impl<T: Coeff> LMatrix<T> {
    pub fn new(rows: usize, cols: usize, entries: Vec<LPoly<T>>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Structural("Laurent matrix shape mismatch".into()));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            entries: (0..n * n)
                .map(|k| if k / n == k % n { LPoly::one() } else { LPoly::zero() })
                .collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &LPoly<T> {
        &self.entries[i * self.cols + j]
    }

    fn set(&mut self, i: usize, j: usize, v: LPoly<T>) {
        self.entries[i * self.cols + j] = v;
    }

    /// `col_j <- col_j - q col_k`.
    fn col_axpy(&mut self, j: usize, q: &LPoly<T>, k: usize) {
        for i in 0..self.rows {
            let upd = self.get(i, j).sub(&q.mul(self.get(i, k)));
            self.set(i, j, upd);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    fn scale_col(&mut self, j: usize, s: &LPoly<T>) {
        for i in 0..self.rows {
            let upd = self.get(i, j).mul(s);
            self.set(i, j, upd);
        }
    }

    pub fn mul(&self, o: &LMatrix<T>) -> LMatrix<T> {
        let entries = (0..self.rows * o.cols)
            .map(|k| {
                let (i, j) = (k / o.cols, k % o.cols);
                let mut acc = LPoly::zero();
                for l in 0..self.cols {
                    acc = acc.add(&self.get(i, l).mul(o.get(l, j)));
                }
                acc
            })
            .collect();
        LMatrix {
            rows: self.rows,
            cols: o.cols,
            entries,
        }
    }

    /// Determinant by cofactor expansion (small sizes only).
    pub fn det(&self) -> LPoly<T> {
        assert_eq!(self.rows, self.cols);
        let idx: Vec<usize> = (0..self.cols).collect();
        self.minor_det(0, &idx)
    }

    fn minor_det(&self, row: usize, cols: &[usize]) -> LPoly<T> {
        if cols.is_empty() {
            return LPoly::one();
        }
        let mut acc = LPoly::zero();
        for (pos, &c) in cols.iter().enumerate() {
            let e = self.get(row, c);
            if e.is_zero() {
                continue;
            }
            let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let term = e.mul(&self.minor_det(row + 1, &rest));
            acc = if pos % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
        }
        acc
    }

    pub fn eval(&self, u: Complex64) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(u))
    }

    pub fn to_function_matrix(&self, var: &str) -> FunctionMatrix {
        FunctionMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|p| p.to_series(var)).collect(),
        }
    }

    /// Whether `self == (I_m, 0)` coefficientwise.
    pub fn is_identity_block(&self) -> bool {
        (0..self.rows).all(|i| {
            (0..self.cols).all(|j| {
                let e = self.get(i, j);
                if i == j {
                    *e == LPoly::one()
                } else {
                    e.is_zero()
                }
            })
        })
    }
}

/// One column operation of the Euclid reduction, kept for audit.
#[derive(Clone, Debug, Serialize)]
pub struct PivotStep {
    pub row: usize,
    pub pivot_col: usize,
    pub pivot_span: usize,
}

/// Column Euclid: returns unimodular `B` with `A B = (I_m, 0)` and `det B`.
///
/// Pivot: the nonzero entry of least span, then least `max(|kmin|, |kmax|)`,
/// then the lowest column index.
pub fn column_euclid<T: Coeff>(a: &LMatrix<T>) -> Result<(LMatrix<T>, LPoly<T>, Vec<PivotStep>)> {
    let (m, p) = (a.rows, a.cols);
    if m > p {
        return Err(Error::Structural(format!("cannot complete a {m}x{p} matrix")));
    }
    let mut work = a.clone();
    let mut b = LMatrix::<T>::identity(p);
    let mut det = LPoly::<T>::one();
    let mut log = Vec::new();
    for i in 0..m {
        loop {
            let nz: Vec<usize> = (i..p).filter(|&j| !work.get(i, j).is_zero()).collect();
            let Some(&piv) = nz.iter().min_by_key(|&&j| {
                let e = work.get(i, j);
                (e.span(), e.kmin().abs().max(e.kmax().abs()), j)
            }) else {
                return Err(rank_error(a, i, &LPoly::zero()));
            };
            log.push(PivotStep {
                row: i,
                pivot_col: piv,
                pivot_span: work.get(i, piv).span(),
            });
            if nz.len() == 1 {
                if piv != i {
                    work.swap_cols(i, piv);
                    b.swap_cols(i, piv);
                    det = det.neg();
                }
                break;
            }
            let pv = work.get(i, piv).clone();
            for &j in &nz {
                if j == piv {
                    continue;
                }
                let (q, r) = work.get(i, j).div_rem(&pv);
                work.col_axpy(j, &q, piv);
                b.col_axpy(j, &q, piv);
                if !T::EXACT {
                    // The remainder is the new entry; float cancellation must not leave residue.
                    work.set(i, j, r);
                }
            }
        }
        let g = work.get(i, i).clone();
        let Some(inv) = g.unit_inverse() else {
            return Err(rank_error(a, i, &g));
        };
        work.scale_col(i, &inv);
        b.scale_col(i, &inv);
        det = det.mul(&inv);
        for r in 0..i {
            debug_assert!(work.get(r, i).is_zero());
        }
        for j in 0..i {
            let q = work.get(i, j).clone();
            if !q.is_zero() {
                work.col_axpy(j, &q, i);
                b.col_axpy(j, &q, i);
                if !T::EXACT {
                    work.set(i, j, LPoly::zero());
                }
            }
        }
    }
    Ok((b, det, log))
}

fn rank_error<T: Coeff>(a: &LMatrix<T>, row: usize, gcd: &LPoly<T>) -> Error {
    let witness = gcd.roots().first().copied().unwrap_or_default();
    let sigma = min_singular(&a.eval(witness));
    if T::EXACT {
        Error::RankDeficient { witness, sigma }
    } else {
        Error::ExactGcdFailure(format!(
            "row {row}: float Euclid ended on a non-unit gcd (near-common zero at {witness}, sigma {sigma:e})"
        ))
    }
}

fn min_singular(m: &DMatrix<Complex64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    sv.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Minimum over samples of the smallest singular value, with the witness.
pub fn rank_check(a: &FunctionMatrix, samples: &[Complex64], tol: f64) -> Result<(f64, Complex64)> {
    let mut best = (f64::INFINITY, Complex64::new(0.0, 0.0));
    for &u in samples {
        let s = min_singular(&a.eval(u));
        if s < best.0 {
            best = (s, u);
        }
    }
    if !(best.0 > tol) {
        return Err(Error::RankDeficient {
            witness: best.1,
            sigma: best.0,
        });
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct FrameCertificate {
    pub mode: FrameMode,
    pub rows: usize,
    pub cols: usize,
    pub min_sigma: f64,
    /// Exact mode: `A B == (I, 0)` coefficientwise.
    pub exact_identity: bool,
    /// Largest sampled entry of `A B - (I, 0)`.
    pub residual: f64,
    /// Exact mode: `det B = c u^k` with `(c, k)`.
    pub det_unit: Option<([f64; 2], i32)>,
    /// Smallest sampled `|det B|`.
    pub det_min_abs: f64,
    pub pivots: Vec<PivotStep>,
}

#[derive(Clone, Debug)]
pub struct FrameCompletion {
    pub b: FunctionMatrix,
    pub exact: Option<LMatrix<GaussQ>>,
    pub certificate: FrameCertificate,
}

fn sampled_residual(a: &FunctionMatrix, b: &FunctionMatrix, samples: &[Complex64]) -> (f64, f64) {
    let (m, p) = (a.rows, a.cols);
    let mut res: f64 = 0.0;
    let mut det_min = f64::INFINITY;
    for &u in samples {
        let bu = b.eval(u);
        let ab = a.eval(u) * &bu;
        for i in 0..m {
            for j in 0..p {
                let target = if i == j { 1.0 } else { 0.0 };
                res = res.max((ab[(i, j)] - target).norm());
            }
        }
        det_min = det_min.min(bu.determinant().norm());
    }
    (res, det_min)
}

/// Exact completion of Gaussian-rational Laurent polynomial data.
pub fn frame_complete_exact(a: &LMatrix<GaussQ>, var: &str, samples: &[Complex64]) -> Result<FrameCompletion> {
    let fa = a.to_function_matrix(var);
    let (min_sigma, _) = rank_check(&fa, samples, TOL_RANK)?;
    let (b, det, pivots) = column_euclid(a)?;
    let exact_identity = a.mul(&b).is_identity_block();
    let det_check = b.det();
    if det_check != det {
        return Err(Error::ExactGcdFailure("determinant bookkeeping disagrees with cofactor expansion".into()));
    }
    let fb = b.to_function_matrix(var);
    let (residual, det_min_abs) = sampled_residual(&fa, &fb, samples);
    let c = det.coeffs()[0].to_c64();
    Ok(FrameCompletion {
        b: fb,
        certificate: FrameCertificate {
            mode: FrameMode::Exact,
            rows: a.rows,
            cols: a.cols,
            min_sigma,
            exact_identity,
            residual: if exact_identity { 0.0 } else { residual },
            det_unit: Some(([c.re, c.im], det.kmin())),
            det_min_abs,
            pivots,
        },
        exact: Some(b),
    })
}

/// Completion in the requested mode. Exact mode converts the float
/// coefficients to rationals without rounding.
pub fn frame_complete(a: &FunctionMatrix, mode: FrameMode, samples: &[Complex64], rho: f64) -> Result<FrameCompletion> {
    let var = a.entries[0].var().to_string();
    match mode {
        FrameMode::Exact => frame_complete_exact(&a.to_lmatrix::<GaussQ>()?, &var, samples),
        FrameMode::Numeric => frame_complete_numeric(a, samples, rho),
    }
}

fn frame_complete_numeric(a: &FunctionMatrix, samples: &[Complex64], rho: f64) -> Result<FrameCompletion> {
    let var = a.entries[0].var().to_string();
    let (min_sigma, _) = rank_check(a, samples, TOL_RANK)?;
    let (b, _, pivots) = column_euclid(&a.to_lmatrix::<Complex64>()?)?;
    let mut fb = b.to_function_matrix(&var);
    let (mut residual, _) = sampled_residual(a, &fb, samples);
    if residual > 1e-13 {
        fb = correct(a, &fb, rho)?;
        residual = sampled_residual(a, &fb, samples).0;
    }
    let (_, det_min_abs) = sampled_residual(a, &fb, samples);
    if !(residual < TOL_NUMERIC) {
        return Err(Error::ExactGcdFailure(format!("numeric completion residual {residual:e}")));
    }
    if !(det_min_abs > TOL_DET) {
        return Err(Error::RankDeficient {
            witness: Complex64::new(rho, 0.0),
            sigma: det_min_abs,
        });
    }
    Ok(FrameCompletion {
        b: fb,
        exact: None,
        certificate: FrameCertificate {
            mode: FrameMode::Numeric,
            rows: a.rows,
            cols: a.cols,
            min_sigma,
            exact_identity: false,
            residual,
            det_unit: None,
            det_min_abs,
            pivots,
        },
    })
}

/// `B <- B T` with `T = [[C1^-1, -C1^-1 C2], [0, I]]`, `A B = (C1, C2)`,
/// where `C1^-1` is sampled on `|u| = rho` into a Laurent window.
fn correct(a: &FunctionMatrix, b: &FunctionMatrix, rho: f64) -> Result<FunctionMatrix> {
    let (m, p) = (a.rows, a.cols);
    let var = a.entries[0].var().to_string();
    let c = a.mul(b);
    let lo = c.entries.iter().map(LaurentSeries::kmin).min().unwrap_or(0) - 24;
    let hi = c.entries.iter().map(LaurentSeries::kmax).max().unwrap_or(0) + 24;
    let n = 512usize.max((4 * (hi - lo + 1) as usize).next_power_of_two());
    let t_at = |u: Complex64| -> DMatrix<Complex64> {
        let cu = c.eval(u);
        let c1 = cu.view((0, 0), (m, m)).into_owned();
        let c2 = cu.view((0, m), (m, p - m)).into_owned();
        let inv = c1.try_inverse().unwrap_or_else(|| DMatrix::from_element(m, m, Complex64::new(f64::NAN, 0.0)));
        let mut t = DMatrix::<Complex64>::identity(p, p);
        t.view_mut((0, 0), (m, m)).copy_from(&inv);
        if p > m {
            t.view_mut((0, m), (m, p - m)).copy_from(&(-(&inv * c2)));
        }
        t
    };
    let samples: Vec<DMatrix<Complex64>> = (0..n)
        .map(|j| t_at(Complex64::from_polar(rho, 2.0 * std::f64::consts::PI * j as f64 / n as f64)))
        .collect();
    let mut t_entries = Vec::with_capacity(p * p);
    for i in 0..p {
        for j in 0..p {
            let vals: Vec<Complex64> = samples.iter().map(|t| t[(i, j)]).collect();
            let s = LaurentSeries::from_circle_samples(
                var.clone(),
                |u| {
                    let ang = u.arg().rem_euclid(2.0 * std::f64::consts::PI);
                    let k = ((ang / (2.0 * std::f64::consts::PI) * n as f64).round() as usize) % n;
                    vals[k]
                },
                rho,
                lo,
                hi,
                n,
            )?;
            let tol = 1e-17 * s.max_abs().max(1.0);
            let terms: Vec<(i32, Complex64)> = s.terms().filter(|(_, c)| c.norm() > tol).collect();
            t_entries.push(LaurentSeries::from_terms(var.clone(), &terms));
        }
    }
    let t = FunctionMatrix::new(p, p, t_entries)?;
    if t.entries.iter().any(|e| e.coeffs().iter().any(|c| !c.re.is_finite())) {
        return Err(Error::ExactGcdFailure("correction matrix is singular on the sampling circle".into()));
    }
    Ok(b.mul(&t))
}

/// Completion of a matrix of base-only jets; the result lives in the same
/// jet space (window overflow sets the truncation flag).
pub fn frame_complete_jets(a: &JetMatrix, mode: FrameMode, samples: &[Vec<Complex64>]) -> Result<(JetMatrix, FrameCertificate)> {
    let space = a.get(0, 0).space().clone();
    let (m, p) = (a.rows(), a.cols());
    let zero_exps = vec![0u8; space.fiber_dim()];
    if space.base_dim() == 1 {
        let entries: Vec<LaurentSeries> = (0..m * p)
            .map(|k| a.get(k / p, k % p).coefficient(&zero_exps).trimmed())
            .collect();
        let fa = FunctionMatrix::new(m, p, entries)?;
        let pts: Vec<Complex64> = samples.iter().map(|s| s[0]).collect();
        let done = match frame_complete(&fa, mode, &pts, space.rho()) {
            Err(Error::ExactGcdFailure(_)) if mode == FrameMode::Numeric => frame_complete(&fa, FrameMode::Exact, &pts, space.rho()),
            other => other,
        }?;
        let flag = a_entries_truncated(a);
        let b = JetMatrix::from_fn(p, p, |i, j| Jet::from_series(&space, 0, done.b.get(i, j)).with_truncated(flag));
        return Ok((b, done.certificate));
    }
    if !space.is_taylor() {
        return Err(Error::Structural("frame completion over several Laurent variables is unsupported".into()));
    }
    complete_taylor(a, samples)
}

fn a_entries_truncated(a: &JetMatrix) -> bool {
    (0..a.rows()).any(|i| (0..a.cols()).any(|j| a.get(i, j).truncated()))
}

/// Polydisc case: `C` completes `A(0)`; then `A C = (I + E, F)` and
/// `B = C [[(I+E)^-1, -(I+E)^-1 F], [0, I]]` as truncated Taylor jets.
fn complete_taylor(a: &JetMatrix, samples: &[Vec<Complex64>]) -> Result<(JetMatrix, FrameCertificate)> {
    let space = a.get(0, 0).space().clone();
    let (m, p) = (a.rows(), a.cols());
    let origin = vec![Complex64::new(0.0, 0.0); space.base_dim()];
    let a0 = DMatrix::from_fn(m, p, |i, j| a.get(i, j).eval_zero_section(&origin));
    let sigma = min_singular(&a0);
    if !(sigma > TOL_RANK) {
        return Err(Error::RankDeficient {
            witness: Complex64::new(0.0, 0.0),
            sigma,
        });
    }
    // Kernel of A(0): orthogonal complement of the row space.
    let row_space = a0.adjoint();
    let mut basis: Vec<nalgebra::DVector<Complex64>> = (0..m).map(|k| row_space.column(k).into_owned()).collect();
    let mut kernel = Vec::new();
    for e in 0..p {
        let mut v = nalgebra::DVector::<Complex64>::from_fn(p, |i, _| if i == e { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        for q in &basis {
            let coef = q.dotc(&v) / q.dotc(q);
            v -= q * coef;
        }
        if v.norm() > 1e-8 {
            kernel.push(v.clone());
            basis.push(v);
        }
        if kernel.len() == p - m {
            break;
        }
    }
    let right = a0.adjoint() * (&a0 * a0.adjoint()).try_inverse().ok_or(Error::RankDeficient {
        witness: Complex64::new(0.0, 0.0),
        sigma,
    })?;
    let c = DMatrix::from_fn(p, p, |i, j| if j < m { right[(i, j)] } else { kernel[j - m][i] });
    let cj = JetMatrix::from_fn(p, p, |i, j| Jet::constant(&space, c[(i, j)]));
    let ac = crate::series::mat_mul(a, &cj);
    let c1 = JetMatrix::from_fn(m, m, |i, j| ac.get(i, j).clone());
    let inv = BaseInverse::new(&c1)?;
    let t = JetMatrix::from_fn(p, p, |i, j| {
        if i < m && j < m {
            inv.entry(i, j).clone()
        } else if i < m {
            let col: Vec<Jet> = (0..m).map(|r| ac.get(r, j).clone()).collect();
            -&inv.apply(&col)[i]
        } else if i == j {
            Jet::one(&space)
        } else {
            Jet::zero(&space)
        }
    });
    let b = crate::series::mat_mul(&cj, &t);
    let check = crate::series::mat_mul(a, &b);
    let mut residual: f64 = 0.0;
    let mut det_min = f64::INFINITY;
    for u in samples {
        for i in 0..m {
            for j in 0..p {
                let target = if i == j { 1.0 } else { 0.0 };
                residual = residual.max((check.get(i, j).eval_zero_section(u) - target).norm());
            }
        }
        let bu = DMatrix::from_fn(p, p, |i, j| b.get(i, j).eval_zero_section(u));
        det_min = det_min.min(bu.determinant().norm());
    }
    Ok((
        b,
        FrameCertificate {
            mode: FrameMode::Numeric,
            rows: m,
            cols: p,
            min_sigma: sigma,
            exact_identity: false,
            residual,
            det_unit: None,
            det_min_abs: det_min,
            pivots: Vec::new(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = LPoly<GaussQ>;

    fn qp(kmin: i32, c: &[i64]) -> Q {
        Q::from_coeffs(kmin, c.iter().map(|&x| gauss_int(x, 0)).collect())
    }

    fn circle(r: f64) -> Vec<Complex64> {
        (0..64)
            .map(|k| Complex64::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / 64.0))
            .collect()
    }

    #[test]
    fn one_u_row() {
        let a = LMatrix::new(1, 2, vec![Q::one(), qp(1, &[1])]).unwrap();
        let done = frame_complete_exact(&a, "u", &circle(0.75)).unwrap();
        let b = done.exact.unwrap();
        assert!(done.certificate.exact_identity);
        assert_eq!(b, LMatrix::new(2, 2, vec![Q::one(), qp(1, &[-1]), Q::zero(), Q::one()]).unwrap());
    }

    #[test]
    fn u_one_row() {
        let a = LMatrix::new(1, 2, vec![qp(1, &[1]), Q::one()]).unwrap();
        let done = frame_complete_exact(&a, "u", &circle(0.75)).unwrap();
        assert!(done.certificate.exact_identity);
        assert_eq!(done.certificate.residual, 0.0);
        let b = done.exact.unwrap();
        assert_eq!(b, LMatrix::new(2, 2, vec![Q::zero(), Q::one(), Q::one(), qp(1, &[-1])]).unwrap());
    }

    #[test]
    fn common_zero_is_rank_deficient() {
        // (u - 1, u^2 - 1) vanish together at u = 1.
        let a = LMatrix::new(1, 2, vec![qp(0, &[-1, 1]), qp(0, &[-1, 0, 1])]).unwrap();
        let fa = a.to_function_matrix("u");
        assert!(rank_check(&fa, &circle(1.0), TOL_RANK).is_err());
        assert!(matches!(column_euclid(&a), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn numeric_mode_matches() {
        let a = LMatrix::new(
            2,
            3,
            vec![qp(0, &[2, 1]), qp(-1, &[1, 0, 1]), qp(0, &[3]), qp(0, &[1]), qp(1, &[1]), qp(-1, &[1, 1])],
        )
        .unwrap();
        let fa = a.to_function_matrix("u");
        let samples = circle(0.8);
        let ex = frame_complete(&fa, FrameMode::Exact, &samples, 0.8).unwrap();
        assert!(ex.certificate.exact_identity);
        let nu = frame_complete(&fa, FrameMode::Numeric, &samples, 0.8).unwrap();
        assert!(nu.certificate.residual < TOL_NUMERIC);
        assert!(nu.certificate.det_min_abs > TOL_DET);
    }
}
