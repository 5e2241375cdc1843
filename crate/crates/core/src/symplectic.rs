//! Fiberwise linear algebra of a conformal symplectic fibre `(xi_x, omega_x)`:
//! omega-orthogonal complements, isotropy, the dimension formula and the
//! three-way splitting of the normal space of an isotropic subspace.
//!
//! Real subspaces are handled through the realification `C^{2n} -> R^{4n}`,
//! `v -> (re v, im v)`, on which multiplication by `i` is the matrix `J`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singular-value cutoff for ranks.
pub const TOL_RANK: f64 = 1e-9;
/// Projector distance below which two subspaces count as equal.
pub const TOL_SUBSPACE: f64 = 1e-10;
/// Lower bound on `|det|` for nondegeneracy.
pub const TOL_NONDEGENERATE: f64 = 1e-9;

pub type CVec = DVector<Complex64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Real,
    Complex,
}

/// A nondegenerate antisymmetric form on `C^{2n}`.
#[derive(Clone, Debug)]
pub struct SymplecticFibre {
    pub n: usize,
    pub omega: DMatrix<Complex64>,
}

impl SymplecticFibre {
    /// `omega(e_j, f_j) = 1` in the basis `(e_1, ..., e_n, f_1, ..., f_n)`.
    pub fn standard(n: usize) -> Self {
        let mut omega = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            omega[(j, n + j)] = Complex64::new(1.0, 0.0);
            omega[(n + j, j)] = Complex64::new(-1.0, 0.0);
        }
        Self { n, omega }
    }

    pub fn new(omega: DMatrix<Complex64>) -> Result<Self> {
        let d = omega.nrows();
        if d == 0 || !d.is_multiple_of(2) || omega.ncols() != d {
            return Err(Error::Structural("omega must be a square matrix of even size".into()));
        }
        let skew = (&omega + omega.transpose()).iter().map(|x| x.norm()).fold(0.0, f64::max);
        if skew > 1e-12 * omega.iter().map(|x| x.norm()).fold(1.0, f64::max) {
            return Err(Error::Structural(format!("omega is not antisymmetric (defect {skew:e})")));
        }
        let det = omega.determinant().norm();
        if det <= TOL_NONDEGENERATE {
            return Err(Error::Structural(format!("omega is degenerate (|det| = {det:e})")));
        }
        Ok(Self { n: d / 2, omega })
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Bilinear `omega(u, v) = u^T Omega v`.
    pub fn pair(&self, u: &CVec, v: &CVec) -> Complex64 {
        (u.transpose() * &self.omega * v)[(0, 0)]
    }

    /// Gram matrix `omega(a_i, b_j)`.
    pub fn gram(&self, a: &[CVec], b: &[CVec]) -> DMatrix<Complex64> {
        DMatrix::from_fn(a.len(), b.len(), |i, j| self.pair(&a[i], &b[j]))
    }
}

/// Realification `v -> (re v, im v)`.
pub fn realify(v: &CVec) -> DVector<f64> {
    let d = v.len();
    DVector::from_fn(2 * d, |i, _| if i < d { v[i].re } else { v[i - d].im })
}

/// Multiplication by `i` on `R^{2d}`: `(a, b) -> (-b, a)`.
pub fn j_matrix(d: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * d, 2 * d);
    for k in 0..d {
        j[(k, d + k)] = -1.0;
        j[(d + k, k)] = 1.0;
    }
    j
}

fn columns_c(vs: &[CVec], d: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(d, vs.len(), |i, j| vs[j][i])
}

fn columns_r(vs: &[DVector<f64>], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, vs.len(), |i, j| vs[j][i])
}

/// Complex rank of a family of vectors in `C^d`.
pub fn complex_rank(vs: &[CVec], d: usize) -> usize {
    if vs.is_empty() {
        return 0;
    }
    let sv = columns_c(vs, d).svd(false, false).singular_values;
    rank_of(sv.as_slice())
}

/// Real rank of a family of vectors in `R^d`.
pub fn real_rank(vs: &[DVector<f64>], d: usize) -> usize {
    if vs.is_empty() {
        return 0;
    }
    let sv = columns_r(vs, d).svd(false, false).singular_values;
    rank_of(sv.as_slice())
}

fn rank_of(sv: &[f64]) -> usize {
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > TOL_RANK * top.max(1.0)).count()
}

/// Orthonormal basis of the complex span (first `rank` left singular vectors).
fn complex_orthonormal(vs: &[CVec], d: usize) -> Vec<CVec> {
    if vs.is_empty() {
        return Vec::new();
    }
    let svd = columns_c(vs, d).svd(true, false);
    let r = rank_of(svd.singular_values.as_slice());
    let u = svd.u.unwrap();
    (0..r).map(|k| u.column(k).into_owned()).collect()
}

/// Orthonormal basis of `ker M` for `M` with `d` columns.
fn complex_kernel(m: &DMatrix<Complex64>, d: usize) -> Vec<CVec> {
    if m.nrows() == 0 {
        return (0..d).map(|k| CVec::from_fn(d, |i, _| Complex64::new(f64::from(u8::from(i == k)), 0.0))).collect();
    }
    // Pad to a square matrix so the SVD returns the full right factor.
    let rows = m.nrows().max(d);
    let mut sq = DMatrix::zeros(rows, d);
    sq.view_mut((0, 0), (m.nrows(), d)).copy_from(m);
    let svd = sq.svd(false, true);
    let r = rank_of(svd.singular_values.as_slice());
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order[r..].iter().map(|&k| vt.row(k).adjoint()).collect()
}

/// Orthogonal projector onto the span of real vectors.
fn real_projector(vs: &[DVector<f64>], d: usize) -> DMatrix<f64> {
    if vs.is_empty() {
        return DMatrix::zeros(d, d);
    }
    let svd = columns_r(vs, d).svd(true, false);
    let r = rank_of(svd.singular_values.as_slice());
    let u = svd.u.unwrap().columns(0, r).into_owned();
    &u * u.transpose()
}

/// A subspace of `C^{2n}`; real subspaces are real spans of complex vectors.
#[derive(Clone, Debug)]
pub struct Subspace {
    pub field: Field,
    pub ambient: usize,
    pub basis: Vec<CVec>,
}

impl Subspace {
    pub fn new(field: Field, ambient: usize, basis: Vec<CVec>) -> Result<Self> {
        if basis.iter().any(|v| v.len() != ambient) {
            return Err(Error::Structural("basis vector of the wrong length".into()));
        }
        let s = Self { field, ambient, basis };
        let rank = match field {
            Field::Complex => complex_rank(&s.basis, ambient),
            Field::Real => real_rank(&s.real_spanning(), 2 * ambient),
        };
        if rank != s.basis.len() {
            return Err(Error::Precondition(format!(
                "basis of {} vectors has rank {rank} over the declared field",
                s.basis.len()
            )));
        }
        Ok(s)
    }

    pub fn zero(field: Field, ambient: usize) -> Self {
        Self { field, ambient, basis: Vec::new() }
    }

    pub fn complex(ambient: usize, basis: Vec<CVec>) -> Result<Self> {
        Self::new(Field::Complex, ambient, basis)
    }

    pub fn real(ambient: usize, basis: Vec<CVec>) -> Result<Self> {
        Self::new(Field::Real, ambient, basis)
    }

    pub fn dim_real(&self) -> usize {
        match self.field {
            Field::Real => self.basis.len(),
            Field::Complex => 2 * self.basis.len(),
        }
    }

    /// Realified vectors spanning the underlying real subspace.
    pub fn real_spanning(&self) -> Vec<DVector<f64>> {
        let i = Complex64::i();
        match self.field {
            Field::Real => self.basis.iter().map(realify).collect(),
            Field::Complex => self
                .basis
                .iter()
                .flat_map(|v| [realify(v), realify(&v.map(|x| x * i))])
                .collect(),
        }
    }

    pub fn real_projector(&self) -> DMatrix<f64> {
        real_projector(&self.real_spanning(), 2 * self.ambient)
    }

    /// `U^C = span_C(U)` with an orthonormal basis.
    pub fn complexification(&self) -> Subspace {
        Subspace {
            field: Field::Complex,
            ambient: self.ambient,
            basis: complex_orthonormal(&self.basis, self.ambient),
        }
    }
}

/// Spectral norm of `P_U - P_V` on the realification.
pub fn subspace_distance(u: &Subspace, v: &Subspace) -> f64 {
    let d = u.real_projector() - v.real_projector();
    d.svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

/// `|(I - P_V) P_U|`, zero iff `U` lies in `V`.
pub fn inclusion_defect(u: &Subspace, v: &Subspace) -> f64 {
    let d = 2 * u.ambient;
    let m = (DMatrix::<f64>::identity(d, d) - v.real_projector()) * u.real_projector();
    m.svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

/// `U^perp = cap_{u in U} ker omega(u, .)`, always complex.
pub fn omega_perp(u: &Subspace, fibre: &SymplecticFibre) -> Subspace {
    let d = fibre.dim();
    let m = DMatrix::from_fn(u.basis.len(), d, |i, j| (u.basis[i].transpose() * &fibre.omega)[(0, j)]);
    Subspace {
        field: Field::Complex,
        ambient: d,
        basis: complex_kernel(&m, d),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IsotropyClass {
    Isotropic,
    Lagrangian,
    Neither,
}

/// `dim_C U^C + dim_C U^perp = 2n`, computed by independent ranks.
#[derive(Clone, Debug, Serialize)]
pub struct DimensionCertificate {
    pub dim_real: usize,
    pub dim_complexification: usize,
    pub dim_perp: usize,
    pub total: usize,
    pub expected: usize,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IsotropyReport {
    pub class: IsotropyClass,
    /// `|(I - P_{U^perp}) P_U|`.
    pub inclusion_defect: f64,
    /// Distance of `U` from `U^perp`, the Lagrangian equality.
    pub equality_distance: f64,
    pub dimension: DimensionCertificate,
}

pub fn dimension_certificate(u: &Subspace, fibre: &SymplecticFibre) -> DimensionCertificate {
    let uc = complex_rank(&u.basis, fibre.dim());
    let perp = omega_perp(u, fibre).basis.len();
    DimensionCertificate {
        dim_real: u.dim_real(),
        dim_complexification: uc,
        dim_perp: perp,
        total: uc + perp,
        expected: fibre.dim(),
        holds: uc + perp == fibre.dim(),
    }
}

pub fn isotropy_check(u: &Subspace, fibre: &SymplecticFibre) -> IsotropyReport {
    let perp = omega_perp(u, fibre);
    let inc = inclusion_defect(u, &perp);
    let eq = subspace_distance(u, &perp);
    let class = if inc >= TOL_SUBSPACE {
        IsotropyClass::Neither
    } else if u.dim_real() == fibre.dim() && eq < TOL_SUBSPACE {
        IsotropyClass::Lagrangian
    } else {
        IsotropyClass::Isotropic
    };
    IsotropyReport {
        class,
        inclusion_defect: inc,
        equality_distance: eq,
        dimension: dimension_certificate(u, fibre),
    }
}

/// For a Lagrangian `U`, whether `i U = U`.
pub fn lagrangian_complexity_check(u: &Subspace, fibre: &SymplecticFibre) -> Result<bool> {
    let rep = isotropy_check(u, fibre);
    if rep.class != IsotropyClass::Lagrangian {
        return Err(Error::Precondition(format!("subspace is {:?}, not Lagrangian", rep.class)));
    }
    let p = u.real_projector();
    let j = j_matrix(u.ambient);
    let d = &p - &j * &p * j.transpose();
    Ok(d.svd(false, false).singular_values.iter().copied().fold(0.0, f64::max) < TOL_SUBSPACE)
}

/// Splitting of `N = T_x X / T_x M` at one point, with `T_x X = xi_x + C Reeb`.
#[derive(Clone, Debug, Serialize)]
pub struct PointSplit {
    /// `(rank nu, rank xi/TM^perp, rank TM^perp/TM)`.
    pub ranks: (usize, usize, usize),
    pub expected: (usize, usize, usize),
    pub total: usize,
    /// Representatives of `xi / TM^perp`, entries `[re, im]`.
    pub cotangent_part: Vec<Vec<[f64; 2]>>,
    /// Representatives of `TM^perp / TM`.
    pub csn: Vec<Vec<[f64; 2]>>,
    /// Smallest singular value of `omega(v_i, e_j)` from the cotangent identification.
    pub pairing_min_singular: f64,
    pub pairing_nondegenerate: bool,
    /// `|det|` of `omega` restricted to the CSN representatives (1 for rank 0).
    pub csn_det: f64,
    pub csn_nondegenerate: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitReport {
    pub n: usize,
    pub m: usize,
    pub points: Vec<PointSplit>,
    pub all_pass: bool,
    /// `omega` is fixed per fibre; scaling it by `c` scales both pairings by `c`.
    pub conformal_note: &'static str,
}

fn to_pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|x| [x.re, x.im]).collect()
}

/// Hermitian complement of `a` inside `span(b)` (orthonormal basis of `b` required).
fn complement_in(a: &[CVec], b: &[CVec], d: usize) -> Vec<CVec> {
    let bm = columns_c(b, d);
    // Coordinates of `a` in the basis `b`; the kernel of their adjoint is the complement.
    let coords: Vec<CVec> = a.iter().map(|v| bm.adjoint() * v).collect();
    let m = DMatrix::from_fn(coords.len(), b.len(), |i, j| coords[i][j].conj());
    complex_kernel(&m, b.len()).into_iter().map(|c| &bm * c).collect()
}

fn split_point(tm: &Subspace, fibre: &SymplecticFibre) -> Result<PointSplit> {
    let d = fibre.dim();
    let (n, m) = (fibre.n, tm.basis.len());
    if tm.field != Field::Complex {
        return Err(Error::Precondition("tangent spaces must be complex subspaces".into()));
    }
    let rep = isotropy_check(tm, fibre);
    if rep.class == IsotropyClass::Neither {
        return Err(Error::NotIsotropic { value: rep.inclusion_defect });
    }
    let e = complex_orthonormal(&tm.basis, d);
    let perp = omega_perp(tm, fibre).basis;
    let whole: Vec<CVec> = (0..d)
        .map(|k| CVec::from_fn(d, |i, _| Complex64::new(f64::from(u8::from(i == k)), 0.0)))
        .collect();
    let cot = complement_in(&perp, &whole, d);
    let csn = complement_in(&e, &perp, d);
    let pairing = fibre.gram(&cot, &e);
    let pmin = if m == 0 {
        f64::INFINITY
    } else {
        pairing.clone().svd(false, false).singular_values.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let csn_det = if csn.is_empty() { 1.0 } else { fibre.gram(&csn, &csn).determinant().norm() };
    let ranks = (1, cot.len(), csn.len());
    Ok(PointSplit {
        ranks,
        expected: (1, m, 2 * (n - m.min(n))),
        total: 1 + cot.len() + csn.len(),
        cotangent_part: cot.iter().map(to_pairs).collect(),
        csn: csn.iter().map(to_pairs).collect(),
        pairing_min_singular: pmin,
        pairing_nondegenerate: cot.len() == m && pmin > TOL_NONDEGENERATE,
        csn_det,
        csn_nondegenerate: csn_det > TOL_NONDEGENERATE,
    })
}

/// The splitting `N(M, X) = nu + xi/TM^perp + TM^perp/TM` at each sample point.
pub fn normal_split(tangents: &[Subspace], fibre: &SymplecticFibre) -> Result<SplitReport> {
    let m = tangents.first().map_or(0, |t| t.basis.len());
    if tangents.iter().any(|t| t.basis.len() != m) {
        return Err(Error::Structural("tangent spaces must share a dimension".into()));
    }
    if m == 0 || m > fibre.n {
        return Err(Error::Precondition(format!("isotropic dimension {m} must lie in 1..={}", fibre.n)));
    }
    let points: Vec<PointSplit> = tangents.par_iter().map(|t| split_point(t, fibre)).collect::<Result<_>>()?;
    let all_pass = points.iter().all(|p| {
        p.ranks == p.expected && p.total == 2 * fibre.n + 1 - m && p.pairing_nondegenerate && p.csn_nondegenerate
    });
    Ok(SplitReport {
        n: fibre.n,
        m,
        points,
        all_pass,
        conformal_note: "omega is one representative of its conformal class; CSN is conformal symplectic",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(d: usize, k: usize) -> CVec {
        CVec::from_fn(d, |i, _| Complex64::new(f64::from(u8::from(i == k)), 0.0))
    }

    #[test]
    fn perp_of_zero_is_everything() {
        let f = SymplecticFibre::standard(2);
        assert_eq!(omega_perp(&Subspace::zero(Field::Real, 4), &f).basis.len(), 4);
    }

    #[test]
    fn perp_of_real_line_is_its_complex_line() {
        let f = SymplecticFibre::standard(1);
        let u = Subspace::real(2, vec![e(2, 0)]).unwrap();
        let p = omega_perp(&u, &f);
        assert_eq!(p.basis.len(), 1);
        assert!(subspace_distance(&p, &Subspace::complex(2, vec![e(2, 0)]).unwrap()) < 1e-12);
    }

    #[test]
    fn classification_examples() {
        let f = SymplecticFibre::standard(1);
        let line = Subspace::complex(2, vec![e(2, 0)]).unwrap();
        assert_eq!(isotropy_check(&line, &f).class, IsotropyClass::Lagrangian);
        let all = Subspace::complex(2, vec![e(2, 0), e(2, 1)]).unwrap();
        assert_eq!(isotropy_check(&all, &f).class, IsotropyClass::Neither);
        let real_c = Subspace::real(2, vec![e(2, 0), e(2, 0).map(|x| x * Complex64::i())]).unwrap();
        assert!(lagrangian_complexity_check(&real_c, &f).unwrap());
        let sympl = Subspace::real(2, vec![e(2, 0), e(2, 1)]).unwrap();
        assert!(lagrangian_complexity_check(&sympl, &f).is_err());
    }

    #[test]
    fn dependent_basis_rejected() {
        let v = e(2, 0);
        assert!(Subspace::complex(2, vec![v.clone(), v.map(|x| x * Complex64::i())]).is_err());
        assert!(Subspace::real(2, vec![v.clone(), v.map(|x| x * 2.0)]).is_err());
    }

    #[test]
    fn split_n2_m1() {
        let f = SymplecticFibre::standard(2);
        let tm = Subspace::complex(4, vec![e(4, 0)]).unwrap();
        let r = normal_split(&[tm], &f).unwrap();
        let p = &r.points[0];
        assert_eq!(p.ranks, (1, 1, 2));
        assert!(r.all_pass);
        // CSN spans e_2, f_2.
        let csn: Vec<CVec> = p
            .csn
            .iter()
            .map(|v| CVec::from_iterator(4, v.iter().map(|x| Complex64::new(x[0], x[1]))))
            .collect();
        let want = Subspace::complex(4, vec![e(4, 1), e(4, 3)]).unwrap();
        assert!(subspace_distance(&Subspace::complex(4, csn).unwrap(), &want) < 1e-12);
    }

    #[test]
    fn legendrian_split_has_no_csn() {
        let f = SymplecticFibre::standard(2);
        let tm = Subspace::complex(4, vec![e(4, 0), e(4, 1)]).unwrap();
        let r = normal_split(&[tm], &f).unwrap();
        assert_eq!(r.points[0].ranks, (1, 2, 0));
        assert!(r.all_pass);
    }

    #[test]
    fn non_isotropic_split_rejected() {
        let f = SymplecticFibre::standard(1);
        let tm = Subspace::complex(2, vec![e(2, 0) + e(2, 1)]).unwrap();
        assert!(normal_split(&[tm], &f).is_ok());
        let g = SymplecticFibre::standard(2);
        let bad = Subspace::complex(4, vec![e(4, 0), e(4, 2)]).unwrap();
        assert!(matches!(normal_split(&[bad], &g), Err(Error::NotIsotropic { .. })));
    }
}
