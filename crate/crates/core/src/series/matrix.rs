use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;

use super::jet::Jet;
use super::space::JetSpace;
use crate::error::{Error, Result};

/// Dense matrix of jets, row major.
#[derive(Clone, Debug)]
pub struct JetMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Jet>,
}

impl JetMatrix {
    pub fn zeros(space: &Arc<JetSpace>, rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Jet::zero(space); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Jet) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Jet) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn mul_vec(&self, x: &[Jet]) -> Vec<Jet> {
        (0..self.rows)
            .map(|i| {
                let mut acc = Jet::zero(x[0].space());
                for (j, xj) in x.iter().enumerate() {
                    let a = self.get(i, j);
                    if a.is_zero() || xj.is_zero() {
                        continue;
                    }
                    acc = &acc + &(a * xj);
                }
                acc
            })
            .collect()
    }

    fn map(&self, f: impl Fn(&Jet) -> Jet) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    /// Solves `A x = b` degree by degree for a square jet matrix whose
    /// fiber-degree-0 part is invertible along the zero section.
    ///
    /// With `A = A0 + A1`, `A1` of fiber degree at least 1, the iteration
    /// `x <- A0^{-1} (b - A1 x)` fixes one more fiber degree per sweep.
    pub fn solve(&self, b: &[Jet]) -> Result<Vec<Jet>> {
        if self.rows != self.cols || b.len() != self.rows {
            return Err(Error::Structural("jet solve needs a square system".into()));
        }
        let space = b[0].space().clone();
        let a0 = self.map(|j| j.degree_part(0));
        let a1 = self.map(|j| &j.clone() - &j.degree_part(0));
        let inv = BaseInverse::new(&a0)?;
        let mut x = inv.apply(b);
        for _ in 0..space.degree() {
            let r = a1.mul_vec(&x);
            let rhs: Vec<Jet> = b.iter().zip(&r).map(|(bi, ri)| bi - ri).collect();
            x = inv.apply(&rhs);
        }
        Ok(x)
    }
}

/// Inverse of a matrix of base-only jets.
pub struct BaseInverse {
    n: usize,
    entries: Vec<Jet>,
    constant: Option<DMatrix<Complex64>>,
}

impl BaseInverse {
    pub fn new(a0: &JetMatrix) -> Result<Self> {
        let n = a0.rows();
        let space = a0.get(0, 0).space().clone();
        let flag = a0.entries.iter().any(Jet::truncated);
        if a0.entries.iter().all(Jet::is_base_constant) {
            let m = DMatrix::from_fn(n, n, |i, j| a0.get(i, j).eval_zero_section(&vec![Complex64::new(1.0, 0.0); space.base_dim()]));
            let inv = invert_checked(&m, Complex64::zero())?;
            let entries = (0..n * n)
                .map(|k| Jet::constant(&space, inv[(k / n, k % n)]).with_truncated(flag))
                .collect();
            return Ok(Self {
                n,
                entries,
                constant: Some(inv),
            });
        }
        let entries = if space.base_dim() == 1 {
            sampled_inverse(a0, &space)?
        } else if space.is_taylor() {
            newton_inverse(a0, &space)?
        } else {
            return Err(Error::Structural(
                "matrix inversion with several Laurent base variables is unsupported".into(),
            ));
        };
        let entries = entries.into_iter().map(|j| j.with_truncated(flag)).collect();
        Ok(Self {
            n,
            entries,
            constant: None,
        })
    }

    pub fn entry(&self, i: usize, j: usize) -> &Jet {
        &self.entries[i * self.n + j]
    }

    pub fn apply(&self, b: &[Jet]) -> Vec<Jet> {
        (0..self.n)
            .map(|i| {
                let mut acc = Jet::zero(b[0].space());
                for (j, bj) in b.iter().enumerate() {
                    if bj.is_zero() {
                        acc = acc.with_truncated(bj.truncated());
                        continue;
                    }
                    match &self.constant {
                        Some(m) => {
                            let c = m[(i, j)];
                            if !c.is_zero() {
                                acc.axpy(c, bj);
                            }
                        }
                        None => acc = &acc + &bj.mul_base_jet(self.entry(i, j)),
                    }
                }
                acc
            })
            .collect()
    }
}

fn invert_checked(m: &DMatrix<Complex64>, witness: Complex64) -> Result<DMatrix<Complex64>> {
    let sv = m.clone().singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if !(smin > 1e-12 * smax.max(1.0)) {
        return Err(Error::RankDeficient {
            witness,
            sigma: smin,
        });
    }
    m.clone()
        .try_inverse()
        .ok_or(Error::RankDeficient { witness, sigma: smin })
}

/// Number of circle samples for a window `[lo, hi]`: a power of two well
/// above the window width so that aliasing stays below rounding.
fn sample_count(window: (i32, i32)) -> usize {
    let width = (window.1 - window.0 + 1) as usize;
    (4 * width).next_power_of_two().max(128)
}

fn sampled_inverse(a0: &JetMatrix, space: &Arc<JetSpace>) -> Result<Vec<Jet>> {
    let n = a0.rows();
    let rho = space.rho();
    let window = space.window();
    let ns = sample_count(window);
    let mut acc = vec![vec![Complex64::zero(); (window.1 - window.0 + 1) as usize]; n * n];
    for s in 0..ns {
        let ang = 2.0 * PI * s as f64 / ns as f64;
        let u = Complex64::from_polar(rho, ang);
        let m = DMatrix::from_fn(n, n, |i, j| a0.get(i, j).eval_zero_section(&[u]));
        let inv = invert_checked(&m, u)?;
        for (k, slot) in acc.iter_mut().enumerate() {
            let v = inv[(k / n, k % n)];
            for (idx, c) in slot.iter_mut().enumerate() {
                let e = window.0 + idx as i32;
                *c += v * Complex64::from_polar(1.0, -ang * e as f64);
            }
        }
    }
    let mut out = Vec::with_capacity(n * n);
    for slot in &acc {
        let mut j = Jet::zero(space);
        let mut terms = Vec::new();
        for (idx, c) in slot.iter().enumerate() {
            let e = window.0 + idx as i32;
            let v = c / ns as f64 / rho.powi(e);
            if v.norm() > 1e-15 {
                terms.push((e, v));
            }
        }
        let series = super::laurent::LaurentSeries::from_terms(
            space.base_names()[0].clone(),
            &terms,
        );
        j.add_series_term(0, 0, &series);
        out.push(j);
    }
    // Tail check: a truncated inverse shows up as a residual of A0 * inv - I.
    let prod = JetMatrix {
        rows: n,
        cols: n,
        entries: out.clone(),
    };
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut e = Jet::zero(space);
            for k in 0..n {
                e = &e + &(a0.get(i, k) * prod.get(k, j));
            }
            if i == j {
                e = &e - &Jet::one(space);
            }
            worst = worst.max(e.max_abs());
        }
    }
    let truncated = worst > 1e-12;
    Ok(out.into_iter().map(|j| j.with_truncated(truncated)).collect())
}

fn newton_inverse(a0: &JetMatrix, space: &Arc<JetSpace>) -> Result<Vec<Jet>> {
    let n = a0.rows();
    let origin = vec![Complex64::zero(); space.base_dim()];
    let m = DMatrix::from_fn(n, n, |i, j| a0.get(i, j).eval_zero_section(&origin));
    let inv0 = invert_checked(&m, Complex64::zero())?;
    let mut x = JetMatrix::from_fn(n, n, |i, j| Jet::constant(space, inv0[(i, j)]));
    let one = Jet::one(space);
    // X <- X (2I - A X); each sweep doubles the number of correct base orders.
    for _ in 0..64 {
        let ax = mat_mul(a0, &x);
        let mut r = ax.clone();
        for i in 0..n {
            r.set(i, i, &one - ax.get(i, i));
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    r.set(i, j, -ax.get(i, j));
                }
            }
        }
        let corr = mat_mul(&x, &r);
        let next = JetMatrix::from_fn(n, n, |i, j| x.get(i, j) + corr.get(i, j));
        let change = next
            .entries
            .iter()
            .zip(&x.entries)
            .map(|(a, b)| a.max_diff(b))
            .fold(0.0, f64::max);
        x = next;
        if change < 1e-15 {
            break;
        }
    }
    Ok(x.entries)
}

pub fn mat_mul(a: &JetMatrix, b: &JetMatrix) -> JetMatrix {
    let space = a.get(0, 0).space().clone();
    JetMatrix::from_fn(a.rows, b.cols, |i, j| {
        let mut acc = Jet::zero(&space);
        for k in 0..a.cols {
            acc = &acc + &(a.get(i, k) * b.get(k, j));
        }
        acc
    })
}

/// Multiplicative inverse of a jet whose zero-section part is a unit.
///
/// `f = f0 (1 + n)` with `n` of fiber degree at least 1, so
/// `1/f = f0^{-1} sum_k (-n)^k` terminates at `k = d`.
pub fn invert_unit(f: &Jet) -> Result<Jet> {
    let space = f.space().clone();
    let f0 = f.degree_part(0);
    let probe = unit_probe(&space);
    for u in &probe {
        let v = f0.eval_zero_section(u);
        if v.norm() < 1e-12 {
            return Err(Error::NotAUnit {
                witness: u.first().copied().unwrap_or_default(),
            });
        }
    }
    let a0 = JetMatrix {
        rows: 1,
        cols: 1,
        entries: vec![f0.clone()],
    };
    let inv0 = BaseInverse::new(&a0).map_err(|e| match e {
        Error::RankDeficient { witness, .. } => Error::NotAUnit { witness },
        other => other,
    })?;
    let g0 = inv0.entry(0, 0).clone();
    let n = (f - &f0).mul_base_jet(&g0);
    let mut acc = Jet::one(&space);
    let mut power = Jet::one(&space);
    for _ in 0..space.degree() {
        power = -&(&power * &n);
        acc = &acc + &power;
    }
    Ok(acc.mul_base_jet(&g0).with_truncated(f.truncated()))
}

fn unit_probe(space: &JetSpace) -> Vec<Vec<Complex64>> {
    let m = space.base_dim();
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut pts = Vec::new();
    for k in 0..64 {
        let u = Complex64::from_polar(space.rho(), 2.0 * PI * k as f64 / 64.0);
        pts.push(vec![u; m]);
    }
    if space.is_taylor() {
        pts.push(vec![Complex64::zero(); m]);
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::space::ThetaSpec;

    fn cx(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn geometric_series_inverse() {
        let s = JetSpace::flat(&["a"], 3).unwrap();
        let f = &Jet::one(&s) + &Jet::var(&s, "a").unwrap();
        let g = invert_unit(&f).unwrap();
        for (k, sign) in [1.0, -1.0, 1.0, -1.0].iter().enumerate() {
            let t = g.terms().into_iter().find(|t| t.0 == vec![k as u8]).unwrap();
            assert!((t.2 - cx(*sign)).norm() < 1e-15);
        }
    }

    #[test]
    fn monomial_unit_on_annulus() {
        let s = JetSpace::curve(ThetaSpec::DU, &["y"], 2, (-3, 3)).unwrap();
        let f = Jet::base_monomial(&s, 0, 1, cx(1.0));
        let g = invert_unit(&f).unwrap();
        let expect = Jet::base_monomial(&s, 0, -1, cx(1.0));
        assert!(g.max_diff(&expect) < 1e-13);
        assert!(!g.truncated());
    }

    #[test]
    fn vanishing_constant_term_is_rejected() {
        let s = JetSpace::flat(&["a"], 2).unwrap();
        let f = Jet::var(&s, "a").unwrap();
        assert!(matches!(invert_unit(&f), Err(Error::NotAUnit { .. })));
    }

    #[test]
    fn taylor_unit_in_two_base_variables() {
        let s = JetSpace::new(
            vec![("u1".into(), ThetaSpec::DU), ("u2".into(), ThetaSpec::DU)],
            vec!["y".into()],
            1,
            (0, 6),
            0.5,
        )
        .unwrap();
        let f = &(&Jet::one(&s) + &Jet::base_monomial(&s, 0, 1, cx(0.5)))
            + &Jet::base_monomial(&s, 1, 1, cx(0.25));
        let g = invert_unit(&f).unwrap();
        let e = &(&f * &g) - &Jet::one(&s);
        assert!(e.max_abs_in(1, (0, 5)) < 1e-12);
    }

    #[test]
    fn degree_by_degree_solve() {
        let s = JetSpace::flat(&["a", "b"], 3).unwrap();
        let a = Jet::var(&s, "a").unwrap();
        let one = Jet::one(&s);
        let m = JetMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => &one + &a,
            (0, 1) => a.clone(),
            (1, 0) => Jet::zero(&s),
            _ => one.scale_re(2.0),
        });
        let b = vec![one.clone(), a.clone()];
        let x = m.solve(&b).unwrap();
        let r = m.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).truncate_degree(3).max_abs() < 1e-14);
        }
    }
}
