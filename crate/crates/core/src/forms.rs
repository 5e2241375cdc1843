//! Exterior calculus on jet-coefficient forms in the fixed coframe
//! `(theta_1..theta_m, d zeta_1..d zeta_p)` with every coframe element closed.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{invert_unit, CoordinateChange, Jet, JetMatrix, JetSpace};

/// 1-form `sum_k w_k e_k` over the coframe slots.
#[derive(Clone, Debug)]
pub struct Form1 {
    space: Arc<JetSpace>,
    coeffs: Vec<Jet>,
}

/// 2-form stored on ordered slot pairs `j < k`.
#[derive(Clone, Debug)]
pub struct Form2 {
    space: Arc<JetSpace>,
    comps: Vec<Jet>,
}

/// Coefficient of `e_1 ^ ... ^ e_N` in coframe order.
#[derive(Clone, Debug)]
pub struct TopForm {
    pub coefficient: Jet,
}

/// Vector field in the frame dual to the coframe.
#[derive(Clone, Debug)]
pub struct VectorField {
    space: Arc<JetSpace>,
    comps: Vec<Jet>,
}

/// General k-form keyed by the bitmask of its coframe slots.
#[derive(Clone, Debug)]
pub struct KForm {
    space: Arc<JetSpace>,
    terms: BTreeMap<u32, Jet>,
}

fn pair_index(n: usize, j: usize, k: usize) -> usize {
    debug_assert!(j < k && k < n);
    j * n - j * (j + 1) / 2 + (k - j - 1)
}

impl Form1 {
    pub fn zero(space: &Arc<JetSpace>) -> Self {
        Self {
            space: space.clone(),
            coeffs: vec![Jet::zero(space); space.slots()],
        }
    }

    pub fn from_coeffs(space: &Arc<JetSpace>, coeffs: Vec<Jet>) -> Result<Self> {
        if coeffs.len() != space.slots() || coeffs.iter().any(|c| !c.space().same_as(space)) {
            return Err(Error::Structural("1-form coefficients do not match the coframe".into()));
        }
        Ok(Self {
            space: space.clone(),
            coeffs,
        })
    }

    /// The closed coframe element in `slot`.
    pub fn basis(space: &Arc<JetSpace>, slot: usize) -> Self {
        let mut f = Self::zero(space);
        f.coeffs[slot] = Jet::one(space);
        f
    }

    /// `df = sum_j (e_j-derivative of f) e_j`.
    pub fn differential(f: &Jet) -> Self {
        let space = f.space().clone();
        let coeffs = (0..space.slots()).map(|j| f.deriv_slot(j)).collect();
        Self { space, coeffs }
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn coeff(&self, slot: usize) -> &Jet {
        &self.coeffs[slot]
    }

    pub fn coeffs(&self) -> &[Jet] {
        &self.coeffs
    }

    pub fn set(&mut self, slot: usize, c: Jet) {
        self.coeffs[slot] = c;
    }

    pub fn add_term(&mut self, slot: usize, c: &Jet) {
        self.coeffs[slot] = &self.coeffs[slot] + c;
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Self {
        Self {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    pub fn zip(&self, other: &Form1, f: impl Fn(&Jet, &Jet) -> Jet) -> Result<Self> {
        if !self.space.same_as(&other.space) {
            return Err(Error::Structural("1-forms live in different spaces".into()));
        }
        Ok(Self {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Form1) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Form1) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|j| j.scale(c))
    }

    pub fn mul_jet(&self, f: &Jet) -> Self {
        self.map(|j| j * f)
    }

    pub fn truncate_degree(&self, d: usize) -> Self {
        self.map(|j| j.truncate_degree(d))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(Jet::max_abs).fold(0.0, f64::max)
    }

    pub fn max_abs_upto(&self, deg: usize) -> f64 {
        self.coeffs.iter().map(|c| c.max_abs_upto(deg)).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Form1) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.max_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn truncated(&self) -> bool {
        self.coeffs.iter().any(Jet::truncated)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Jet::is_zero)
    }

    /// `d(sum w_k e_k) = sum_{j<k} (d_j w_k - d_k w_j) e_j ^ e_k`.
    pub fn d(&self) -> Form2 {
        let n = self.space.slots();
        let derivs: Vec<Vec<Jet>> = self
            .coeffs
            .iter()
            .map(|w| (0..n).map(|j| w.deriv_slot(j)).collect())
            .collect();
        let mut comps = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for j in 0..n {
            for k in j + 1..n {
                comps.push(&derivs[k][j] - &derivs[j][k]);
            }
        }
        Form2 {
            space: self.space.clone(),
            comps,
        }
    }

    /// `V -| w = sum_k V_k w_k`.
    pub fn eval(&self, v: &VectorField) -> Jet {
        let mut acc = Jet::zero(&self.space);
        for (w, c) in self.coeffs.iter().zip(&v.comps) {
            if !w.is_zero() && !c.is_zero() {
                acc = &acc + &(w * c);
            }
        }
        acc
    }

    pub fn to_kform(&self) -> KForm {
        let mut terms = BTreeMap::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                terms.insert(1u32 << k, c.clone());
            }
        }
        KForm {
            space: self.space.clone(),
            terms,
        }
    }

    /// `phi^* w` for a change whose source is the space of `self`.
    pub fn pullback(&self, change: &CoordinateChange) -> Result<Form1> {
        if !self.space.same_as(change.source()) {
            return Err(Error::Structural("pullback: form does not live on the change source".into()));
        }
        let tgt = change.target().clone();
        let m = tgt.base_dim();
        let mut out = Form1::zero(&tgt);
        for (slot, w) in self.coeffs.iter().enumerate() {
            if w.is_zero() {
                if w.truncated() {
                    out.coeffs[slot] = out.coeffs[slot].clone().with_truncated(true);
                }
                continue;
            }
            let ws = change.substitute(w)?;
            if slot < m {
                let th = self.space.theta(slot);
                let g = Jet::base_monomial(change.source(), slot, th.power, th.coeff);
                let wg = &ws * &change.substitute(&g)?;
                // g(u + shift) (du + d shift) with du = theta / g(u).
                let inv_g = Jet::base_monomial(&tgt, slot, -th.power, th.coeff.inv());
                out.add_term(slot, &(&wg * &inv_g));
                let ds = Form1::differential(change.component(slot));
                for (k, c) in ds.coeffs.iter().enumerate() {
                    if !c.is_zero() {
                        out.add_term(k, &(&wg * c));
                    }
                }
            } else {
                let ds = Form1::differential(change.component(slot));
                for (k, c) in ds.coeffs.iter().enumerate() {
                    if !c.is_zero() {
                        out.add_term(k, &(&ws * c));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Degree-0 (zero-section) part of every coefficient.
    pub fn on_zero_section(&self) -> Form1 {
        self.map(|c| c.degree_part(0))
    }
}

impl Form2 {
    pub fn zero(space: &Arc<JetSpace>) -> Self {
        let n = space.slots();
        Self {
            space: space.clone(),
            comps: vec![Jet::zero(space); n * n.saturating_sub(1) / 2],
        }
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Antisymmetric component `Omega_{jk}`.
    pub fn get(&self, j: usize, k: usize) -> Jet {
        let n = self.space.slots();
        match j.cmp(&k) {
            std::cmp::Ordering::Less => self.comps[pair_index(n, j, k)].clone(),
            std::cmp::Ordering::Greater => -&self.comps[pair_index(n, k, j)],
            std::cmp::Ordering::Equal => Jet::zero(&self.space),
        }
    }

    pub fn set(&mut self, j: usize, k: usize, v: Jet) {
        let n = self.space.slots();
        if j < k {
            self.comps[pair_index(n, j, k)] = v;
        } else if j > k {
            self.comps[pair_index(n, k, j)] = -&v;
        }
    }

    /// `V -| Omega`, with `(V -| Omega)_k = sum_j V_j Omega_jk`.
    pub fn contract(&self, v: &VectorField) -> Form1 {
        let n = self.space.slots();
        let mut out = Form1::zero(&self.space);
        for j in 0..n {
            if v.comps[j].is_zero() {
                continue;
            }
            for k in 0..n {
                if j == k {
                    continue;
                }
                let o = self.get(j, k);
                if !o.is_zero() {
                    out.add_term(k, &(&v.comps[j] * &o));
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(Jet::max_abs).fold(0.0, f64::max)
    }

    pub fn max_abs_upto(&self, deg: usize) -> f64 {
        self.comps.iter().map(|c| c.max_abs_upto(deg)).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &Form2) -> Form2 {
        Form2 {
            space: self.space.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn to_kform(&self) -> KForm {
        let n = self.space.slots();
        let mut terms = BTreeMap::new();
        for j in 0..n {
            for k in j + 1..n {
                let c = &self.comps[pair_index(n, j, k)];
                if !c.is_zero() {
                    terms.insert((1u32 << j) | (1u32 << k), c.clone());
                }
            }
        }
        KForm {
            space: self.space.clone(),
            terms,
        }
    }
}

/// Sign of `e_S ^ e_T` relative to `e_{S u T}` (zero when they overlap).
fn wedge_sign(s: u32, t: u32) -> i32 {
    if s & t != 0 {
        return 0;
    }
    let mut inversions = 0;
    let mut rest = t;
    while rest != 0 {
        let b = rest.trailing_zeros();
        inversions += (s >> (b + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

impl KForm {
    pub fn zero(space: &Arc<JetSpace>) -> Self {
        Self {
            space: space.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn terms(&self) -> &BTreeMap<u32, Jet> {
        &self.terms
    }

    pub fn wedge(&self, other: &KForm) -> KForm {
        let mut terms: BTreeMap<u32, Jet> = BTreeMap::new();
        for (&s, a) in &self.terms {
            for (&t, b) in &other.terms {
                let sign = wedge_sign(s, t);
                if sign == 0 {
                    continue;
                }
                let prod = (a * b).scale_re(sign as f64);
                let slot = terms.entry(s | t).or_insert_with(|| Jet::zero(&self.space));
                *slot = &*slot + &prod;
            }
        }
        terms.retain(|_, v| !v.is_zero() || v.truncated());
        KForm {
            space: self.space.clone(),
            terms,
        }
    }

    /// Exterior derivative with closed coframe.
    pub fn d(&self) -> KForm {
        let n = self.space.slots();
        let mut terms: BTreeMap<u32, Jet> = BTreeMap::new();
        for (&s, c) in &self.terms {
            for j in 0..n {
                let bit = 1u32 << j;
                let sign = wedge_sign(bit, s);
                if sign == 0 {
                    continue;
                }
                let dc = c.deriv_slot(j);
                if dc.is_zero() {
                    continue;
                }
                let slot = terms.entry(bit | s).or_insert_with(|| Jet::zero(&self.space));
                *slot = &*slot + &dc.scale_re(sign as f64);
            }
        }
        KForm {
            space: self.space.clone(),
            terms,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(Jet::max_abs).fold(0.0, f64::max)
    }

    pub fn max_abs_upto(&self, deg: usize) -> f64 {
        self.terms.values().map(|c| c.max_abs_upto(deg)).fold(0.0, f64::max)
    }

    pub fn coefficient(&self, mask: u32) -> Jet {
        self.terms.get(&mask).cloned().unwrap_or_else(|| Jet::zero(&self.space))
    }
}

impl VectorField {
    pub fn zero(space: &Arc<JetSpace>) -> Self {
        Self {
            space: space.clone(),
            comps: vec![Jet::zero(space); space.slots()],
        }
    }

    pub fn from_comps(space: &Arc<JetSpace>, comps: Vec<Jet>) -> Result<Self> {
        if comps.len() != space.slots() {
            return Err(Error::Structural("vector field arity mismatch".into()));
        }
        Ok(Self {
            space: space.clone(),
            comps,
        })
    }

    pub fn basis(space: &Arc<JetSpace>, slot: usize) -> Self {
        let mut v = Self::zero(space);
        v.comps[slot] = Jet::one(space);
        v
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn comp(&self, slot: usize) -> &Jet {
        &self.comps[slot]
    }

    pub fn comps(&self) -> &[Jet] {
        &self.comps
    }

    /// Directional derivative `V(f)`.
    pub fn apply(&self, f: &Jet) -> Jet {
        let mut acc = Jet::zero(&self.space);
        for (j, c) in self.comps.iter().enumerate() {
            if !c.is_zero() {
                acc = &acc + &(c * &f.deriv_slot(j));
            }
        }
        acc
    }

    pub fn scale_jet(&self, f: &Jet) -> Self {
        Self {
            space: self.space.clone(),
            comps: self.comps.iter().map(|c| c * f).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> Self {
        Self {
            space: self.space.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(Jet::max_abs).fold(0.0, f64::max)
    }

    pub fn max_abs_upto(&self, deg: usize) -> f64 {
        self.comps.iter().map(|c| c.max_abs_upto(deg)).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &VectorField) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.max_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn truncated(&self) -> bool {
        self.comps.iter().any(Jet::truncated)
    }
}

/// `alpha ^ (d alpha)^n` as the coefficient of the ordered top form.
pub fn wedge_power_top(alpha: &Form1, n: usize) -> Result<TopForm> {
    let space = alpha.space();
    if space.slots() != 2 * n + 1 {
        return Err(Error::Structural(format!(
            "alpha ^ (d alpha)^{n} needs {} coframe slots, found {}",
            2 * n + 1,
            space.slots()
        )));
    }
    let a = alpha.to_kform();
    let da = alpha.d().to_kform();
    let mut acc = a;
    for _ in 0..n {
        acc = acc.wedge(&da);
    }
    let top = (1u32 << space.slots()) - 1;
    Ok(TopForm {
        coefficient: acc.coefficient(top),
    })
}

/// Contact certificate for a representative 1-form.
#[derive(Clone, Debug, Serialize)]
pub struct ContactCertificate {
    pub n: usize,
    pub degree: usize,
    pub window: (i32, i32),
    /// Zero-section value of the top coefficient at the first sample point.
    pub value: [f64; 2],
    pub min_abs: f64,
    pub witness: Vec<[f64; 2]>,
    pub tolerance: f64,
}

pub const TOL_CONTACT: f64 = 1e-9;

/// Base sample points: 64 points on `|u| = rho` per base variable, plus the
/// origin on Taylor windows.
pub fn default_samples(space: &JetSpace) -> Vec<Vec<Complex64>> {
    let m = space.base_dim();
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut pts = Vec::new();
    for k in 0..64 {
        let ang = 2.0 * PI * k as f64 / 64.0;
        let pt: Vec<Complex64> = (0..m)
            .map(|b| Complex64::from_polar(space.rho(), ang * (b + 1) as f64))
            .collect();
        pts.push(pt);
    }
    if space.is_taylor() {
        pts.push(vec![Complex64::new(0.0, 0.0); m]);
    }
    pts
}

/// Checks `alpha ^ (d alpha)^n != 0` on the zero section at the sample points.
pub fn contact_check(alpha: &Form1, n: usize, samples: &[Vec<Complex64>], tol: f64) -> Result<ContactCertificate> {
    let top = wedge_power_top(alpha, n)?;
    let c0 = top.coefficient.degree_part(0);
    let mut min_abs = f64::INFINITY;
    let mut witness = Vec::new();
    let mut first = None;
    for u in samples {
        let v = c0.eval_zero_section(u);
        first.get_or_insert(v);
        if v.norm() < min_abs {
            min_abs = v.norm();
            witness = u.iter().map(|z| [z.re, z.im]).collect();
        }
    }
    let first = first.unwrap_or_default();
    if !(min_abs > tol) {
        return Err(Error::NotContact {
            witness: format!("{witness:?}"),
            value: min_abs,
        });
    }
    Ok(ContactCertificate {
        n,
        degree: alpha.space().degree(),
        window: alpha.space().window(),
        value: [first.re, first.im],
        min_abs,
        witness,
        tolerance: tol,
    })
}

/// Solves `(V -| d alpha) + lambda alpha = rhs`, `alpha(V) = top` degree by degree.
///
/// The bordered matrix `[[M, a], [a^T, 0]]` with `M_kj = (d alpha)_jk` is
/// invertible along the zero section exactly when `alpha` is contact there.
pub fn solve_bordered(alpha: &Form1, dalpha: &Form2, rhs: &Form1, top: &Jet) -> Result<(VectorField, Jet)> {
    let space = alpha.space().clone();
    let n = space.slots();
    let mat = JetMatrix::from_fn(n + 1, n + 1, |k, j| {
        if k < n && j < n {
            dalpha.get(j, k)
        } else if k < n {
            alpha.coeff(k).clone()
        } else if j < n {
            alpha.coeff(j).clone()
        } else {
            Jet::zero(&space)
        }
    });
    let mut b: Vec<Jet> = rhs.coeffs().to_vec();
    b.push(top.clone());
    let x = mat.solve(&b).map_err(|e| match e {
        Error::RankDeficient { witness, sigma } => Error::NotContact {
            witness: format!("u = {witness}"),
            value: sigma,
        },
        other => other,
    })?;
    let lambda = x[n].clone();
    let v = VectorField::from_comps(&space, x[..n].to_vec())?;
    Ok((v, lambda))
}

/// Reeb field: `alpha(R) = 1`, `R -| d alpha = 0`.
pub fn reeb_field(alpha: &Form1) -> Result<VectorField> {
    let space = alpha.space().clone();
    let (r, _) = solve_bordered(alpha, &alpha.d(), &Form1::zero(&space), &Jet::one(&space))?;
    Ok(r)
}

/// Residuals `(|alpha(R) - 1|, |R -| d alpha|)` over fiber degrees `<= deg`.
pub fn reeb_residuals(alpha: &Form1, r: &VectorField, deg: usize) -> (f64, f64) {
    let space = alpha.space();
    let e1 = (&alpha.eval(r) - &Jet::one(space)).max_abs_upto(deg);
    let e2 = alpha.d().contract(r).max_abs_upto(deg);
    (e1, e2)
}

/// `alpha / alpha(e_slot)` for a unit coefficient.
pub fn normalize_by(alpha: &Form1, slot: usize) -> Result<(Form1, Jet)> {
    let inv = invert_unit(alpha.coeff(slot))?;
    Ok((alpha.mul_jet(&inv), inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ThetaSpec;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn std_alpha(space: &Arc<JetSpace>) -> Form1 {
        // dz + x dy
        let mut a = Form1::zero(space);
        let z = space.slot_of("z").unwrap();
        let y = space.slot_of("y").unwrap();
        a.set(z, Jet::one(space));
        a.set(y, Jet::var(space, "x").unwrap());
        a
    }

    #[test]
    fn standard_form_top_coefficient() {
        let s = JetSpace::flat(&["x", "y", "z"], 2).unwrap();
        let top = wedge_power_top(&std_alpha(&s), 1).unwrap();
        // dz ^ dx ^ dy = + dx ^ dy ^ dz in the order (x, y, z).
        assert_eq!(top.coefficient.eval_zero_section(&[]), c(1.0));
    }

    #[test]
    fn d_of_y_theta() {
        let s = JetSpace::curve(ThetaSpec::DU, &["y", "z"], 2, (-2, 2)).unwrap();
        let mut w = Form1::zero(&s);
        w.set(0, Jet::var(&s, "y").unwrap());
        let dw = w.d();
        // d(y theta) = dy ^ theta = - theta ^ dy
        assert_eq!(dw.get(0, 1).eval_zero_section(&[c(0.3)]), c(-1.0));
        assert_eq!(dw.get(1, 0).eval_zero_section(&[c(0.3)]), c(1.0));
    }

    #[test]
    fn contraction_rules() {
        let s = JetSpace::flat(&["x", "y", "z"], 2).unwrap();
        let mut w = Form2::zero(&s);
        w.set(0, 1, Jet::one(&s));
        let dx = VectorField::basis(&s, 0);
        let out = w.contract(&dx);
        assert_eq!(out.coeff(1).eval_zero_section(&[]), c(1.0));
        let dz = VectorField::basis(&s, 2);
        assert!(w.contract(&dz).is_zero());
    }

    #[test]
    fn reeb_of_standard_form() {
        let s = JetSpace::flat(&["x", "y", "z"], 3).unwrap();
        let r = reeb_field(&std_alpha(&s)).unwrap();
        assert!(r.max_diff(&VectorField::basis(&s, 2)) == 0.0);
    }

    #[test]
    fn degenerate_form_fails_contact_check() {
        let s = JetSpace::flat(&["x", "y", "z"], 2).unwrap();
        let a = Form1::basis(&s, 2);
        let samples = default_samples(&s);
        assert!(matches!(contact_check(&a, 1, &samples, TOL_CONTACT), Err(Error::NotContact { .. })));
    }

    #[test]
    fn dd_vanishes() {
        let s = JetSpace::curve(ThetaSpec::DU_OVER_U, &["y", "z"], 3, (-3, 3)).unwrap();
        let y = Jet::var(&s, "y").unwrap();
        let u = Jet::base_monomial(&s, 0, 2, c(1.0));
        let w = Form1::from_coeffs(&s, vec![&y * &u, &y * &y, u.clone()]).unwrap();
        assert!(w.d().to_kform().d().max_abs() < 1e-13);
    }
}
