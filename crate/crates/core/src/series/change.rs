use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use super::jet::Jet;
use super::matrix::{BaseInverse, JetMatrix};
use super::space::JetSpace;
use crate::error::{Error, Result};

/// Coordinate change from `target` (new coordinates) to `source` (old
/// coordinates), stored as the old coordinates written as jets in the new.
///
/// Base coordinates move by a shift, `u_old = u + shift`, where the shift
/// vanishes on the zero section so the Taylor expansion in it terminates at
/// fiber degree `d`. Fiber coordinates are arbitrary jets.
#[derive(Clone, Debug)]
pub struct CoordinateChange {
    source: Arc<JetSpace>,
    target: Arc<JetSpace>,
    base_shift: Vec<Jet>,
    fiber: Vec<Jet>,
    label: String,
    powers: OnceLock<Vec<Jet>>,
}

impl CoordinateChange {
    pub fn new(
        source: &Arc<JetSpace>,
        target: &Arc<JetSpace>,
        base_shift: Vec<Jet>,
        fiber: Vec<Jet>,
    ) -> Result<Self> {
        if source.base_names() != target.base_names()
            || source.degree() != target.degree()
            || source.window() != target.window()
            || source.fiber_dim() != target.fiber_dim()
        {
            return Err(Error::Structural(
                "coordinate change needs matching base, degree, window and fiber rank".into(),
            ));
        }
        if base_shift.len() != source.base_dim() || fiber.len() != source.fiber_dim() {
            return Err(Error::Structural("coordinate change arity mismatch".into()));
        }
        for j in base_shift.iter().chain(&fiber) {
            if !j.space().same_as(target) {
                return Err(Error::Structural("change components must live in the target space".into()));
            }
        }
        for (b, s) in base_shift.iter().enumerate() {
            if s.degree_part(0).max_abs() > 0.0 {
                return Err(Error::Structural(format!(
                    "base shift of {} must vanish on the zero section",
                    source.base_names()[b]
                )));
            }
        }
        Ok(Self {
            source: source.clone(),
            target: target.clone(),
            base_shift,
            fiber,
            label: String::new(),
            powers: OnceLock::new(),
        })
    }

    pub fn identity(space: &Arc<JetSpace>) -> Self {
        let fiber = (0..space.fiber_dim()).map(|v| Jet::fiber_var(space, v)).collect();
        let base_shift = vec![Jet::zero(space); space.base_dim()];
        Self::new(space, space, base_shift, fiber).expect("identity is well formed")
    }

    /// `zeta_old = B(u) zeta` for a square matrix of base-only jets.
    pub fn fiber_linear(space: &Arc<JetSpace>, b: &JetMatrix) -> Result<Self> {
        let p = space.fiber_dim();
        if b.rows() != p || b.cols() != p {
            return Err(Error::Structural("fiber-linear change needs a p x p matrix".into()));
        }
        let vars: Vec<Jet> = (0..p).map(|v| Jet::fiber_var(space, v)).collect();
        let fiber = b.mul_vec(&vars);
        Self::new(space, space, vec![Jet::zero(space); space.base_dim()], fiber)
    }

    /// `zeta_old[var] = zeta[var] + q`, all other coordinates fixed.
    pub fn shear(space: &Arc<JetSpace>, var: usize, q: Jet) -> Result<Self> {
        let mut c = Self::identity(space);
        c.fiber[var] = &c.fiber[var] + &q;
        Ok(c.labeled("shear"))
    }

    /// Pure renaming: old fiber variable `i` is the new variable `perm[i]`.
    pub fn relabel(source: &Arc<JetSpace>, target: &Arc<JetSpace>, perm: &[usize]) -> Result<Self> {
        let fiber = perm.iter().map(|&j| Jet::fiber_var(target, j)).collect();
        Self::new(source, target, vec![Jet::zero(target); target.base_dim()], fiber)
            .map(|c| c.labeled("relabel"))
    }

    /// Diagonal scaling `zeta_old[v] = w[v] zeta[v]`.
    pub fn scaling(space: &Arc<JetSpace>, weights: &[Complex64]) -> Result<Self> {
        if weights.len() != space.fiber_dim() {
            return Err(Error::Structural("one weight per fiber variable".into()));
        }
        let fiber = weights
            .iter()
            .enumerate()
            .map(|(v, w)| Jet::fiber_var(space, v).scale(*w))
            .collect();
        Self::new(space, space, vec![Jet::zero(space); space.base_dim()], fiber)
    }

    pub fn labeled(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn source(&self) -> &Arc<JetSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<JetSpace> {
        &self.target
    }

    pub fn base_shift(&self) -> &[Jet] {
        &self.base_shift
    }

    pub fn fiber(&self) -> &[Jet] {
        &self.fiber
    }

    /// Component for coframe slot `s` of the source: base shifts first.
    pub fn component(&self, slot: usize) -> &Jet {
        let m = self.source.base_dim();
        if slot < m {
            &self.base_shift[slot]
        } else {
            &self.fiber[slot - m]
        }
    }

    pub fn truncated(&self) -> bool {
        self.base_shift.iter().chain(&self.fiber).any(Jet::truncated)
    }

    /// Whether every component vanishes on the zero section.
    pub fn fixes_zero_section(&self, tol: f64) -> bool {
        self.fiber.iter().all(|j| j.degree_part(0).max_abs() <= tol)
    }

    /// Images of all source fiber monomials, indexed like the source table.
    fn monomial_images(&self) -> &[Jet] {
        self.powers.get_or_init(|| {
            let src = &self.source;
            let mut out: Vec<Jet> = Vec::with_capacity(src.n_fiber_monos());
            for i in 0..src.n_fiber_monos() {
                let img = match src.fiber_parent[i] {
                    None => Jet::one(&self.target),
                    Some((parent, v)) => &out[parent] * &self.fiber[v],
                };
                out.push(img);
            }
            out
        })
    }

    /// `f(u + shift, fiber)` as a jet in the target space.
    pub fn substitute(&self, f: &Jet) -> Result<Jet> {
        if !f.space().same_as(&self.source) {
            return Err(Error::Structural(format!(
                "substitution source mismatch: {} vs {}",
                f.space().describe(),
                self.source.describe()
            )));
        }
        let m = self.source.base_dim();
        let d = self.source.degree();
        let active: Vec<usize> = (0..m).filter(|&b| !self.base_shift[b].is_zero()).collect();
        let mut result = Jet::zero(&self.target).with_truncated(f.truncated());
        // Multi-indices over the active shifts with total order <= d.
        let mut stack: Vec<(Vec<usize>, Jet, Jet)> = vec![(vec![0; active.len()], f.clone(), Jet::one(&self.target))];
        while let Some((alpha, deriv, weight)) = stack.pop() {
            if !deriv.is_zero() && !weight.is_zero() {
                let term = self.substitute_fiber(&deriv);
                result = &result + &(&term * &weight);
            }
            let order: usize = alpha.iter().sum();
            if order >= d {
                continue;
            }
            // Extend only in the last nonzero slot onwards to enumerate each multi-index once.
            let start = alpha.iter().rposition(|&a| a > 0).unwrap_or(0);
            for k in start..active.len() {
                let b = active[k];
                let next_deriv = deriv.deriv_base(b);
                if next_deriv.is_zero() {
                    continue;
                }
                let mut next = alpha.clone();
                next[k] += 1;
                let w = (&weight * &self.base_shift[b]).scale_re(1.0 / next[k] as f64);
                stack.push((next, next_deriv, w));
            }
        }
        Ok(result)
    }

    /// `f(u, fiber)`: substitution in the fiber variables only.
    fn substitute_fiber(&self, f: &Jet) -> Jet {
        let images = self.monomial_images();
        let src = &self.source;
        let nb = src.n_base_monos();
        let mut acc = Jet::zero(&self.target).with_truncated(f.truncated());
        for (fi, img) in images.iter().enumerate() {
            let block = &f.data()[fi * nb..(fi + 1) * nb];
            if block.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
                continue;
            }
            acc.add_mul_base_block(img, block);
        }
        acc
    }

    /// `self o inner`: first `inner` (new to mid), then `self` (mid to old).
    pub fn compose(&self, inner: &CoordinateChange) -> Result<CoordinateChange> {
        if !self.target.same_as(&inner.source) {
            return Err(Error::Structural("composition spaces do not chain".into()));
        }
        let base_shift = self
            .base_shift
            .iter()
            .zip(&inner.base_shift)
            .map(|(outer, s)| Ok(s + &inner.substitute(outer)?))
            .collect::<Result<Vec<_>>>()?;
        let fiber = self
            .fiber
            .iter()
            .map(|c| inner.substitute(c))
            .collect::<Result<Vec<_>>>()?;
        CoordinateChange::new(&self.source, &inner.target, base_shift, fiber)
    }

    /// Inverse up to truncation, by the Newton-type iteration
    /// `psi <- psi - L^{-1}(phi o psi - id)` with `L` the linear part along the zero section.
    pub fn inverse(&self) -> Result<CoordinateChange> {
        if !self.fixes_zero_section(0.0) {
            return Err(Error::Structural("inverse requires a change fixing the zero section".into()));
        }
        let src = &self.source;
        let tgt = &self.target;
        let m = src.base_dim();
        let p = src.fiber_dim();
        // Linear part: fiber block A (p x p) and base block b (m x p), both base-only.
        let a = JetMatrix::from_fn(p, p, |i, j| linear_coeff(&self.fiber[i], j));
        let bmat = JetMatrix::from_fn(m, p, |i, j| linear_coeff(&self.base_shift[i], j));
        let ainv = BaseInverse::new(&a).map_err(|e| match e {
            Error::RankDeficient { witness, sigma } => Error::RankDeficient { witness, sigma },
            other => other,
        })?;
        // Start from the inverse of the linear part.
        let vars: Vec<Jet> = (0..p).map(|v| Jet::fiber_var(src, v)).collect();
        let fiber0 = relabel_space(&ainv.apply(&relabel_all(&vars, tgt)), src);
        let base0 = (0..m)
            .map(|i| {
                let mut acc = Jet::zero(src);
                for j in 0..p {
                    acc = &acc - &(&relabel_one(bmat.get(i, j), src) * &fiber0[j]);
                }
                acc
            })
            .collect();
        let mut psi = CoordinateChange::new(tgt, src, base0, fiber0)?;
        for _ in 0..=src.degree() {
            let composed = self.compose(&psi)?;
            // Residual in source coordinates: phi(psi(x)) - x.
            let res_fiber: Vec<Jet> = composed
                .fiber
                .iter()
                .enumerate()
                .map(|(v, c)| c - &Jet::fiber_var(src, v))
                .collect();
            let res_base = composed.base_shift.clone();
            let err = res_fiber
                .iter()
                .chain(&res_base)
                .map(Jet::max_abs)
                .fold(0.0, f64::max);
            if err < 1e-15 {
                break;
            }
            let dx_fiber = relabel_space(&ainv.apply(&relabel_all(&res_fiber, tgt)), src);
            let dx_base: Vec<Jet> = (0..m)
                .map(|i| {
                    let mut acc = res_base[i].clone();
                    for j in 0..p {
                        acc = &acc - &(&relabel_one(bmat.get(i, j), src) * &dx_fiber[j]);
                    }
                    acc
                })
                .collect();
            let fiber = psi.fiber.iter().zip(&dx_fiber).map(|(a, b)| a - b).collect();
            let base = psi.base_shift.iter().zip(&dx_base).map(|(a, b)| a - b).collect();
            psi = CoordinateChange::new(tgt, src, base, fiber)?;
        }
        Ok(psi.labeled("inverse"))
    }

    /// Sup distance between two changes with the same spaces.
    pub fn max_diff(&self, other: &CoordinateChange) -> f64 {
        self.base_shift
            .iter()
            .chain(&self.fiber)
            .zip(other.base_shift.iter().chain(&other.fiber))
            .map(|(a, b)| a.max_diff(b))
            .fold(0.0, f64::max)
    }

    /// Sup distance over fiber degrees `<= deg`.
    pub fn max_diff_upto(&self, other: &CoordinateChange, deg: usize) -> f64 {
        self.base_shift
            .iter()
            .chain(&self.fiber)
            .zip(other.base_shift.iter().chain(&other.fiber))
            .map(|(a, b)| (a - b).max_abs_upto(deg))
            .fold(0.0, f64::max)
    }

    /// Replaces all components by the given jets (same spaces).
    pub fn with_components(&self, base_shift: Vec<Jet>, fiber: Vec<Jet>) -> Result<Self> {
        CoordinateChange::new(&self.source, &self.target, base_shift, fiber)
            .map(|c| c.labeled(&self.label))
    }
}

/// Base-only jet holding one block of coefficients.
/// Base-only coefficient of the linear monomial `zeta_j` in `f`.
fn linear_coeff(f: &Jet, j: usize) -> Jet {
    let space = f.space();
    let mut e = vec![0u8; space.fiber_dim()];
    e[j] = 1;
    let Some(fi) = space.fiber_mono_index(&e) else {
        return Jet::zero(space);
    };
    let nb = space.n_base_monos();
    Jet::base_block(space, &f.data()[fi * nb..(fi + 1) * nb])
}

/// Reinterprets a jet in a space with the same tables but other names.
pub fn relabel_one(f: &Jet, to: &Arc<JetSpace>) -> Jet {
    if f.space().same_as(to) {
        return f.clone();
    }
    let mut out = Jet::zero(to).with_truncated(f.truncated());
    for (fe, be, c) in f.terms() {
        out = &out + &Jet::term(to, &fe, &be, c).expect("compatible spaces");
    }
    out
}

fn relabel_all(v: &[Jet], to: &Arc<JetSpace>) -> Vec<Jet> {
    v.iter().map(|j| relabel_one(j, to)).collect()
}

fn relabel_space(v: &[Jet], to: &Arc<JetSpace>) -> Vec<Jet> {
    relabel_all(v, to)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::space::ThetaSpec;

    fn cx(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn space() -> Arc<JetSpace> {
        JetSpace::curve(ThetaSpec::DU, &["a", "b", "z"], 3, (-3, 3)).unwrap()
    }

    #[test]
    fn shear_substitution() {
        let s = space();
        let a = Jet::var(&s, "a").unwrap();
        let b = Jet::var(&s, "b").unwrap();
        let c = CoordinateChange::shear(&s, 0, &b * &b).unwrap();
        let out = c.substitute(&a).unwrap();
        assert!(out.max_diff(&(&a + &(&b * &b))) < 1e-15);
    }

    #[test]
    fn monomial_scaling_by_base_function() {
        let s = space();
        let a = Jet::var(&s, "a").unwrap();
        let u = Jet::base_monomial(&s, 0, 1, cx(1.0));
        let mut fiber: Vec<Jet> = (0..3).map(|v| Jet::fiber_var(&s, v)).collect();
        fiber[0] = &u * &a;
        let c = CoordinateChange::new(&s, &s, vec![Jet::zero(&s)], fiber).unwrap();
        let out = c.substitute(&(&a * &a)).unwrap();
        let expect = &(&u * &u) * &(&a * &a);
        assert!(out.max_diff(&expect) < 1e-15);
    }

    #[test]
    fn base_shift_taylor_expansion() {
        let s = space();
        let a = Jet::var(&s, "a").unwrap();
        let u2 = Jet::base_monomial(&s, 0, 2, cx(1.0));
        let c = CoordinateChange::new(&s, &s, vec![a.clone()], (0..3).map(|v| Jet::fiber_var(&s, v)).collect()).unwrap();
        // (u + a)^2 = u^2 + 2 u a + a^2
        let out = c.substitute(&u2).unwrap();
        let u = Jet::base_monomial(&s, 0, 1, cx(2.0));
        let expect = &(&u2 + &(&u * &a)) + &(&a * &a);
        assert!(out.max_diff(&expect) < 1e-14);
    }

    #[test]
    fn inverse_round_trip() {
        let s = space();
        let a = Jet::var(&s, "a").unwrap();
        let b = Jet::var(&s, "b").unwrap();
        let z = Jet::var(&s, "z").unwrap();
        let u = Jet::base_monomial(&s, 0, 1, cx(0.5));
        let fiber = vec![
            &(&a + &b.scale_re(0.3)) + &(&a * &b),
            &b.scale_re(2.0) + &(&u * &a),
            &z + &(&a * &a),
        ];
        let c = CoordinateChange::new(&s, &s, vec![(&a * &b).scale_re(0.1)], fiber).unwrap();
        let inv = c.inverse().unwrap();
        let id = c.compose(&inv).unwrap();
        assert!(id.max_diff_upto(&CoordinateChange::identity(&s), 3) < 1e-12);
    }
}
