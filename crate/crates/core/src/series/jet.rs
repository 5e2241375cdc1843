use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::Zero;

use super::laurent::LaurentSeries;
use super::space::JetSpace;
use crate::error::{Error, Result};

/// Polynomial in the fiber variables with truncated Laurent coefficients in
/// the base variables, truncated at total fiber degree `d`.
///
/// Storage is dense: block `f` (one per fiber monomial) holds the base
/// coefficients. The `truncated` flag is sticky: it is raised whenever an
/// operation drops a nonzero contribution and is inherited by every result
/// computed from a flagged operand.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    data: Vec<Complex64>,
    truncated: bool,
}

impl Jet {
    pub fn zero(space: &Arc<JetSpace>) -> Self {
        Self {
            space: space.clone(),
            data: vec![Complex64::zero(); space.n_fiber_monos() * space.n_base_monos()],
            truncated: false,
        }
    }

    pub fn constant(space: &Arc<JetSpace>, c: Complex64) -> Self {
        let mut j = Self::zero(space);
        match space.base_mono_index(&vec![0; space.base_dim()]) {
            Some(b0) => j.data[b0] = c,
            None => j.truncated = !c.is_zero(),
        }
        j
    }

    pub fn one(space: &Arc<JetSpace>) -> Self {
        Self::constant(space, Complex64::new(1.0, 0.0))
    }

    /// The fiber coordinate function `name`.
    pub fn var(space: &Arc<JetSpace>, name: &str) -> Result<Self> {
        let v = space
            .fiber_var(name)
            .ok_or_else(|| Error::Structural(format!("unknown fiber variable `{name}`")))?;
        Ok(Self::fiber_var(space, v))
    }

    pub fn fiber_var(space: &Arc<JetSpace>, v: usize) -> Self {
        let mut j = Self::zero(space);
        if space.degree() == 0 {
            j.truncated = true;
            return j;
        }
        let mut e = vec![0u8; space.fiber_dim()];
        e[v] = 1;
        let fi = space.fiber_mono_index(&e).unwrap();
        j.set(fi, &vec![0; space.base_dim()], Complex64::new(1.0, 0.0));
        j
    }

    /// `c * u_b^k` as a base-only jet.
    pub fn base_monomial(space: &Arc<JetSpace>, b: usize, k: i32, c: Complex64) -> Self {
        let mut e = vec![0; space.base_dim()];
        e[b] = k;
        let mut j = Self::zero(space);
        if !j.set(0, &e, c) {
            j.truncated = true;
        }
        j
    }

    /// Base-only jet from a Laurent series in base variable `b`.
    pub fn from_series(space: &Arc<JetSpace>, b: usize, s: &LaurentSeries) -> Self {
        let mut j = Self::zero(space);
        j.add_series_term(0, b, s);
        j
    }

    /// Adds `series * fiber_monomial` to this jet.
    pub fn add_series_term(&mut self, fiber: usize, b: usize, s: &LaurentSeries) {
        let mut e = vec![0; self.space.base_dim()];
        for (k, c) in s.terms() {
            if self.space.base_dim() == 0 {
                if k == 0 {
                    let idx = fiber * self.nb();
                    self.data[idx] += c;
                } else {
                    self.truncated = true;
                }
                continue;
            }
            e[b] = k;
            match self.space.base_mono_index(&e) {
                Some(bi) => {
                    let idx = fiber * self.nb() + bi;
                    self.data[idx] += c;
                }
                None => self.truncated = true,
            }
        }
    }

    /// Jet with a single term `c * zeta^exps * u^base`.
    pub fn term(space: &Arc<JetSpace>, exps: &[u8], base: &[i32], c: Complex64) -> Result<Self> {
        let mut j = Self::zero(space);
        let deg: usize = exps.iter().map(|&e| e as usize).sum();
        if exps.len() != space.fiber_dim() || base.len() != space.base_dim() {
            return Err(Error::Structural("monomial arity mismatch".into()));
        }
        if deg > space.degree() {
            j.truncated = !c.is_zero();
            return Ok(j);
        }
        let fi = space.fiber_mono_index(exps).unwrap();
        if !j.set(fi, base, c) {
            j.truncated = !c.is_zero();
        }
        Ok(j)
    }

    fn set(&mut self, fiber: usize, base: &[i32], c: Complex64) -> bool {
        match self.space.base_mono_index(base) {
            Some(bi) => {
                let nb = self.nb();
                self.data[fiber * nb + bi] = c;
                true
            }
            None => false,
        }
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn with_truncated(mut self, flag: bool) -> Self {
        self.truncated |= flag;
        self
    }

    pub fn clear_truncation(mut self) -> Self {
        self.truncated = false;
        self
    }

    fn nb(&self) -> usize {
        self.space.n_base_monos()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, fiber: usize, base: usize) -> Complex64 {
        self.data[fiber * self.nb() + base]
    }

    fn block(&self, f: usize) -> &[Complex64] {
        let nb = self.nb();
        &self.data[f * nb..(f + 1) * nb]
    }

    fn block_nonzero(&self, f: usize) -> bool {
        self.block(f).iter().any(|c| !c.is_zero())
    }

    fn check_space(&self, other: &Jet) -> Result<()> {
        if self.space.same_as(&other.space) {
            Ok(())
        } else {
            Err(Error::Structural(format!(
                "jets live in different spaces: {} vs {}",
                self.space.describe(),
                other.space.describe()
            )))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.is_zero())
    }

    /// Sup over coefficients.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Sup over coefficients of fiber degree `<= deg`.
    pub fn max_abs_upto(&self, deg: usize) -> f64 {
        let nb = self.nb();
        (0..self.space.n_fiber_monos())
            .filter(|&f| self.space.fiber_mono_degree(f) <= deg)
            .flat_map(|f| self.data[f * nb..(f + 1) * nb].iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Sup over coefficients with fiber degree `<= deg` and every base
    /// exponent inside `window`.
    pub fn max_abs_in(&self, deg: usize, window: (i32, i32)) -> f64 {
        let nb = self.nb();
        let mut m: f64 = 0.0;
        for f in 0..self.space.n_fiber_monos() {
            if self.space.fiber_mono_degree(f) > deg {
                continue;
            }
            for b in 0..nb {
                let e = self.space.base_mono(b);
                if e.iter().all(|&k| k >= window.0 && k <= window.1) {
                    m = m.max(self.data[f * nb + b].norm());
                }
            }
        }
        m
    }

    pub fn max_diff(&self, other: &Jet) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Lowest fiber degree carrying a nonzero coefficient.
    pub fn min_degree(&self) -> Option<usize> {
        (0..self.space.n_fiber_monos())
            .filter(|&f| self.block_nonzero(f))
            .map(|f| self.space.fiber_mono_degree(f))
            .min()
    }

    fn max_degree(&self) -> Option<usize> {
        (0..self.space.n_fiber_monos())
            .filter(|&f| self.block_nonzero(f))
            .map(|f| self.space.fiber_mono_degree(f))
            .max()
    }

    /// Whether every nonzero coefficient sits at fiber degree 0.
    pub fn is_base_only(&self) -> bool {
        self.max_degree().unwrap_or(0) == 0
    }

    /// Whether the base dependence is trivial (only exponent 0 present).
    pub fn is_base_constant(&self) -> bool {
        let nb = self.nb();
        let zero = vec![0; self.space.base_dim()];
        let b0 = self.space.base_mono_index(&zero);
        self.data
            .iter()
            .enumerate()
            .all(|(i, c)| c.is_zero() || Some(i % nb) == b0)
    }

    fn base_extent(&self) -> Option<Vec<(i32, i32)>> {
        let m = self.space.base_dim();
        let nb = self.nb();
        if m == 1 {
            let lo = self.space.window().0;
            let (mut a, mut b) = (nb, 0);
            for block in self.data.chunks(nb) {
                if let Some(x) = block.iter().position(|c| !c.is_zero()) {
                    a = a.min(x);
                    b = b.max(block.iter().rposition(|c| !c.is_zero()).unwrap_or(x));
                }
            }
            return (a <= b).then(|| vec![(lo + a as i32, lo + b as i32)]);
        }
        let mut ext: Option<Vec<(i32, i32)>> = None;
        for (i, c) in self.data.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = self.space.base_mono(i % nb);
            let ext = ext.get_or_insert_with(|| vec![(i32::MAX, i32::MIN); m]);
            for (x, &k) in ext.iter_mut().zip(e) {
                x.0 = x.0.min(k);
                x.1 = x.1.max(k);
            }
        }
        ext
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        self.check_space(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet> {
        self.check_space(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(Complex64, Complex64) -> Complex64) -> Jet {
        Jet {
            space: self.space.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
            truncated: self.truncated || other.truncated,
        }
    }

    pub fn scale(&self, c: Complex64) -> Jet {
        Jet {
            space: self.space.clone(),
            data: self.data.iter().map(|a| a * c).collect(),
            truncated: self.truncated,
        }
    }

    pub fn scale_re(&self, c: f64) -> Jet {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn axpy(&mut self, c: Complex64, x: &Jet) {
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += c * b;
        }
        self.truncated |= x.truncated;
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet> {
        self.check_space(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Jet) -> Jet {
        let sp = &self.space;
        let nb = self.nb();
        let mut out = vec![Complex64::zero(); self.data.len()];
        let nz_a: Vec<bool> = (0..sp.n_fiber_monos()).map(|f| self.block_nonzero(f)).collect();
        let nz_b: Vec<bool> = (0..sp.n_fiber_monos()).map(|f| other.block_nonzero(f)).collect();
        let mut flag = self.truncated || other.truncated;

        if let (Some(da), Some(db)) = (self.max_degree(), other.max_degree()) {
            if da + db > sp.degree() {
                flag = true;
            }
            if let (Some(ea), Some(eb)) = (self.base_extent(), other.base_extent()) {
                let (lo, hi) = sp.window();
                if ea.iter().zip(&eb).any(|(a, b)| a.0 + b.0 < lo || a.1 + b.1 > hi) {
                    flag = true;
                }
            }
        }

        if nb == 1 {
            for &(i, j, k) in &sp.fiber_mul {
                let (i, j, k) = (i as usize, j as usize, k as usize);
                if nz_a[i] && nz_b[j] {
                    out[k] += self.data[i] * other.data[j];
                }
            }
        } else if sp.base_dim() == 1 {
            let lo = sp.window().0;
            let nbi = nb as i32;
            for &(i, j, k) in &sp.fiber_mul {
                let (i, j, k) = (i as usize, j as usize, k as usize);
                if !(nz_a[i] && nz_b[j]) {
                    continue;
                }
                let a = &self.data[i * nb..(i + 1) * nb];
                let b = &other.data[j * nb..(j + 1) * nb];
                let o = &mut out[k * nb..(k + 1) * nb];
                for (x, av) in a.iter().enumerate() {
                    if av.is_zero() {
                        continue;
                    }
                    // exponent(x) + exponent(y) = 2 lo + x + y must land in the window
                    let shift = x as i32 + lo;
                    let ylo = (-shift).max(0);
                    let yhi = (nbi - shift).min(nbi);
                    for y in ylo..yhi {
                        o[(y + shift) as usize] += av * b[y as usize];
                    }
                }
            }
        } else {
            for &(i, j, k) in &sp.fiber_mul {
                let (i, j, k) = (i as usize, j as usize, k as usize);
                if !(nz_a[i] && nz_b[j]) {
                    continue;
                }
                for &(x, y, z) in &sp.base_mul {
                    let av = self.data[i * nb + x as usize];
                    if av.is_zero() {
                        continue;
                    }
                    out[k * nb + z as usize] += av * other.data[j * nb + y as usize];
                }
            }
        }
        Jet {
            space: self.space.clone(),
            data: out,
            truncated: flag,
        }
    }

    /// Base-only jet with fiber-degree-0 block `block`.
    pub(crate) fn base_block(space: &Arc<JetSpace>, block: &[Complex64]) -> Jet {
        let exps = vec![0u8; space.fiber_dim()];
        let mut acc = Jet::zero(space);
        for (b, c) in block.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let t = Jet::term(space, &exps, space.base_mono(b), *c).expect("arity matches");
            acc = &acc + &t;
        }
        acc
    }

    /// `self += img * b` for the base-only jet `b` whose fiber-degree-0 block
    /// is `block`; same rounding as `self + img.mul_base_jet(b)`.
    pub(crate) fn add_mul_base_block(&mut self, img: &Jet, block: &[Complex64]) {
        let sp = self.space.clone();
        let nb = self.nb();
        if sp.base_dim() != 1 {
            let b = Jet::base_block(&sp, block);
            *self = &*self + &img.mul_base_jet(&b);
            return;
        }
        let Some(bl) = block.iter().position(|c| !c.is_zero()) else {
            self.truncated |= img.truncated;
            return;
        };
        let bh = block.iter().rposition(|c| !c.is_zero()).unwrap_or(bl);
        let lo = sp.window().0;
        let b0 = (-lo) as usize;
        if bl == bh && bl == b0 {
            // Constant multiplier: `mul_base_jet` scales.
            let c = block[b0];
            for (o, a) in self.data.iter_mut().zip(&img.data) {
                *o += a * c;
            }
            self.truncated |= img.truncated;
            return;
        }
        let nbi = nb as i32;
        let (mut il, mut ih) = (nb, 0);
        let mut tmp = vec![Complex64::zero(); nb];
        for k in 0..sp.n_fiber_monos() {
            let a = &img.data[k * nb..(k + 1) * nb];
            if a.iter().all(|c| c.is_zero()) {
                continue;
            }
            tmp.iter_mut().for_each(|t| *t = Complex64::zero());
            for (x, av) in a.iter().enumerate() {
                if av.is_zero() {
                    continue;
                }
                il = il.min(x);
                ih = ih.max(x);
                let shift = x as i32 + lo;
                let ylo = (-shift).max(0);
                let yhi = (nbi - shift).min(nbi);
                for y in ylo..yhi {
                    tmp[(y + shift) as usize] += av * block[y as usize];
                }
            }
            for (o, t) in self.data[k * nb..(k + 1) * nb].iter_mut().zip(&tmp) {
                *o += t;
            }
        }
        let (hi, l2) = (sp.window().1, 2 * lo);
        let overflow = il <= ih && ((il + bl) as i32 + l2 < lo || (ih + bh) as i32 + l2 > hi);
        self.truncated |= img.truncated || overflow;
    }

    pub fn pow(&self, e: u32) -> Jet {
        let mut acc = Jet::one(&self.space);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// `d/dzeta_v`.
    pub fn deriv_fiber(&self, v: usize) -> Jet {
        let nb = self.nb();
        let mut out = Jet::zero(&self.space);
        out.truncated = self.truncated;
        for (i, entry) in self.space.fiber_deriv[v].iter().enumerate() {
            if let Some((j, e)) = *entry {
                for b in 0..nb {
                    out.data[j * nb + b] += self.data[i * nb + b] * e;
                }
            }
        }
        out
    }

    /// `d/du_b`.
    pub fn deriv_base(&self, b: usize) -> Jet {
        let sp = &self.space;
        let nb = self.nb();
        let mut out = Jet::zero(sp);
        out.truncated = self.truncated;
        for bi in 0..nb {
            let e = sp.base_mono(bi);
            let k = e[b];
            if k == 0 {
                continue;
            }
            let mut lower = e.to_vec();
            lower[b] -= 1;
            let target = sp.base_mono_index(&lower);
            for f in 0..sp.n_fiber_monos() {
                let c = self.data[f * nb + bi];
                if c.is_zero() {
                    continue;
                }
                match target {
                    Some(t) => out.data[f * nb + t] += c * k as f64,
                    None => out.truncated = true,
                }
            }
        }
        out
    }

    /// Multiplies by `c * u_b^k`, shifting base exponents.
    pub fn mul_base_monomial(&self, b: usize, k: i32, c: Complex64) -> Jet {
        let sp = &self.space;
        let nb = self.nb();
        let mut out = Jet::zero(sp);
        out.truncated = self.truncated;
        for bi in 0..nb {
            let mut e = sp.base_mono(bi).to_vec();
            e[b] += k;
            let target = sp.base_mono_index(&e);
            for f in 0..sp.n_fiber_monos() {
                let v = self.data[f * nb + bi];
                if v.is_zero() {
                    continue;
                }
                match target {
                    Some(t) => out.data[f * nb + t] += v * c,
                    None => out.truncated = true,
                }
            }
        }
        out
    }

    /// Derivative along the base frame vector dual to `theta_b`: `(1/g) d/du_b`.
    pub fn deriv_theta(&self, b: usize) -> Jet {
        let th = self.space.theta(b);
        self.deriv_base(b).mul_base_monomial(b, -th.power, th.coeff.inv())
    }

    /// Derivative along coframe slot `slot` (base thetas first, then fibers).
    pub fn deriv_slot(&self, slot: usize) -> Jet {
        let m = self.space.base_dim();
        if slot < m {
            self.deriv_theta(slot)
        } else {
            self.deriv_fiber(slot - m)
        }
    }

    /// `int_0^{zeta_v} f dzeta_v`.
    pub fn integrate_fiber(&self, v: usize) -> Jet {
        let nb = self.nb();
        let mut out = Jet::zero(&self.space);
        out.truncated = self.truncated;
        for f in 0..self.space.n_fiber_monos() {
            if !self.block_nonzero(f) {
                continue;
            }
            let e = self.space.fiber_mono(f)[v] as f64;
            match self.space.fiber_raise[v][f] {
                Some(t) => {
                    for b in 0..nb {
                        out.data[t * nb + b] += self.data[f * nb + b] / (e + 1.0);
                    }
                }
                None => out.truncated = true,
            }
        }
        out
    }

    /// Multiplies by the fiber coordinate `zeta_v`.
    pub fn mul_fiber_var(&self, v: usize) -> Jet {
        let nb = self.nb();
        let mut out = Jet::zero(&self.space);
        out.truncated = self.truncated;
        for f in 0..self.space.n_fiber_monos() {
            if !self.block_nonzero(f) {
                continue;
            }
            match self.space.fiber_raise[v][f] {
                Some(t) => {
                    for b in 0..nb {
                        out.data[t * nb + b] += self.data[f * nb + b];
                    }
                }
                None => out.truncated = true,
            }
        }
        out
    }

    /// Keeps only the homogeneous fiber-degree `k` part.
    pub fn degree_part(&self, k: usize) -> Jet {
        self.filter_fiber(|_, deg| deg == k)
    }

    /// Keeps fiber degrees `<= k`.
    pub fn truncate_degree(&self, k: usize) -> Jet {
        self.filter_fiber(|_, deg| deg <= k)
    }

    /// Keeps the fiber monomials selected by `keep(exponents, degree)`.
    pub fn filter_fiber(&self, keep: impl Fn(&[u8], usize) -> bool) -> Jet {
        let nb = self.nb();
        let mut out = self.clone();
        for f in 0..self.space.n_fiber_monos() {
            if !keep(self.space.fiber_mono(f), self.space.fiber_mono_degree(f)) {
                for b in 0..nb {
                    out.data[f * nb + b] = Complex64::zero();
                }
            }
        }
        out
    }

    /// Sets coefficients with magnitude below `tol` to zero.
    pub fn chop(&self, tol: f64) -> Jet {
        let mut out = self.clone();
        for c in out.data.iter_mut() {
            if c.norm() < tol {
                *c = Complex64::zero();
            }
        }
        out
    }

    /// Coefficient series of a fiber monomial (curve bases only).
    pub fn coefficient(&self, exps: &[u8]) -> LaurentSeries {
        let name = self.space.base_names().first().cloned().unwrap_or_else(|| "u".into());
        let Some(f) = self.space.fiber_mono_index(exps) else {
            return LaurentSeries::zero(name);
        };
        let terms: Vec<(i32, Complex64)> = (0..self.nb())
            .map(|b| {
                let k = self.space.base_mono(b).first().copied().unwrap_or(0);
                (k, self.get(f, b))
            })
            .filter(|(_, c)| !c.is_zero())
            .collect();
        LaurentSeries::from_terms(name, &terms)
    }

    /// Base-only jet multiplying the fiber monomial `exps`.
    pub fn fiber_coefficient(&self, exps: &[u8]) -> Jet {
        let mut out = Jet::zero(&self.space).with_truncated(self.truncated);
        if let Some(f) = self.space.fiber_mono_index(exps) {
            let nb = self.nb();
            out.data[..nb].copy_from_slice(&self.data[f * nb..(f + 1) * nb]);
        }
        out
    }

    /// Base-only coefficient of the fiber variable `v`.
    pub fn linear_coefficient(&self, v: usize) -> Jet {
        let mut e = vec![0u8; self.space.fiber_dim()];
        e[v] = 1;
        self.fiber_coefficient(&e)
    }

    /// Nonzero `(fiber exponents, base exponents, coefficient)` triples.
    pub fn terms(&self) -> Vec<(Vec<u8>, Vec<i32>, Complex64)> {
        let nb = self.nb();
        let mut out = Vec::new();
        for f in 0..self.space.n_fiber_monos() {
            for b in 0..nb {
                let c = self.data[f * nb + b];
                if !c.is_zero() {
                    out.push((
                        self.space.fiber_mono(f).to_vec(),
                        self.space.base_mono(b).to_vec(),
                        c,
                    ));
                }
            }
        }
        out
    }

    /// Base-only part (fiber degree 0) evaluated at a base point.
    pub fn eval_zero_section(&self, u: &[Complex64]) -> Complex64 {
        let nb = self.nb();
        (0..nb)
            .map(|b| self.data[b] * base_power(self.space.base_mono(b), u))
            .sum()
    }

    pub fn eval(&self, u: &[Complex64], zeta: &[Complex64]) -> Complex64 {
        let nb = self.nb();
        let mut acc = Complex64::zero();
        for f in 0..self.space.n_fiber_monos() {
            if !self.block_nonzero(f) {
                continue;
            }
            let mono: Complex64 = self
                .space
                .fiber_mono(f)
                .iter()
                .zip(zeta)
                .map(|(&e, z)| z.powu(e as u32))
                .product();
            let series: Complex64 = (0..nb)
                .map(|b| self.data[f * nb + b] * base_power(self.space.base_mono(b), u))
                .sum();
            acc += mono * series;
        }
        acc
    }

    /// Product with a base-only jet, touching only the base convolution.
    pub fn mul_base_jet(&self, base: &Jet) -> Jet {
        if base.is_base_constant() {
            let c = self
                .space
                .base_mono_index(&vec![0; self.space.base_dim()])
                .map(|b0| base.data[b0])
                .unwrap_or_default();
            return self.scale(c).with_truncated(base.truncated);
        }
        self * base
    }
}

fn base_power(exps: &[i32], u: &[Complex64]) -> Complex64 {
    exps.iter().zip(u).map(|(&k, x)| x.powi(k)).product()
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.space.same_as(&other.space) && self.data == other.data
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms();
        if terms.is_empty() {
            return write!(f, "0");
        }
        let names = self.space.fiber_names();
        let bnames = self.space.base_names();
        for (i, (fe, be, c)) in terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.3e}{:+.3e}i)", c.re, c.im)?;
            for (n, &e) in bnames.iter().zip(be) {
                if e != 0 {
                    write!(f, "{n}^{e}")?;
                }
            }
            for (n, &e) in names.iter().zip(fe) {
                if e == 1 {
                    write!(f, "{n}")?;
                } else if e > 1 {
                    write!(f, "{n}^{e}")?;
                }
            }
        }
        if self.truncated {
            write!(f, " [truncated]")?;
        }
        Ok(())
    }
}

// Operator sugar panics on mismatched spaces; the `try_*` methods report it.
impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.try_add(rhs).expect("jet space mismatch")
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.try_sub(rhs).expect("jet space mismatch")
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.try_mul(rhs).expect("jet space mismatch")
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale_re(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale_re(-1.0)
    }
}
