//! Staged reduction of a contact jet along the zero section to
//! `alpha_normal + remainder`, with every discarded term classified.
//!
//! Fiber positions are fixed throughout: position 0 becomes `z`, positions
//! `1..=m` become `y_1..y_m`, and the remaining positions pair up as
//! `(x_i, y_i)` for `i = m+1..n`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{contact_check, normalize_by, wedge_power_top, Form1, TOL_CONTACT};
use crate::frame::{frame_complete_jets, FrameCertificate, FrameMode};
use crate::series::{CoordinateChange, Jet, JetMatrix, JetSpace};

pub const TOL_ISOTROPIC: f64 = 1e-12;
pub const TOL_ROUNDTRIP: f64 = 1e-11;
pub const TOL_SOUNDNESS: f64 = 1e-10;
/// Remainder terms below this magnitude count as roundoff, not as terms.
pub const TOL_TERM: f64 = 1e-12;

/// Variable roles for base dimension `m` and contact dimension `2n+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub m: usize,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Z,
    Y(usize),
    X(usize),
}

impl Layout {
    /// Layout for a jet space with `m` base and `2n+1-m` fiber variables.
    pub fn of(space: &JetSpace) -> Result<Self> {
        let m = space.base_dim();
        let p = space.fiber_dim();
        if m == 0 || (p + m).is_multiple_of(2) || p + m < 3 {
            return Err(Error::Structural(format!(
                "base dimension {m} with {p} fiber variables is not a contact layout"
            )));
        }
        let n = (p + m - 1) / 2;
        if m > n {
            return Err(Error::Structural(format!("isotropic base of dimension {m} needs m <= n = {n}")));
        }
        Ok(Self { m, n })
    }

    pub fn fiber_dim(&self) -> usize {
        2 * self.n + 1 - self.m
    }

    pub fn role(&self, pos: usize) -> Role {
        if pos == 0 {
            Role::Z
        } else if pos <= self.m {
            Role::Y(pos)
        } else {
            let k = pos - self.m - 1;
            let i = self.m + 1 + k / 2;
            if k.is_multiple_of(2) {
                Role::X(i)
            } else {
                Role::Y(i)
            }
        }
    }

    pub fn y_pos(&self, i: usize) -> usize {
        if i <= self.m {
            i
        } else {
            self.x_pos(i) + 1
        }
    }

    pub fn x_pos(&self, i: usize) -> usize {
        self.m + 1 + 2 * (i - self.m - 1)
    }

    /// Fiber names in position order.
    pub fn names(&self) -> Vec<String> {
        (0..self.fiber_dim())
            .map(|p| match self.role(p) {
                Role::Z => "z".to_string(),
                Role::Y(i) => format!("y{i}"),
                Role::X(i) => format!("x{i}"),
            })
            .collect()
    }

    /// Reduction stage after which `y_i` has its final meaning.
    fn y_final_stage(&self, i: usize) -> usize {
        if i <= self.m {
            1
        } else {
            1 + i - self.m
        }
    }

    /// Number of frame-completion stages after the linear stage.
    pub fn stage_count(&self) -> usize {
        1 + self.n - self.m
    }
}

/// The normal form `dz - sum_{j<=m} y_j theta_j - sum_{i>m} y_i dx_i` on a
/// space whose fibers follow `layout`.
pub fn normal_form(space: &Arc<JetSpace>, layout: &Layout) -> Form1 {
    let m = layout.m;
    let mut a = Form1::zero(space);
    a.set(m, Jet::one(space));
    for j in 1..=m {
        a.set(j - 1, -Jet::fiber_var(space, layout.y_pos(j)));
    }
    for i in m + 1..=layout.n {
        a.set(m + layout.x_pos(i), -Jet::fiber_var(space, layout.y_pos(i)));
    }
    a
}

/// Ground for placing a term in the remainder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    /// The coefficient contains `z`.
    A,
    /// A `zeta_j d zeta_j` term.
    B,
    /// Coefficient of fiber degree at least 2.
    C,
    /// Pairs a finalized `y_i` with a variable after `x_i`.
    D,
}

/// Classifies `c(u) zeta^exps` times the coframe element `slot` after
/// `stage` reduction stages (0: linear stage, 1: theta stage, 1+k: k pairs).
pub fn ideal_membership(layout: &Layout, slot: usize, exps: &[u8], stage: usize) -> Option<Clause> {
    let m = layout.m;
    if exps.first().is_some_and(|&e| e > 0) {
        return Some(Clause::A);
    }
    let deg: usize = exps.iter().map(|&e| e as usize).sum();
    if deg >= 2 {
        return Some(Clause::C);
    }
    if deg == 0 || slot < m {
        return None;
    }
    let k = exps.iter().position(|&e| e == 1)?;
    let v = slot - m;
    if v == k {
        return Some(Clause::B);
    }
    if v == 0 {
        return None;
    }
    let admits = |yp: usize, other: usize| match layout.role(yp) {
        Role::Y(i) if stage >= layout.y_final_stage(i) => i <= m || other > layout.x_pos(i),
        _ => false,
    };
    if admits(k, v) || admits(v, k) {
        Some(Clause::D)
    } else {
        None
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Discard {
    pub stage: usize,
    pub slot: String,
    pub monomial: String,
    pub magnitude: f64,
    pub clause: Clause,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    pub kind: String,
    pub rank: Option<FrameCertificate>,
    pub shear_norm: f64,
}

#[derive(Clone, Debug)]
pub struct DecomposedForm {
    pub layout: Layout,
    pub normal_part: Form1,
    pub remainder: Form1,
    /// `phi^* beta = conformal * (normal_part + remainder)`.
    pub conformal: Jet,
    /// Applied in order; the composite is `log[0] o log[1] o ...`.
    pub change_log: Vec<CoordinateChange>,
    pub stages: Vec<StageRecord>,
    pub discards: Vec<Discard>,
    /// Largest remainder coefficient dropped as roundoff.
    pub noise: f64,
}

impl DecomposedForm {
    pub fn composite(&self) -> Result<CoordinateChange> {
        compose_all(&self.change_log)
    }

    /// `normal_part + remainder`.
    pub fn total(&self) -> Result<Form1> {
        self.normal_part.add(&self.remainder)
    }

    /// Max coefficient difference over fiber degrees `<= d-1` between
    /// `phi^* beta` and `conformal * (normal + remainder)`.
    pub fn round_trip_residual(&self, beta: &Form1) -> Result<f64> {
        let phi = self.composite()?;
        let pulled = beta.pullback(&phi)?;
        let rebuilt = self.total()?.mul_jet(&self.conformal);
        let deg = self.normal_part.space().degree().saturating_sub(1);
        Ok(pulled.sub(&rebuilt)?.max_abs_upto(deg))
    }

    /// Difference of the top coefficients of `total` and `normal_part` on
    /// the zero section.
    pub fn soundness_residual(&self) -> Result<f64> {
        let n = self.layout.n;
        let full = wedge_power_top(&self.total()?, n)?.coefficient.degree_part(0);
        let normal = wedge_power_top(&self.normal_part, n)?.coefficient.degree_part(0);
        Ok((&full - &normal).max_abs())
    }
}

pub fn compose_all(log: &[CoordinateChange]) -> Result<CoordinateChange> {
    let mut it = log.iter();
    let Some(first) = it.next() else {
        return Err(Error::Structural("empty change log".into()));
    };
    it.try_fold(first.clone(), |acc, c| acc.compose(c))
}

#[derive(Clone, Debug)]
pub struct NormalizeOptions {
    pub mode: FrameMode,
    /// Base points for rank and contact checks.
    pub samples: Vec<Vec<Complex64>>,
}

fn complete(a: &JetMatrix, opts: &NormalizeOptions) -> Result<(JetMatrix, FrameCertificate)> {
    match frame_complete_jets(a, opts.mode, &opts.samples) {
        Err(Error::ExactGcdFailure(_)) if opts.mode == FrameMode::Exact => {
            frame_complete_jets(a, FrameMode::Numeric, &opts.samples)
        }
        other => other,
    }
}

fn is_identity(c: &CoordinateChange) -> bool {
    c.max_diff(&CoordinateChange::identity(c.source())) == 0.0
}

/// Fiber-linear change `zeta_old = diag(I_start, block) zeta`.
fn block_change(space: &Arc<JetSpace>, start: usize, block: &JetMatrix) -> Result<CoordinateChange> {
    let p = space.fiber_dim();
    let full = JetMatrix::from_fn(p, p, |i, j| {
        if i >= start && j >= start {
            block.get(i - start, j - start).clone()
        } else if i == j {
            Jet::one(space)
        } else {
            Jet::zero(space)
        }
    });
    CoordinateChange::fiber_linear(space, &full)
}

/// Makes `beta = d zeta_0` on the zero section by a fiber-linear frame change.
pub fn normalize_linear_part(beta: &Form1, opts: &NormalizeOptions) -> Result<(CoordinateChange, Form1)> {
    let space = beta.space().clone();
    let layout = Layout::of(&space)?;
    let m = layout.m;
    let theta0 = (0..m).map(|b| beta.coeff(b).degree_part(0).max_abs()).fold(0.0, f64::max);
    if theta0 > TOL_ISOTROPIC {
        return Err(Error::NotIsotropic { value: theta0 });
    }
    contact_check(beta, layout.n, &opts.samples, TOL_CONTACT)?;
    let p = space.fiber_dim();
    let a = JetMatrix::from_fn(1, p, |_, j| beta.coeff(m + j).degree_part(0));
    let (b, _) = complete(&a, opts)?;
    let change = CoordinateChange::fiber_linear(&space, &b)?.labeled("linear");
    let out = beta.pullback(&change)?;
    let mut target = Form1::zero(&space);
    target.set(m, Jet::one(&space));
    let res = out.on_zero_section().sub(&target)?.max_abs();
    if res > 1e-10 {
        return Err(Error::Structural(format!("linear stage left residual {res:e} on the zero section")));
    }
    Ok((change, out))
}

fn rank_failure(stage: usize, what: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::RankDeficient { witness, sigma } => Error::ContactViolation {
            stage,
            detail: format!("{what} rank drops at u = {witness} (sigma {sigma:e})"),
        },
        other => other,
    }
}

struct Reducer<'a> {
    space: Arc<JetSpace>,
    layout: Layout,
    opts: &'a NormalizeOptions,
    beta: Form1,
    log: Vec<CoordinateChange>,
    stages: Vec<StageRecord>,
}

impl Reducer<'_> {
    fn apply(&mut self, c: CoordinateChange) -> Result<()> {
        if is_identity(&c) {
            return Ok(());
        }
        self.beta = self.beta.pullback(&c)?;
        self.log.push(c);
        Ok(())
    }

    /// Divides by the `dz` coefficient (a unit near the zero section).
    fn divide(&mut self) -> Result<()> {
        self.beta = normalize_by(&self.beta, self.layout.m)?.0;
        Ok(())
    }

    fn theta_stage(&mut self) -> Result<()> {
        let m = self.layout.m;
        let p = self.space.fiber_dim();
        let rows = JetMatrix::from_fn(m, p - 1, |i, j| self.beta.coeff(i).linear_coefficient(j + 1));
        let (mut b, cert) = complete(&rows, self.opts).map_err(rank_failure(1, "theta coefficient"))?;
        for i in 0..b.rows() {
            for j in 0..m {
                let v = -b.get(i, j);
                b.set(i, j, v);
            }
        }
        let c = block_change(&self.space, 1, &b)?.labeled("theta stage");
        self.apply(c)?;
        self.divide()?;
        self.stages.push(StageRecord {
            stage: 1,
            kind: "theta".into(),
            rank: Some(cert),
            shear_norm: 0.0,
        });
        Ok(())
    }

    fn pair_stage(&mut self, i: usize) -> Result<()> {
        let stage = 1 + i - self.layout.m;
        let m = self.layout.m;
        let p = self.space.fiber_dim();
        let s = self.layout.x_pos(i);
        // Shear z' = z + sum_{j>s} c_{j,s} zeta_s zeta_j removes zeta_s from later differentials.
        let mut q = Jet::zero(&self.space);
        for j in s + 1..p {
            let c = self.beta.coeff(m + j).linear_coefficient(s);
            if !c.is_zero() {
                q = &q + &c.mul_fiber_var(s).mul_fiber_var(j);
            }
        }
        let shear_norm = q.max_abs();
        if !q.is_zero() {
            let c = CoordinateChange::shear(&self.space, 0, -q)?.labeled(&format!("shear x{i}"));
            self.apply(c)?;
        }
        let rows = JetMatrix::from_fn(1, p - s - 1, |_, k| self.beta.coeff(m + s).linear_coefficient(s + 1 + k));
        let what = format!("d x{i} coefficient");
        let (mut b, cert) = complete(&rows, self.opts).map_err(rank_failure(stage, &what))?;
        for r in 0..b.rows() {
            let v = -b.get(r, 0);
            b.set(r, 0, v);
        }
        let c = block_change(&self.space, s + 1, &b)?.labeled(&format!("pair x{i} y{i}"));
        self.apply(c)?;
        self.divide()?;
        self.stages.push(StageRecord {
            stage,
            kind: format!("pair {i}"),
            rank: Some(cert),
            shear_norm,
        });
        Ok(())
    }
}

/// Reduces `beta` with `beta = d zeta_0` on the zero section to normal form
/// plus a classified remainder, in a space renamed per the layout.
pub fn reduce_taylor(beta: &Form1, opts: &NormalizeOptions) -> Result<DecomposedForm> {
    reduce_with_log(beta, opts, Vec::new())
}

fn reduce_with_log(beta: &Form1, opts: &NormalizeOptions, log: Vec<CoordinateChange>) -> Result<DecomposedForm> {
    let space = beta.space().clone();
    let layout = Layout::of(&space)?;
    let m = layout.m;
    let mut target = Form1::zero(&space);
    target.set(m, Jet::one(&space));
    if beta.on_zero_section().sub(&target)?.max_abs() > 1e-10 {
        return Err(Error::Precondition("reduce_taylor needs beta = d zeta_0 on the zero section".into()));
    }
    let mut r = Reducer {
        space: space.clone(),
        layout,
        opts,
        beta: normalize_by(beta, m)?.0,
        log: Vec::new(),
        stages: Vec::new(),
    };
    r.theta_stage()?;
    for i in m + 1..=layout.n {
        r.pair_stage(i)?;
    }
    let names = layout.names();
    let out_space = JetSpace::new(
        space.base_names().iter().cloned().zip((0..m).map(|b| space.theta(b))).collect(),
        names.clone(),
        space.degree(),
        space.window(),
        space.rho(),
    )?;
    let perm: Vec<usize> = (0..space.fiber_dim()).collect();
    let relabel = CoordinateChange::relabel(&space, &out_space, &perm)?;
    let reduced = r.beta.pullback(&relabel)?;
    let normal = normal_form(&out_space, &layout);
    let raw = reduced.sub(&normal)?;

    let final_stage = layout.stage_count();
    let mut discards = Vec::new();
    let mut noise = 0.0f64;
    let mut remainder = Form1::zero(&out_space);
    for slot in 0..out_space.slots() {
        let coeff = raw.coeff(slot);
        let mut kept = Jet::zero(&out_space).with_truncated(coeff.truncated());
        let mut groups: Vec<(Vec<u8>, f64)> = Vec::new();
        for (fe, be, c) in coeff.terms() {
            if c.norm() <= TOL_TERM {
                noise = noise.max(c.norm());
                continue;
            }
            kept = &kept + &Jet::term(&out_space, &fe, &be, c)?;
            match groups.iter_mut().find(|g| g.0 == fe) {
                Some(g) => g.1 = g.1.max(c.norm()),
                None => groups.push((fe, c.norm())),
            }
        }
        for (fe, mag) in groups {
            let slot_name = out_space.slot_name(slot);
            let monomial = monomial_name(&names, &fe);
            let Some(clause) = ideal_membership(&layout, slot, &fe, final_stage) else {
                return Err(Error::ContactViolation {
                    stage: final_stage,
                    detail: format!("remainder term {monomial} d{slot_name} (|c| = {mag:e}) is not ignorable"),
                });
            };
            discards.push(Discard {
                stage: final_stage,
                slot: slot_name,
                monomial,
                magnitude: mag,
                clause,
            });
        }
        remainder.set(slot, kept);
    }

    let mut own = r.log;
    own.push(relabel);
    let conformal = beta.pullback(&compose_all(&own)?)?.coeff(m).clone();
    let mut change_log = log;
    change_log.extend(own);
    Ok(DecomposedForm {
        layout,
        normal_part: normal,
        remainder,
        conformal,
        change_log,
        stages: r.stages,
        discards,
        noise,
    })
}

/// Full pipeline: linear stage, then `reduce_taylor`. Round-trip and
/// soundness residuals are certified against the original `beta`.
pub fn normalize(beta: &Form1, opts: &NormalizeOptions) -> Result<DecomposedForm> {
    let (lin, b1) = normalize_linear_part(beta, opts)?;
    let log = if is_identity(&lin) { Vec::new() } else { vec![lin] };
    let mut dec = reduce_with_log(&b1, opts, log)?;
    let phi = dec.composite()?;
    dec.conformal = beta.pullback(&phi)?.coeff(dec.layout.m).clone();
    Ok(dec)
}

fn monomial_name(names: &[String], exps: &[u8]) -> String {
    let parts: Vec<String> = exps
        .iter()
        .zip(names)
        .filter(|(e, _)| **e > 0)
        .map(|(e, n)| if *e == 1 { n.clone() } else { format!("{n}^{e}") })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::default_samples;
    use crate::series::ThetaSpec;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn space(fiber: &[&str], d: usize) -> Arc<JetSpace> {
        JetSpace::curve(ThetaSpec::DU, fiber, d, (-4, 4)).unwrap()
    }

    fn opts(s: &Arc<JetSpace>) -> NormalizeOptions {
        NormalizeOptions {
            mode: FrameMode::Exact,
            samples: default_samples(s),
        }
    }

    fn var(s: &Arc<JetSpace>, name: &str) -> Jet {
        Jet::var(s, name).unwrap()
    }

    #[test]
    fn layout_roles() {
        let l = Layout { m: 1, n: 3 };
        assert_eq!(l.names(), vec!["z", "y1", "x2", "y2", "x3", "y3"]);
        assert_eq!(l.stage_count(), 3);
        let l = Layout { m: 2, n: 3 };
        assert_eq!(l.names(), vec!["z", "y1", "y2", "x3", "y3"]);
    }

    #[test]
    fn membership_examples() {
        let l = Layout { m: 1, n: 2 };
        // slots: theta, z, y1, x2, y2
        assert_eq!(ideal_membership(&l, 3, &[1, 0, 0, 0], 0), Some(Clause::A));
        assert_eq!(ideal_membership(&l, 3, &[0, 0, 1, 0], 0), Some(Clause::B));
        assert_eq!(ideal_membership(&l, 3, &[0, 1, 1, 0], 0), Some(Clause::C));
        // y2 dx2 is the normal term itself, x2 dy2 changes the top form.
        assert_eq!(ideal_membership(&l, 3, &[0, 0, 0, 1], 2), None);
        assert_eq!(ideal_membership(&l, 4, &[0, 0, 1, 0], 2), None);
        assert_eq!(ideal_membership(&l, 2, &[0, 0, 1, 0], 1), Some(Clause::D));
        assert_eq!(ideal_membership(&l, 0, &[0, 0, 1, 0], 2), None);
        let l3 = Layout { m: 1, n: 3 };
        // y1 dx3 after two stages.
        assert_eq!(ideal_membership(&l3, 5, &[0, 1, 0, 0, 0, 0], 2), Some(Clause::D));
        assert_eq!(ideal_membership(&l3, 5, &[0, 1, 0, 0, 0, 0], 0), None);
    }

    #[test]
    fn normal_input_is_fixed() {
        let s = space(&["z", "y1", "x2", "y2"], 2);
        let a = normal_form(&s, &Layout { m: 1, n: 2 });
        let dec = normalize(&a, &opts(&s)).unwrap();
        assert!(dec.remainder.is_zero());
        assert!(dec.discards.is_empty());
        assert_eq!(dec.change_log.len(), 1, "only the renaming");
        assert!(dec.round_trip_residual(&a).unwrap() < 1e-14);
    }

    #[test]
    fn linear_stage_with_frame() {
        let s = space(&["w1", "w2", "w3", "w4"], 2);
        let u = Jet::base_monomial(&s, 0, 1, c(1.0));
        // beta = dw1 + u dw2 + higher, with -w3 theta making it contact.
        let mut b = Form1::zero(&s);
        b.set(1, Jet::one(&s));
        b.set(2, u.clone());
        b.set(0, -var(&s, "w3"));
        b.set(3, -var(&s, "w4") + var(&s, "w2"));
        let (_, b1) = normalize_linear_part(&b, &opts(&s)).unwrap();
        let z0 = b1.on_zero_section();
        assert!((z0.coeff(1) - &Jet::one(&s)).max_abs() < 1e-14);
        assert!(z0.coeff(2).max_abs() < 1e-14);
        let dec = normalize(&b, &opts(&s)).unwrap();
        assert!(dec.round_trip_residual(&b).unwrap() < TOL_ROUNDTRIP);
        assert!(dec.soundness_residual().unwrap() < TOL_SOUNDNESS);
    }

    #[test]
    fn shear_pair_stage() {
        let s = space(&["z", "w2", "w3", "w4"], 2);
        let mut b = Form1::zero(&s);
        b.set(1, Jet::one(&s));
        b.set(0, -var(&s, "w2"));
        b.set(4, var(&s, "w3"));
        b.set(3, var(&s, "w4").scale(c(2.0)));
        let dec = normalize(&b, &opts(&s)).unwrap();
        assert!(dec.stages.iter().any(|st| st.shear_norm > 0.0));
        assert!(dec.remainder.max_abs() < 1e-14);
        assert!(dec.round_trip_residual(&b).unwrap() < TOL_ROUNDTRIP);
    }

    #[test]
    fn exact_pair_term_is_not_contact() {
        let s = space(&["z", "w2", "w3", "w4"], 2);
        let mut b = Form1::zero(&s);
        b.set(1, Jet::one(&s));
        b.set(0, -var(&s, "w2"));
        b.set(4, var(&s, "w3"));
        b.set(3, var(&s, "w4"));
        assert!(matches!(normalize(&b, &opts(&s)), Err(Error::NotContact { .. })));
    }

    #[test]
    fn z_term_lands_in_clause_a() {
        let s = space(&["z", "w2"], 3);
        let mut b = Form1::zero(&s);
        b.set(1, Jet::one(&s));
        b.set(0, -var(&s, "w2"));
        b.set(2, &var(&s, "z") * &var(&s, "w2"));
        let dec = normalize(&b, &opts(&s)).unwrap();
        assert_eq!(dec.discards.len(), 1);
        assert_eq!(dec.discards[0].clause, Clause::A);
        assert!(dec.soundness_residual().unwrap() < TOL_SOUNDNESS);
    }

    #[test]
    fn theta_on_zero_section_is_rejected() {
        let s = space(&["z", "w2"], 2);
        let mut b = Form1::zero(&s);
        b.set(1, Jet::one(&s));
        b.set(0, Jet::one(&s));
        assert!(matches!(normalize(&b, &opts(&s)), Err(Error::NotIsotropic { .. })));
    }
}
