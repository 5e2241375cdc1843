//! Moser's method on jets: `V_t = h_t Theta_t + Y_t` with
//! `beta - alpha + d h_t + Y_t -| d alpha_t = 0`, integrated by RK4.
//!
//! All solves run one fiber degree above the problem degree `d`; residuals are
//! certified on fiber degrees `<= d - 1`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{contact_check, default_samples, reeb_field, solve_bordered, Form1, VectorField, TOL_CONTACT};
use crate::series::{invert_unit, relabel_one, CoordinateChange, Jet, JetSpace};

pub const DEFAULT_T_STEPS: usize = 100;
pub const TOL_ZERO_SECTION: f64 = 1e-12;
pub const TOL_PDE: f64 = 1e-11;
pub const TOL_TANGENT: f64 = 1e-9;
pub const TOL_LINEARIZATION: f64 = 1e-11;
/// Growth of the RK4 increment over its running maximum that counts as divergence.
pub const DIVERGENCE_GROWTH: f64 = 1e3;

fn lift(space: &Arc<JetSpace>, f: &Form1) -> Result<Form1> {
    Form1::from_coeffs(space, f.coeffs().iter().map(|c| relabel_one(c, space)).collect())
}

fn project(space: &Arc<JetSpace>, j: &Jet) -> Jet {
    relabel_one(&j.truncate_degree(space.degree()), space)
}

/// `alpha_t = alpha + t (beta - alpha)` on the working space.
#[derive(Clone, Debug)]
pub struct MoserProblem {
    pub alpha: Form1,
    pub beta: Form1,
    pub n: usize,
    pub t_steps: usize,
    /// Problem degree `d`; the working space has degree `d + 1`.
    pub degree: usize,
    space: Arc<JetSpace>,
    work: Arc<JetSpace>,
    alpha_w: Form1,
    gamma_w: Form1,
    z: usize,
}

impl MoserProblem {
    pub fn new(alpha: &Form1, beta: &Form1, n: usize, t_steps: usize) -> Result<Self> {
        let space = alpha.space().clone();
        if !beta.space().same_as(&space) {
            return Err(Error::Structural("alpha and beta must share a jet space".into()));
        }
        if t_steps == 0 {
            return Err(Error::Precondition("t_steps must be positive".into()));
        }
        if space.degree() < 1 {
            return Err(Error::Precondition("Moser needs fiber degree at least 1".into()));
        }
        let gamma = beta.sub(alpha)?;
        let g0 = gamma.on_zero_section().max_abs();
        if g0 > TOL_ZERO_SECTION {
            return Err(Error::Precondition(format!(
                "beta - alpha must vanish on the zero section (found {g0:e})"
            )));
        }
        let samples = default_samples(&space);
        for t in [0.0, 0.5, 1.0] {
            let at = alpha.add(&gamma.scale(Complex64::new(t, 0.0)))?;
            contact_check(&at, n, &samples, TOL_CONTACT)?;
        }
        let z = space.fiber_var("z").unwrap_or(0);
        let work = space.with_truncation(space.degree() + 1, space.window())?;
        Ok(Self {
            alpha_w: lift(&work, alpha)?,
            gamma_w: lift(&work, &gamma)?,
            alpha: alpha.clone(),
            beta: beta.clone(),
            n,
            t_steps,
            degree: space.degree(),
            space,
            work,
            z,
        })
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn working_space(&self) -> &Arc<JetSpace> {
        &self.work
    }

    /// `alpha_t` on the working space.
    pub fn alpha_t(&self, t: f64) -> Result<Form1> {
        self.alpha_w.add(&self.gamma_w.scale(Complex64::new(t, 0.0)))
    }

    fn z_slot(&self) -> usize {
        self.work.base_dim() + self.z
    }
}

/// Solves `Theta(h) = rhs`, `h|_{z=0} = 0`. With `Theta = a (d/dz + M)`, `a`
/// a unit and `M` free of `d/dz`, the sweep `h <- I_z(rhs / a - M h)` fixes one
/// more power of `z` each time.
pub fn solve_transport(theta: &VectorField, rhs: &Jet, z_slot: usize) -> Result<Jet> {
    let space = rhs.space().clone();
    let zv = z_slot - space.base_dim();
    let a = theta.comp(z_slot);
    let inv = invert_unit(a).map_err(|_| Error::NotContact {
        witness: "z = 0 is characteristic for the Reeb field".into(),
        value: a.degree_part(0).max_abs(),
    })?;
    let mut lead: Vec<Jet> = theta.comps().iter().map(|c| c * &inv).collect();
    lead[z_slot] = Jet::zero(&space);
    let mfield = VectorField::from_comps(&space, lead)?;
    let target = rhs * &inv;
    let mut h = target.integrate_fiber(zv);
    for _ in 0..=space.degree() {
        let next = (&target - &mfield.apply(&h)).integrate_fiber(zv);
        if next.max_diff(&h) == 0.0 {
            break;
        }
        h = next;
    }
    Ok(h)
}

/// Diagnostics of one evaluation of `V_t`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct FieldDiagnostics {
    pub pde_residual: f64,
    pub y_residual: f64,
    pub y_tangency: f64,
    pub lambda: f64,
    pub zero_section: f64,
    pub linear_part: f64,
}

/// `h_t` from the transport equation `Theta_t(h) = Theta_t -| (alpha - beta)`.
pub fn solve_h(problem: &MoserProblem, t: f64) -> Result<Jet> {
    let at = problem.alpha_t(t)?;
    let theta = reeb_field(&at)?;
    let rhs = -problem.gamma_w.eval(&theta);
    solve_transport(&theta, &rhs, problem.z_slot())
}

/// `Y_t` with `alpha_t(Y) = 0` and `Y -| d alpha_t = -rho`.
pub fn solve_y(alpha_t: &Form1, rho: &Form1) -> Result<(VectorField, Jet)> {
    let space = alpha_t.space();
    solve_bordered(alpha_t, &alpha_t.d(), &rho.scale(Complex64::new(-1.0, 0.0)), &Jet::zero(space))
}

/// Right-hand side split `gamma = d F + eta` used by the field at time `t`.
#[derive(Clone, Debug)]
enum Gauge {
    /// `h_t|_{z=0} = 0`.
    Standard,
    /// `h_t = -F + h~_t` with `F` the fiber-radial primitive of `gamma`.
    Tangent { f: Jet, eta: Form1 },
}

fn field(problem: &MoserProblem, gauge: &Gauge, t: f64) -> Result<(VectorField, FieldDiagnostics)> {
    let at = problem.alpha_t(t)?;
    let theta = reeb_field(&at)?;
    let cert = problem.degree.saturating_sub(1);
    let (h, rho) = match gauge {
        Gauge::Standard => {
            let rhs = -problem.gamma_w.eval(&theta);
            let h = solve_transport(&theta, &rhs, problem.z_slot())?;
            let rho = problem.gamma_w.add(&Form1::differential(&h))?;
            (h, rho)
        }
        Gauge::Tangent { f, eta } => {
            let rhs = -eta.eval(&theta);
            let ht = solve_transport(&theta, &rhs, problem.z_slot())?;
            let rho = eta.add(&Form1::differential(&ht))?;
            (&ht - f, rho)
        }
    };
    let pde_residual = (&theta.apply(&h) + &problem.gamma_w.eval(&theta)).max_abs_upto(cert);
    let (y, lambda) = solve_y(&at, &rho)?;
    let y_residual = rho.add(&at.d().contract(&y))?.max_abs_upto(cert);
    let y_tangency = at.eval(&y).max_abs_upto(cert);
    let v = theta.scale_jet(&h).add(&y);
    let zero_section = v.comps().iter().map(|c| c.degree_part(0).max_abs()).fold(0.0, f64::max);
    let linear_part = v.comps().iter().map(|c| c.degree_part(1).max_abs()).fold(0.0, f64::max);
    // The zero section is fixed exactly; the dropped part is reported.
    let v = VectorField::from_comps(
        v.space(),
        v.comps().iter().map(|c| c.filter_fiber(|_, deg| deg > 0)).collect(),
    )?;
    Ok((
        v,
        FieldDiagnostics {
            pde_residual,
            y_residual,
            y_tangency,
            lambda: lambda.max_abs_upto(cert),
            zero_section,
            linear_part,
        },
    ))
}

/// The Moser field `V_t = h_t Theta_t + Y_t` on the working space.
pub fn moser_field(problem: &MoserProblem, t: f64) -> Result<(VectorField, FieldDiagnostics)> {
    field(problem, &Gauge::Standard, t)
}

#[derive(Clone, Debug)]
pub struct FlowJet {
    /// `(t_k, phi_{t_k})` on the problem space, `k = 0..=t_steps`.
    pub snapshots: Vec<(f64, CoordinateChange)>,
    pub final_map: CoordinateChange,
    /// `phi_1` on the working space.
    pub working: CoordinateChange,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub t_steps: usize,
    pub degree: usize,
    pub certified_degrees: Vec<usize>,
    /// Max coefficient of `phi_1^* beta - alpha` over certified degrees.
    pub residual: f64,
    /// Same on the top slice `d`, which truncation corrupts.
    pub top_slice_residual: f64,
    pub truncation_dominated: bool,
    pub max_pde_residual: f64,
    pub max_y_residual: f64,
    pub max_lambda: f64,
    /// Largest zero-section part of `V_t` over all evaluations.
    pub max_zero_section: f64,
    /// Largest zero-section part of `phi_t - id` over all steps.
    pub fixes_zero_section: f64,
    /// Largest fiber-degree-1 part of `phi_1 - id`.
    pub linearization_defect: f64,
}

fn velocity(problem: &MoserProblem, v: &VectorField, phi: &CoordinateChange) -> Result<Vec<Jet>> {
    let work = &problem.work;
    let m = work.base_dim();
    let mut out = Vec::with_capacity(work.slots());
    for slot in 0..work.slots() {
        let c = v.comp(slot);
        let coord = if slot < m {
            // du/dt = V^theta / g(u).
            let th = work.theta(slot);
            c.mul_base_monomial(slot, -th.power, th.coeff.inv())
        } else {
            c.clone()
        };
        out.push(phi.substitute(&coord)?);
    }
    Ok(out)
}

fn components(phi: &CoordinateChange) -> Vec<Jet> {
    phi.base_shift().iter().chain(phi.fiber()).cloned().collect()
}

fn from_components(template: &CoordinateChange, comps: Vec<Jet>) -> Result<CoordinateChange> {
    let m = template.source().base_dim();
    let mut comps = comps;
    let fiber = comps.split_off(m);
    template.with_components(comps, fiber)
}

fn axpy(base: &[Jet], h: f64, k: &[Jet]) -> Vec<Jet> {
    base.iter().zip(k).map(|(a, b)| a + &b.scale_re(h)).collect()
}

fn integrate(problem: &MoserProblem, gauge: &Gauge) -> Result<(FlowJet, FieldDiagnostics, f64)> {
    let work = problem.work.clone();
    let id = CoordinateChange::identity(&work).labeled("moser flow");
    let mut phi = id.clone();
    let steps = problem.t_steps;
    let dt = 1.0 / steps as f64;
    let mut diag = FieldDiagnostics::default();
    let mut fixes = 0.0f64;
    let mut snapshots = vec![(0.0, project_change(problem, &phi)?)];
    let mut track = |d: &FieldDiagnostics| {
        diag.pde_residual = diag.pde_residual.max(d.pde_residual);
        diag.y_residual = diag.y_residual.max(d.y_residual);
        diag.y_tangency = diag.y_tangency.max(d.y_tangency);
        diag.lambda = diag.lambda.max(d.lambda);
        diag.zero_section = diag.zero_section.max(d.zero_section);
        diag.linear_part = diag.linear_part.max(d.linear_part);
    };
    let mut cache: Option<(f64, VectorField)> = None;
    let mut eval_field = |t: f64, track: &mut dyn FnMut(&FieldDiagnostics)| -> Result<VectorField> {
        if let Some((tc, v)) = &cache {
            if *tc == t {
                return Ok(v.clone());
            }
        }
        let (v, d) = field(problem, gauge, t)?;
        track(&d);
        cache = Some((t, v.clone()));
        Ok(v)
    };
    let mut max_incr = 0.0f64;
    for step in 0..steps {
        let t = step as f64 * dt;
        let y0 = components(&phi);
        let v1 = eval_field(t, &mut track)?;
        let k1 = velocity(problem, &v1, &phi)?;
        let vm = eval_field(t + 0.5 * dt, &mut track)?;
        let p2 = from_components(&id, axpy(&y0, 0.5 * dt, &k1))?;
        let k2 = velocity(problem, &vm, &p2)?;
        let p3 = from_components(&id, axpy(&y0, 0.5 * dt, &k2))?;
        let k3 = velocity(problem, &vm, &p3)?;
        let v4 = eval_field(t + dt, &mut track)?;
        let p4 = from_components(&id, axpy(&y0, dt, &k3))?;
        let k4 = velocity(problem, &v4, &p4)?;
        let incr: Vec<Jet> = (0..y0.len())
            .map(|i| (&(&k1[i] + &k2[i].scale_re(2.0)) + &(&k3[i].scale_re(2.0) + &k4[i])).scale_re(dt / 6.0))
            .collect();
        let size = incr.iter().map(Jet::max_abs).fold(0.0, f64::max);
        if !size.is_finite() || (max_incr > 0.0 && size > DIVERGENCE_GROWTH * max_incr) {
            return Err(Error::FlowDiverged { step });
        }
        max_incr = max_incr.max(size);
        let next: Vec<Jet> = y0.iter().zip(&incr).map(|(a, b)| a + b).collect();
        phi = from_components(&id, next)?;
        let z0 = components(&phi)
            .iter()
            .zip(components(&id))
            .map(|(a, b)| (a - &b).degree_part(0).max_abs())
            .fold(0.0, f64::max);
        fixes = fixes.max(z0);
        snapshots.push(((step + 1) as f64 * dt, project_change(problem, &phi)?));
    }
    let final_map = project_change(problem, &phi)?;
    Ok((
        FlowJet {
            snapshots,
            final_map,
            working: phi,
        },
        diag,
        fixes,
    ))
}

fn project_change(problem: &MoserProblem, phi: &CoordinateChange) -> Result<CoordinateChange> {
    let s = &problem.space;
    CoordinateChange::new(
        s,
        s,
        phi.base_shift().iter().map(|j| project(s, j)).collect(),
        phi.fiber().iter().map(|j| project(s, j)).collect(),
    )
    .map(|c| c.labeled(phi.label()))
}

/// RK4 flow of the Moser field over `[0, 1]`.
pub fn integrate_flow(problem: &MoserProblem) -> Result<FlowJet> {
    Ok(integrate(problem, &Gauge::Standard)?.0)
}

fn verify(problem: &MoserProblem, flow: &FlowJet, diag: &FieldDiagnostics, fixes: f64) -> Result<VerificationReport> {
    let d = problem.degree;
    let beta_w = problem.alpha_w.add(&problem.gamma_w)?;
    let diff = beta_w.pullback(&flow.working)?.sub(&problem.alpha_w)?;
    let cert = d.saturating_sub(1);
    let residual = diff.max_abs_upto(cert);
    let top_slice_residual = diff
        .coeffs()
        .iter()
        .map(|c| c.degree_part(d).max_abs())
        .fold(0.0, f64::max);
    let id = CoordinateChange::identity(&problem.work);
    let linearization_defect = components(&flow.working)
        .iter()
        .zip(components(&id))
        .map(|(a, b)| (a - &b).degree_part(1).max_abs())
        .fold(0.0, f64::max);
    Ok(VerificationReport {
        t_steps: problem.t_steps,
        degree: d,
        certified_degrees: (0..=cert).collect(),
        residual,
        top_slice_residual,
        truncation_dominated: top_slice_residual > 10.0 * residual.max(1e-300),
        max_pde_residual: diag.pde_residual,
        max_y_residual: diag.y_residual.max(diag.y_tangency),
        max_lambda: diag.lambda,
        max_zero_section: diag.zero_section,
        fixes_zero_section: fixes,
        linearization_defect,
    })
}

/// Flow `phi_1` with `phi_1^* beta = alpha` and its verification.
pub fn moser_normalize(beta: &Form1, alpha: &Form1, n: usize, t_steps: usize) -> Result<(FlowJet, VerificationReport)> {
    let problem = MoserProblem::new(alpha, beta, n, t_steps)?;
    let (flow, diag, fixes) = integrate(&problem, &Gauge::Standard)?;
    let report = verify(&problem, &flow, &diag, fixes)?;
    Ok((flow, report))
}

/// Fiber-radial primitive `F = int_0^1 gamma_(x, s zeta)(E) ds` with `E` the
/// fiber Euler field; `gamma - dF` vanishes to second order when `gamma` and
/// `d gamma` vanish on the zero section.
pub fn radial_primitive(gamma: &Form1) -> Jet {
    let space = gamma.space().clone();
    let m = space.base_dim();
    let mut f = Jet::zero(&space);
    for v in 0..space.fiber_dim() {
        let c = gamma.coeff(m + v);
        let mut scaled = Jet::zero(&space).with_truncated(c.truncated());
        for deg in 0..=space.degree() {
            let part = c.degree_part(deg);
            if !part.is_zero() {
                scaled = &scaled + &part.scale_re(1.0 / (deg + 1) as f64);
            }
        }
        f = &f + &scaled.mul_fiber_var(v);
    }
    f
}

/// Flow `psi` with `psi^* beta = alpha` and identity linearization along the
/// zero section, for `alpha = beta`, `d alpha = d beta` there.
pub fn tangent_normalize(alpha: &Form1, beta: &Form1, n: usize, t_steps: usize) -> Result<(FlowJet, VerificationReport)> {
    let gamma = beta.sub(alpha)?;
    let g0 = gamma.on_zero_section().max_abs();
    let dg0 = gamma
        .d()
        .to_kform()
        .terms()
        .values()
        .map(|c| c.degree_part(0).max_abs())
        .fold(0.0, f64::max);
    if g0 > TOL_ZERO_SECTION || dg0 > TOL_ZERO_SECTION {
        return Err(Error::HypothesisViolation(format!(
            "alpha and beta must agree to first order on the zero section (|beta - alpha| = {g0:e}, |d(beta - alpha)| = {dg0:e})"
        )));
    }
    let problem = MoserProblem::new(alpha, beta, n, t_steps)?;
    let f = radial_primitive(&problem.gamma_w);
    let eta = problem.gamma_w.sub(&Form1::differential(&f))?;
    let eta_low = eta.coeffs().iter().map(|c| c.truncate_degree(1).max_abs()).fold(0.0, f64::max);
    if eta_low > TOL_ZERO_SECTION {
        return Err(Error::HypothesisViolation(format!(
            "radial remainder does not vanish to second order ({eta_low:e})"
        )));
    }
    let (flow, diag, fixes) = integrate(&problem, &Gauge::Tangent { f, eta })?;
    let report = verify(&problem, &flow, &diag, fixes)?;
    Ok((flow, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ThetaSpec;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn setup(d: usize) -> (Arc<JetSpace>, Form1) {
        let s = JetSpace::curve(ThetaSpec::DU, &["z", "y1"], d, (-3, 3)).unwrap();
        let mut a = Form1::zero(&s);
        a.set(1, Jet::one(&s));
        a.set(0, -Jet::var(&s, "y1").unwrap());
        (s, a)
    }

    fn v(s: &Arc<JetSpace>, name: &str) -> Jet {
        Jet::var(s, name).unwrap()
    }

    #[test]
    fn transport_examples() {
        let s = JetSpace::curve(ThetaSpec::DU, &["z", "y1"], 4, (-3, 3)).unwrap();
        let dz = VectorField::basis(&s, 1);
        let y = v(&s, "y1");
        let h = solve_transport(&dz, &(&y * &y), 1).unwrap();
        assert!(h.max_diff(&(&v(&s, "z") * &(&y * &y))) < 1e-15);
        let cu = Jet::base_monomial(&s, 0, 2, c(3.0));
        let h = solve_transport(&dz, &(&v(&s, "z") * &cu), 1).unwrap();
        let want = (&(&v(&s, "z") * &v(&s, "z")) * &cu).scale_re(0.5);
        assert!(h.max_diff(&want) < 1e-15);
    }

    #[test]
    fn identity_when_equal() {
        let (_, a) = setup(3);
        let (flow, rep) = moser_normalize(&a, &a, 1, 10).unwrap();
        assert!(flow.final_map.max_diff(&CoordinateChange::identity(a.space())) == 0.0);
        assert_eq!(rep.residual, 0.0);
    }

    #[test]
    fn y_solve_identities() {
        let (s, a) = setup(3);
        let rho = Form1::differential(&v(&s, "y1"));
        let (y, lambda) = solve_y(&a, &rho).unwrap();
        assert!(rho.add(&a.d().contract(&y)).unwrap().max_abs() < 1e-11 + lambda.max_abs());
        assert!(a.eval(&y).max_abs() < 1e-11);
        // Theta -| rho = 0 here, so the kernel component vanishes.
        assert!(lambda.max_abs() < 1e-14);
        assert!(y.comp(0).degree_part(0).max_diff(&Jet::constant(&s, c(-1.0))) < 1e-14);
    }

    #[test]
    fn small_remainder_flow() {
        let (s, a) = setup(3);
        let rem = (&v(&s, "z") * &v(&s, "y1")).scale_re(1e-2);
        let mut b = a.clone();
        b.add_term(2, &rem);
        let (flow, rep) = moser_normalize(&b, &a, 1, 20).unwrap();
        assert!(rep.residual < 1e-9, "{rep:?}");
        assert!(rep.fixes_zero_section < 1e-12);
        assert!(flow.final_map.fixes_zero_section(1e-12));
    }

    #[test]
    fn tangent_variant() {
        let (s, a) = setup(4);
        let z = v(&s, "z");
        let y = v(&s, "y1");
        let q = &(&z * &z) * &(&y * &y);
        let b = a.add(&Form1::differential(&q)).unwrap();
        let (_, rep) = tangent_normalize(&a, &b, 1, 20).unwrap();
        assert!(rep.residual < TOL_TANGENT, "{rep:?}");
        assert!(rep.linearization_defect < TOL_LINEARIZATION);
        let mut bad = a.clone();
        bad.add_term(0, &z);
        assert!(matches!(tangent_normalize(&a, &bad, 1, 20), Err(Error::HypothesisViolation(_))));
    }
}
