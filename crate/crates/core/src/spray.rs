//! Holomorphic Legendrian sprays with core the zero section of `M x C^2`,
//! for the model form `alpha = dz - y theta`.
//!
//! A spray member is `H(x, xi) = (phi[xi_1 h_1](x), y~(x), z~(x))` with
//! `y~ = xi_2 h_2 + xi_3 h_1 + sum_k zeta_k g_k` and `z~ = int_p^x y~ phi^* theta`,
//! where `zeta(xi)` solves the period-vanishing equation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legendrian::{Component, LegendrianMap};
use crate::series::{path_integral, LaurentSeries, PathSpec, ThetaSpec, TOL_QUAD};
use crate::surfaces::{flow_map, theta_pullback, theta_pullback_series, FlowKind, SurfaceModel, DEFAULT_CLEARANCE};

/// Tolerance of the residue constraint (i) and the arc constraint (iv).
pub const TOL_INTEGRAL: f64 = 1e-10;
/// Tolerance of the point constraints (iii).
pub const TOL_POINT: f64 = 1e-12;
/// Relative margin of the inequality constraints (ii) and (v).
pub const MARGIN: f64 = 0.05;
/// Sample count for a posteriori sup checks on paths.
pub const PATH_SAMPLES: usize = 512;
/// Target of `sup_C |h|` as a fraction of `mu`.
pub const CONTROL_TARGET: f64 = 0.8;
/// Prescribed loop period of `h_1` and `h_2` as a fraction of `mu`, in units of
/// `2 pi i a r^{k+1}` for `theta = a u^k du` and the loop `|u| = r`.
pub const LOOP_MEAN: f64 = 0.4;
/// Pullback residual every emitted map must meet.
pub const TOL_SPRAY_LEG: f64 = 1e-9;
/// Finite-difference step of the submersivity Jacobian.
pub const SUBMERSIVITY_STEP: f64 = 1e-5;
/// Below this `|det|` the differential at `q` counts as singular.
pub const TOL_SINGULAR: f64 = 1e-9;
/// Ridge applied to the coefficient norm when minimizing on an arc.
const ARC_RIDGE: f64 = 1e-8;
/// Half-width of the pullback window on non-exact (flow, theta) pairs.
const PULLBACK_WINDOW: i32 = 64;

fn c(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonOptions {
    #[serde(default = "default_newton_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

fn default_newton_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    50
}
fn default_fd_step() -> f64 {
    1e-6
}
fn default_window() -> i32 {
    6
}
fn default_enlarged() -> i32 {
    24
}
fn default_k() -> f64 {
    50.0
}
fn default_radius() -> f64 {
    1e-3
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: default_newton_tol(),
            max_iter: default_max_iter(),
            fd_step: default_fd_step(),
        }
    }
}

/// Data of a single `(p, q)` spray.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SprayConfig {
    pub model: SurfaceModel,
    pub p: [f64; 2],
    pub q: [f64; 2],
    /// Arc `E` from `p` to `q`, disjoint from the loops.
    pub arc: PathSpec,
    pub mu: f64,
    #[serde(default)]
    pub newton: NewtonOptions,
    #[serde(default = "default_radius")]
    pub xi_radius: f64,
    /// Laurent window `[-w, w]` of the control ansatz.
    #[serde(default = "default_window")]
    pub window: i32,
    /// Window used on the single enlargement retry.
    #[serde(default = "default_enlarged")]
    pub enlarged_window: i32,
    /// Bound `|zeta'(0)| <= k mu`.
    #[serde(default = "default_k")]
    pub k_bound: f64,
}

impl SprayConfig {
    /// Annulus `0.5 < |u| < 1` with `theta = du/u`, the Euler field, loop `|u| = 0.56`
    /// and `E` the arc of `|u| = 0.93` from argument 0 to 1.6.
    pub fn default_scene(mu: f64) -> Result<Self> {
        let model = SurfaceModel::annulus(0.5, 1.0, ThetaSpec::DU_OVER_U, FlowKind::Euler)?.with_loops(vec![0.56])?;
        let (r, a) = (0.93, 1.6);
        let q = Complex64::from_polar(r, a);
        Ok(Self {
            model,
            p: [r, 0.0],
            q: pair(q),
            arc: PathSpec::arc(Complex64::new(0.0, 0.0), r, 0.0, a).labeled("E"),
            mu,
            newton: NewtonOptions::default(),
            xi_radius: default_radius(),
            window: default_window(),
            enlarged_window: default_enlarged(),
            k_bound: default_k(),
        })
    }

    pub fn p(&self) -> Complex64 {
        c(self.p)
    }

    pub fn q(&self) -> Complex64 {
        c(self.q)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.model.is_polydisc() {
            return Err(Error::Scene("sprays are defined on curve models".into()));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::Scene("mu must be positive".into()));
        }
        if !(self.xi_radius.is_finite() && self.xi_radius > 0.0) {
            return Err(Error::Scene("xi_radius must be positive".into()));
        }
        if self.window < 1 || self.enlarged_window < self.window {
            return Err(Error::Scene("control windows must satisfy 1 <= window <= enlarged_window".into()));
        }
        let (p, q) = (self.p(), self.q());
        if (p - q).norm() < 1e-9 {
            return Err(Error::Scene("spray points p and q coincide".into()));
        }
        if (self.arc.start() - p).norm() > 1e-12 || (self.arc.end() - q).norm() > 1e-12 {
            return Err(Error::Scene("arc E must run from p to q".into()));
        }
        self.model.check_arc(&self.arc, DEFAULT_CLEARANCE)?;
        Ok(())
    }
}

/// Result of checking one of the conditions (i)-(v).
#[derive(Clone, Debug, Serialize)]
pub struct ConditionCertificate {
    pub condition: &'static str,
    /// Worst attained defect (equalities) or sup (inequalities).
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ControlFunctions {
    pub g: Vec<LaurentSeries>,
    pub h1: LaurentSeries,
    pub h2: LaurentSeries,
    pub window: i32,
    pub ridge_h1: f64,
    pub ridge_h2: f64,
    pub certificates: Vec<ConditionCertificate>,
}

impl ControlFunctions {
    pub fn all_passed(&self) -> bool {
        self.certificates.iter().all(|c| c.passed)
    }
}

/// Laurent ansatz `sum_n c_n (u / rho)^n` over the exponents `lo..=hi`.
struct Ansatz {
    lo: i32,
    hi: i32,
    rho: f64,
}

impl Ansatz {
    fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    fn exps(&self) -> impl Iterator<Item = i32> {
        self.lo..=self.hi
    }

    fn row_at(&self, u: Complex64) -> Vec<Complex64> {
        let s = u / self.rho;
        self.exps().map(|n| s.powi(n)).collect()
    }

    /// `int_{|u| = r} (u/rho)^n theta` for `theta = a u^k du` about the origin.
    fn loop_row(&self, theta: ThetaSpec) -> Vec<Complex64> {
        self.exps()
            .map(|n| {
                if n + theta.power == -1 {
                    theta.coeff * Complex64::new(0.0, 2.0 * PI) * self.rho.powi(-n)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    /// `int_E (u/rho)^n theta` by exact primitives, tracking the logarithm along `E`.
    fn arc_row(&self, theta: ThetaSpec, arc: &PathSpec) -> Vec<Complex64> {
        let pts = arc.sample(4096);
        let (a, b) = (pts[0], *pts.last().unwrap());
        let mut log = Complex64::new(0.0, 0.0);
        for w in pts.windows(2) {
            log += (w[1] / w[0]).ln();
        }
        self.exps()
            .map(|n| {
                let m = n + theta.power;
                let prim = if m == -1 {
                    log
                } else {
                    (b.powi(m + 1) - a.powi(m + 1)) / f64::from(m + 1)
                };
                theta.coeff * prim * self.rho.powi(-n)
            })
            .collect()
    }

    /// Diagonal Gram weight of `(u/rho)^n` on the circle `|u| = r`.
    fn circle_weights(&self, r: f64) -> Vec<f64> {
        self.exps().map(|n| (r / self.rho).powi(2 * n)).collect()
    }

    fn series(&self, coeffs: &DVector<Complex64>) -> LaurentSeries {
        let terms: Vec<(i32, Complex64)> = self
            .exps()
            .zip(coeffs.iter())
            .map(|(n, c)| (n, c * self.rho.powi(-n)))
            .collect();
        LaurentSeries::from_terms("u", &terms)
    }
}

/// Minimizes `c^* G c` subject to `A c = b`.
fn min_norm(gram: &DMatrix<Complex64>, a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let lu = gram.clone().lu();
    let x = lu
        .solve(&a.adjoint())
        .ok_or_else(|| Error::ControlSynthesisFailure {
            condition: "gram",
            detail: "objective is singular".into(),
        })?;
    let s = a * &x;
    let nu = s.clone().lu().solve(b).ok_or_else(|| Error::ControlSynthesisFailure {
        condition: "constraints",
        detail: "equality constraints are dependent".into(),
    })?;
    let mut c = &x * nu;
    // One refinement step on the equality residual.
    let r = b - a * &c;
    if let Some(d) = s.lu().solve(&r) {
        c += &x * d;
    }
    Ok(c)
}

fn constraint_matrix(rows: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

fn sup_on(f: &LaurentSeries, path: &PathSpec) -> f64 {
    path.sample(PATH_SAMPLES)
        .into_iter()
        .chain([path.end()])
        .map(|u| f.eval(u).norm())
        .fold(0.0, f64::max)
}

fn sup_on_loops(f: &LaurentSeries, loops: &[PathSpec]) -> f64 {
    loops.iter().map(|c| sup_on(f, c)).fold(0.0, f64::max)
}

/// Controls for one window, or the name of the violated inequality.
fn synthesize(cfg: &SprayConfig, w: i32) -> Result<std::result::Result<ControlFunctions, (&'static str, String)>> {
    let model = &cfg.model;
    let theta = model.theta;
    let (lo, hi) = model.window(w);
    let loops = model.loop_paths();
    let rho = loops.first().map_or(model.sample_radius(), |_| model.loops[0]);
    let ans = Ansatz { lo, hi, rho };
    let n = ans.len();
    let (p, q) = (cfg.p(), cfg.q());
    let (r_lo, r_hi) = model.compact_radii();

    // Objective: L2 on the loops plus lambda times L2 on the boundary of M.
    let loop_w: Vec<f64> = model.loops.iter().fold(vec![0.0; n], |acc, &r| {
        acc.iter().zip(ans.circle_weights(r)).map(|(a, b)| a + b).collect()
    });
    let mut bdry_w = ans.circle_weights(r_hi);
    if r_lo > 0.0 {
        for (b, x) in bdry_w.iter_mut().zip(ans.circle_weights(r_lo)) {
            *b += x;
        }
    }
    let gram_at = |lambda: f64| {
        let d: Vec<Complex64> = loop_w
            .iter()
            .zip(&bdry_w)
            .map(|(a, b)| Complex64::new(a + lambda * b, 0.0))
            .collect();
        DMatrix::from_diagonal(&DVector::from_vec(d))
    };
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let arc_row = ans.arc_row(theta, &cfg.arc);

    let mut h1_rows = vec![ans.row_at(p), ans.row_at(q)];
    let mut h1_rhs = vec![zero, one];
    let mut h2_rows = vec![ans.row_at(p), ans.row_at(q), arc_row.clone()];
    let mut h2_rhs = vec![zero, zero, -one];
    if let Some(&r) = model.loops.first() {
        let period = theta.coeff * Complex64::new(0.0, 2.0 * PI) * r.powi(theta.power + 1);
        let row = ans.loop_row(theta);
        h1_rows.push(row.clone());
        h1_rhs.push(period * (LOOP_MEAN * cfg.mu));
        h2_rows.push(row);
        h2_rhs.push(period * (LOOP_MEAN * cfg.mu));
    }
    let h1_a = constraint_matrix(&h1_rows);
    let h1_b = DVector::from_vec(h1_rhs);
    let h2_a = constraint_matrix(&h2_rows);
    let h2_b = DVector::from_vec(h2_rhs);

    let target = CONTROL_TARGET * cfg.mu;
    let accept = (1.0 - MARGIN) * cfg.mu;
    let fit = |a: &DMatrix<Complex64>, b: &DVector<Complex64>| -> Result<Option<(LaurentSeries, f64)>> {
        let solve = |lambda: f64| -> Result<(LaurentSeries, f64)> {
            let s = ans.series(&min_norm(&gram_at(lambda), a, b)?);
            let sup = sup_on_loops(&s, &loops);
            Ok((s, sup))
        };
        if loops.is_empty() {
            return Ok(Some((solve(1.0)?.0, 1.0)));
        }
        let (mut lo_l, mut hi_l) = (-14.0_f64, 8.0_f64);
        let (s_lo, sup_lo) = solve(10f64.powf(lo_l))?;
        if sup_lo > accept {
            return Ok(None);
        }
        if sup_lo > target {
            return Ok(Some((s_lo, 10f64.powf(lo_l))));
        }
        let top = solve(10f64.powf(hi_l))?;
        if top.1 <= target {
            return Ok(Some((top.0, 10f64.powf(hi_l))));
        }
        let mut best = (s_lo, 10f64.powf(lo_l));
        for _ in 0..60 {
            let mid = 0.5 * (lo_l + hi_l);
            let (s, sup) = solve(10f64.powf(mid))?;
            if sup <= target {
                best = (s, 10f64.powf(mid));
                lo_l = mid;
            } else {
                hi_l = mid;
            }
        }
        Ok(Some(best))
    };

    let Some((h1, ridge_h1)) = fit(&h1_a, &h1_b)? else {
        return Ok(Err(("v", format!("sup_C |h1| exceeds {accept:e} at window {w}"))));
    };
    let Some((h2, ridge_h2)) = fit(&h2_a, &h2_b)? else {
        return Ok(Err(("v", format!("sup_C |h2| exceeds {accept:e} at window {w}"))));
    };

    // g_k: minimal norm on E subject to the Kronecker residues and g_k(p) = 0.
    let arc_pts: Vec<Vec<Complex64>> = cfg.arc.sample(PATH_SAMPLES).into_iter().map(|u| ans.row_at(u)).collect();
    let scale = 1.0 / arc_pts.len() as f64;
    let mut gram = DMatrix::from_fn(n, n, |i, j| {
        arc_pts.iter().map(|r| r[i].conj() * r[j]).sum::<Complex64>() * scale
    });
    for i in 0..n {
        gram[(i, i)] += Complex64::new(ARC_RIDGE, 0.0);
    }
    // Shipped models have at most one generator, a circle about the origin.
    let loop_row = ans.loop_row(theta);
    let mut g = Vec::with_capacity(loops.len());
    for k in 0..loops.len() {
        let rows = constraint_matrix(&[ans.row_at(p), loop_row.clone()]);
        let gk = ans.series(&min_norm(&gram, &rows, &DVector::from_vec(vec![zero, one]))?);
        let sup = sup_on(&gk, &cfg.arc);
        if sup >= 1.0 - MARGIN {
            return Ok(Err(("ii", format!("sup_E |g{}| = {sup:.4} at window {w}", k + 1))));
        }
        g.push(gk);
    }
    let certificates = certify_controls(cfg, &g, &h1, &h2)?;
    Ok(Ok(ControlFunctions {
        g,
        h1,
        h2,
        window: w,
        ridge_h1,
        ridge_h2,
        certificates,
    }))
}

/// Recomputes (i)-(v) with adaptive quadrature and sampled sups.
pub fn certify_controls(
    cfg: &SprayConfig,
    g: &[LaurentSeries],
    h1: &LaurentSeries,
    h2: &LaurentSeries,
) -> Result<Vec<ConditionCertificate>> {
    let model = &cfg.model;
    let theta = model.theta;
    let loops = model.loop_paths();
    let (p, q) = (cfg.p(), cfg.q());
    let integral = |f: &LaurentSeries, path: &PathSpec| -> Result<Complex64> {
        Ok(path_integral(&|u| f.eval(u) * theta.density(u), path, TOL_QUAD * 1e-2)?.value)
    };
    let mut kron: f64 = 0.0;
    for (k, gk) in g.iter().enumerate() {
        for (j, cj) in loops.iter().enumerate() {
            let want = if j == k { 1.0 } else { 0.0 };
            kron = kron.max((integral(gk, cj)? - want).norm());
        }
    }
    let g_p = g.iter().map(|gk| gk.eval(p).norm()).fold(0.0, f64::max);
    let g_sup = g.iter().map(|gk| sup_on(gk, &cfg.arc)).fold(0.0, f64::max);
    let pts = [
        h1.eval(p).norm(),
        (h1.eval(q) - 1.0).norm(),
        h2.eval(p).norm(),
        h2.eval(q).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let arc = (integral(h2, &cfg.arc)? + 1.0).norm();
    let h_sup = sup_on_loops(h1, &loops).max(sup_on_loops(h2, &loops));
    let ii_bound = 1.0 - MARGIN;
    let v_bound = (1.0 - MARGIN) * cfg.mu;
    Ok(vec![
        ConditionCertificate { condition: "i", value: kron, bound: TOL_INTEGRAL, passed: kron < TOL_INTEGRAL },
        ConditionCertificate {
            condition: "ii",
            value: g_sup,
            bound: ii_bound,
            passed: g_sup < ii_bound && g_p < TOL_POINT,
        },
        ConditionCertificate { condition: "iii", value: pts, bound: TOL_POINT, passed: pts < TOL_POINT },
        ConditionCertificate { condition: "iv", value: arc, bound: TOL_INTEGRAL, passed: arc < TOL_INTEGRAL },
        ConditionCertificate { condition: "v", value: h_sup, bound: v_bound, passed: h_sup < v_bound },
    ])
}

/// Controls satisfying (i)-(v), enlarging the ansatz window once on failure.
pub fn build_controls(cfg: &SprayConfig) -> Result<ControlFunctions> {
    cfg.validate()?;
    let mut last = None;
    for w in [cfg.window, cfg.enlarged_window] {
        match synthesize(cfg, w)? {
            Ok(ctrl) => {
                if let Some(bad) = ctrl.certificates.iter().find(|c| !c.passed) {
                    last = Some((bad.condition, format!("value {:e} against bound {:e} at window {w}", bad.value, bad.bound)));
                    continue;
                }
                return Ok(ctrl);
            }
            Err(why) => last = Some(why),
        }
        if cfg.window == cfg.enlarged_window {
            break;
        }
    }
    let (condition, detail) = last.unwrap();
    Err(Error::ControlSynthesisFailure { condition, detail })
}

/// Newton outcome for `zeta(xi)`.
#[derive(Clone, Debug, Serialize)]
pub struct ZetaSolve {
    pub zeta: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
}

/// The joint evaluator: `x = phi[sum_k a_k h1_k]`, `y~ = sum_k (b_k h2_k + c_k h1_k) + sum_j zeta_j g_j`.
#[derive(Clone, Debug)]
struct Core {
    model: SurfaceModel,
    anchor: Complex64,
    g: Vec<LaurentSeries>,
    h1: Vec<LaurentSeries>,
    h2: Vec<LaurentSeries>,
    newton: NewtonOptions,
}

impl Core {
    fn params(&self) -> usize {
        3 * self.h1.len()
    }

    fn check_len(&self, xi: &[Complex64]) -> Result<()> {
        if xi.len() != self.params() {
            return Err(Error::Structural(format!("spray takes {} parameters, got {}", self.params(), xi.len())));
        }
        Ok(())
    }

    fn flow_h(&self, xi: &[Complex64]) -> LaurentSeries {
        self.h1
            .iter()
            .enumerate()
            .fold(LaurentSeries::zero("u"), |acc, (k, h)| acc.add(&h.scale(xi[3 * k])))
    }

    fn y_tilde(&self, xi: &[Complex64], zeta: &[Complex64]) -> LaurentSeries {
        let mut y = LaurentSeries::zero("u");
        for k in 0..self.h1.len() {
            y = y.add(&self.h2[k].scale(xi[3 * k + 1])).add(&self.h1[k].scale(xi[3 * k + 2]));
        }
        for (gj, zj) in self.g.iter().zip(zeta) {
            y = y.add(&gj.scale(*zj));
        }
        y
    }

    /// `P_j = int_{C_j} y~ phi[xi_1 h_1]^* theta` by quadrature.
    fn periods(&self, xi: &[Complex64], zeta: &[Complex64]) -> Result<Vec<Complex64>> {
        let pull = theta_pullback(&self.flow_h(xi), &self.model)?;
        let y = self.y_tilde(xi, zeta);
        self.model
            .loop_paths()
            .iter()
            .map(|cj| Ok(path_integral(&|u| y.eval(u) * pull(u), cj, TOL_QUAD * 1e-2)?.value))
            .collect()
    }

    fn period_jacobian(&self, xi: &[Complex64], zeta: &[Complex64], base: &[Complex64]) -> Result<DMatrix<Complex64>> {
        let ell = zeta.len();
        let step = self.newton.fd_step;
        let mut jac = DMatrix::zeros(ell, ell);
        for k in 0..ell {
            let mut z = zeta.to_vec();
            z[k] += step;
            let pk = self.periods(xi, &z)?;
            for j in 0..ell {
                jac[(j, k)] = (pk[j] - base[j]) / step;
            }
        }
        Ok(jac)
    }

    fn solve_zeta(&self, xi: &[Complex64]) -> Result<ZetaSolve> {
        self.check_len(xi)?;
        let ell = self.g.len();
        let mut zeta = vec![Complex64::new(0.0, 0.0); ell];
        if ell == 0 {
            return Ok(ZetaSolve { zeta, iterations: 0, residual: 0.0 });
        }
        let norm = |v: &[Complex64]| v.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let mut p = self.periods(xi, &zeta)?;
        let mut it = 0;
        while norm(&p) >= self.newton.tol {
            if it == self.newton.max_iter {
                return Err(Error::PeriodSolveFailure { iterations: it, residual: norm(&p) });
            }
            let jac = self.period_jacobian(xi, &zeta, &p)?;
            let rhs = DVector::from_iterator(ell, p.iter().map(|x| -x));
            let step = jac.lu().solve(&rhs).ok_or(Error::PeriodSolveFailure {
                iterations: it,
                residual: norm(&p),
            })?;
            for k in 0..ell {
                zeta[k] += step[k];
            }
            p = self.periods(xi, &zeta)?;
            it += 1;
            if !norm(&p).is_finite() {
                return Err(Error::PeriodSolveFailure { iterations: it, residual: f64::INFINITY });
            }
        }
        Ok(ZetaSolve { zeta, iterations: it, residual: norm(&p) })
    }

    fn map_with(&self, xi: &[Complex64], zeta: &[Complex64]) -> Result<LegendrianMap> {
        let h = self.flow_h(xi);
        let flow = flow_map(&h, &self.model)?;
        let (lo, hi) = self.model.window(PULLBACK_WINDOW);
        let pull = theta_pullback_series(&h, &self.model, lo, hi)?;
        let y = self.y_tilde(xi, zeta);
        let (prim, _) = y.mul(&pull).trimmed().antiderivative();
        let z = prim.sub(&LaurentSeries::constant("u", prim.eval(self.anchor))).trimmed();
        let x = Component::sampled(move |u| (flow.eval(u), flow.derivative(u)));
        LegendrianMap::new(self.model.clone(), vec![x], vec![Component::Series(y.trimmed())], Component::Series(z))
    }

    fn evaluate(&self, xi: &[Complex64]) -> Result<LegendrianMap> {
        let sol = self.solve_zeta(xi)?;
        self.map_with(xi, &sol.zeta)
    }

    /// `d zeta / d xi_k` at 0 by central differences.
    fn zeta_derivative(&self) -> Result<DMatrix<Complex64>> {
        let step = self.newton.fd_step;
        let (ell, n) = (self.g.len(), self.params());
        let mut d = DMatrix::zeros(ell, n);
        for k in 0..n {
            let mut xp = vec![Complex64::new(0.0, 0.0); n];
            xp[k] = Complex64::new(step, 0.0);
            let xm: Vec<Complex64> = xp.iter().map(|x| -x).collect();
            let (zp, zm) = (self.solve_zeta(&xp)?.zeta, self.solve_zeta(&xm)?.zeta);
            for j in 0..ell {
                d[(j, k)] = (zp[j] - zm[j]) / (2.0 * step);
            }
        }
        Ok(d)
    }

    /// Central-difference differential of `H(u, .)` at 0, rows `(x, y, z)`.
    fn point_jacobian(&self, u: Complex64, step: f64) -> Result<DMatrix<Complex64>> {
        let n = self.params();
        let mut j = DMatrix::zeros(3, n);
        for k in 0..n {
            let mut xp = vec![Complex64::new(0.0, 0.0); n];
            xp[k] = Complex64::new(step, 0.0);
            let xm: Vec<Complex64> = xp.iter().map(|x| -x).collect();
            let (fp, fm) = (self.evaluate(&xp)?.eval(u), self.evaluate(&xm)?.eval(u));
            for r in 0..3 {
                j[(r, k)] = (fp[r] - fm[r]) / (2.0 * step);
            }
        }
        Ok(j)
    }
}

/// A single `(p, q)` spray.
#[derive(Clone, Debug)]
pub struct SprayFamily {
    pub config: SprayConfig,
    pub controls: ControlFunctions,
    core: Core,
}

/// `P(xi, zeta)` for a built spray.
pub fn period_map(spray: &SprayFamily, xi: [Complex64; 3], zeta: &[Complex64]) -> Result<Vec<Complex64>> {
    if zeta.len() != spray.controls.g.len() {
        return Err(Error::Structural("zeta has the wrong length".into()));
    }
    spray.core.periods(&xi, zeta)
}

/// Newton solution of the period-vanishing equation.
pub fn solve_periods(spray: &SprayFamily, xi: [Complex64; 3]) -> Result<ZetaSolve> {
    let r = xi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if r > spray.config.xi_radius * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "|xi| = {r:e} exceeds the spray radius {:e}",
            spray.config.xi_radius
        )));
    }
    spray.core.solve_zeta(&xi)
}

pub fn build_spray(cfg: &SprayConfig) -> Result<SprayFamily> {
    let controls = build_controls(cfg)?;
    Ok(SprayFamily {
        core: Core {
            model: cfg.model.clone(),
            anchor: cfg.p(),
            g: controls.g.clone(),
            h1: vec![controls.h1.clone()],
            h2: vec![controls.h2.clone()],
            newton: cfg.newton,
        },
        config: cfg.clone(),
        controls,
    })
}

impl SprayFamily {
    /// `H(., xi)`.
    pub fn evaluate(&self, xi: [Complex64; 3]) -> Result<LegendrianMap> {
        solve_periods(self, xi)?;
        self.core.evaluate(&xi)
    }

    /// `H(., xi)` together with the pullback residual it attains.
    pub fn evaluate_certified(&self, xi: [Complex64; 3]) -> Result<(LegendrianMap, f64)> {
        let f = self.evaluate(xi)?;
        let (res, _) = f.pullback_residual();
        if !(res < TOL_SPRAY_LEG) {
            return Err(Error::Precondition(format!("spray member has pullback residual {res:e}")));
        }
        Ok((f, res))
    }

    /// `zeta'(0)` as an `l x 3` matrix.
    pub fn zeta_derivative(&self) -> Result<DMatrix<Complex64>> {
        self.core.zeta_derivative()
    }

    /// `max |d zeta_j / d xi_k|` at 0.
    pub fn zeta_prime_norm(&self) -> Result<f64> {
        Ok(self.zeta_derivative()?.iter().map(|x| x.norm()).fold(0.0, f64::max))
    }

    /// `d P / d zeta` at `xi = zeta = 0`.
    pub fn period_jacobian_at_zero(&self) -> Result<DMatrix<Complex64>> {
        let zero = vec![Complex64::new(0.0, 0.0); self.controls.g.len()];
        let xi = [Complex64::new(0.0, 0.0); 3];
        let base = self.core.periods(&xi, &zero)?;
        self.core.period_jacobian(&xi, &zero, &base)
    }

    /// Sup of `|d_{xi bar} H|` at `u` over the three directions, by central differences.
    pub fn cauchy_riemann_defect(&self, xi: [Complex64; 3], u: Complex64, step: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in 0..3 {
            let at = |d: Complex64| -> Result<Vec<Complex64>> {
                let mut x = xi;
                x[k] += d;
                Ok(self.core.evaluate(&x)?.eval(u))
            };
            let (rp, rm) = (at(Complex64::new(step, 0.0))?, at(Complex64::new(-step, 0.0))?);
            let (ip, im) = (at(Complex64::new(0.0, step))?, at(Complex64::new(0.0, -step))?);
            for r in 0..3 {
                let dx = (rp[r] - rm[r]) / (2.0 * step);
                let dy = (ip[r] - im[r]) / (2.0 * step);
                worst = worst.max((0.5 * (dx + Complex64::i() * dy)).norm());
            }
        }
        Ok(worst)
    }
}

/// Finite-difference differential at `q` against its predicted structure.
#[derive(Clone, Debug, Serialize)]
pub struct SubmersivityReport {
    pub mu: f64,
    pub q: [f64; 2],
    pub step: f64,
    /// Rows `(x, y, z)`, columns `(xi_1, xi_2, xi_3)`, entries `[re, im]`.
    pub jacobian: [[[f64; 2]; 3]; 3],
    /// `[[V(q), 0, 0], [0, 0, 1], [0, -1, *]]`; the starred entry is `int_E h_1 theta`.
    pub predicted: [[[f64; 2]; 3]; 3],
    pub v_q: [f64; 2],
    pub determinant: [f64; 2],
    pub det_ratio: f64,
    pub condition_number: f64,
    /// Per-row sup of `|J - predicted|` over the predicted entries.
    pub row_deviation: [f64; 3],
    pub structure_deviation: f64,
    /// `|J - J_1|` with `J_1` the first-order prediction including `zeta'(0)`.
    pub first_order_deviation: f64,
    pub zeta_prime: f64,
    pub zeta_prime_over_mu: f64,
}

pub fn verify_submersivity(spray: &SprayFamily) -> Result<SubmersivityReport> {
    let cfg = &spray.config;
    let (q, theta) = (cfg.q(), cfg.model.theta);
    let jac = spray.core.point_jacobian(q, SUBMERSIVITY_STEP)?;
    let v = cfg.model.field(q);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let integral = |f: &LaurentSeries| -> Result<Complex64> {
        Ok(path_integral(&|u| f.eval(u) * theta.density(u), &cfg.arc, TOL_QUAD * 1e-2)?.value)
    };
    let free = integral(&spray.controls.h1)?;
    let predicted = [[v, zero, zero], [zero, zero, one], [zero, -one, free]];
    let mut row_dev = [0.0f64; 3];
    for r in 0..3 {
        for k in 0..3 {
            if r == 2 && k == 2 {
                continue;
            }
            row_dev[r] = row_dev[r].max((jac[(r, k)] - predicted[r][k]).norm());
        }
    }
    // First order: y-row gains g(q) zeta', z-row gains (int_E g theta) zeta'.
    let dz = spray.zeta_derivative()?;
    let ell = spray.controls.g.len();
    let mut first = predicted;
    for k in 0..3 {
        for j in 0..ell {
            let gj = &spray.controls.g[j];
            first[1][k] += gj.eval(q) * dz[(j, k)];
            first[2][k] += integral(gj)? * dz[(j, k)];
        }
    }
    first[1][1] += spray.controls.h2.eval(q);
    first[1][2] += spray.controls.h1.eval(q) - one;
    let mut first_dev: f64 = 0.0;
    for r in 0..3 {
        for k in 0..3 {
            first_dev = first_dev.max((jac[(r, k)] - first[r][k]).norm());
        }
    }
    let det = jac.determinant();
    let sv = jac.clone().svd(false, false).singular_values;
    let cond = sv.max() / sv.min();
    if det.norm() < TOL_SINGULAR {
        return Err(Error::SubmersivityFailure { det: det.norm() });
    }
    let to3 = |m: &dyn Fn(usize, usize) -> Complex64| {
        let mut out = [[[0.0; 2]; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (k, e) in row.iter_mut().enumerate() {
                *e = pair(m(r, k));
            }
        }
        out
    };
    let zp = dz.iter().map(|x| x.norm()).fold(0.0, f64::max);
    Ok(SubmersivityReport {
        mu: cfg.mu,
        q: cfg.q,
        step: SUBMERSIVITY_STEP,
        jacobian: to3(&|r, k| jac[(r, k)]),
        predicted: to3(&|r, k| predicted[r][k]),
        v_q: pair(v),
        determinant: pair(det),
        det_ratio: det.norm() / v.norm(),
        condition_number: cond,
        row_deviation: row_dev,
        structure_deviation: row_dev.iter().copied().fold(0.0, f64::max),
        first_order_deviation: first_dev,
        zeta_prime: zp,
        zeta_prime_over_mu: zp / cfg.mu,
    })
}

/// One row of a `mu` sweep.
#[derive(Clone, Debug, Serialize)]
pub struct MuRow {
    pub mu: f64,
    pub window: i32,
    pub zeta_prime: f64,
    pub structure_deviation: f64,
    pub det_ratio: f64,
}

pub fn mu_sweep(cfg: &SprayConfig, mus: &[f64]) -> Result<Vec<MuRow>> {
    mus.iter()
        .map(|&mu| {
            let spray = build_spray(&SprayConfig { mu, ..cfg.clone() })?;
            let rep = verify_submersivity(&spray)?;
            Ok(MuRow {
                mu,
                window: spray.controls.window,
                zeta_prime: rep.zeta_prime,
                structure_deviation: rep.structure_deviation,
                det_ratio: rep.det_ratio,
            })
        })
        .collect()
}

/// Finitely many `(p, q)` sprays joined into one family with `3k` parameters.
///
/// Member `k` contributes `xi^k_1 h1_k` to the flow time and
/// `xi^k_2 h2_k + xi^k_3 h1_k` to `y~`; one period correction through the
/// first member's `g` serves all members, and `z~` is anchored at the model basepoint.
#[derive(Clone, Debug)]
pub struct ComposedSpray {
    pub members: Vec<SprayFamily>,
    core: Core,
}

pub fn compose_sprays(members: Vec<SprayFamily>) -> Result<ComposedSpray> {
    let first = members
        .first()
        .ok_or_else(|| Error::Structural("composition needs at least one spray".into()))?;
    if members.iter().any(|m| m.config.model != first.config.model) {
        return Err(Error::Structural("composed sprays must share the surface model".into()));
    }
    let core = Core {
        model: first.config.model.clone(),
        anchor: first.config.model.basepoint,
        g: first.controls.g.clone(),
        h1: members.iter().map(|m| m.controls.h1.clone()).collect(),
        h2: members.iter().map(|m| m.controls.h2.clone()).collect(),
        newton: first.config.newton,
    };
    Ok(ComposedSpray { members, core })
}

impl ComposedSpray {
    pub fn params(&self) -> usize {
        self.core.params()
    }

    pub fn evaluate(&self, xi: &[Complex64]) -> Result<LegendrianMap> {
        self.core.evaluate(xi)
    }

    /// Singular values of `d_xi (H(x, .), H(x', .))` at 0, a `6 x 3k` matrix.
    pub fn pair_singular_values(&self, x: Complex64, xp: Complex64) -> Result<Vec<f64>> {
        let a = self.core.point_jacobian(x, SUBMERSIVITY_STEP)?;
        let b = self.core.point_jacobian(xp, SUBMERSIVITY_STEP)?;
        let n = self.params();
        let m = DMatrix::from_fn(6, n, |r, k| if r < 3 { a[(r, k)] } else { b[(r - 3, k)] });
        let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        Ok(sv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spray(mu: f64) -> SprayFamily {
        build_spray(&SprayConfig::default_scene(mu).unwrap()).unwrap()
    }

    #[test]
    fn controls_pass_all_conditions() {
        let s = spray(0.01);
        assert!(s.controls.all_passed(), "{:?}", s.controls.certificates);
    }

    #[test]
    fn residue_row_matches_constant() {
        let ans = Ansatz { lo: -2, hi: 2, rho: 0.7 };
        let r = ans.loop_row(ThetaSpec::DU_OVER_U);
        assert!((r[2] - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-15);
        assert!(r.iter().enumerate().all(|(i, x)| i == 2 || x.norm() == 0.0));
    }

    #[test]
    fn segment_constraint_constant_solution() {
        let ans = Ansatz { lo: 0, hi: 0, rho: 1.0 };
        let e = PathSpec::segment(Complex64::new(0.2, 0.0), Complex64::new(0.7, 0.0));
        let row = ans.arc_row(ThetaSpec::DU, &e);
        assert!((row[0] - 0.5).norm() < 1e-15);
    }

    #[test]
    fn core_at_zero_is_zero_section() {
        let s = spray(0.01);
        let f = s.evaluate([Complex64::new(0.0, 0.0); 3]).unwrap();
        for u in s.config.model.curve_samples() {
            let v = f.eval(u);
            assert!((v[0] - u).norm() < 1e-13 && v[1].norm() < 1e-13 && v[2].norm() < 1e-13);
        }
        assert_eq!(solve_periods(&s, [Complex64::new(0.0, 0.0); 3]).unwrap().iterations, 0);
    }

    #[test]
    fn period_jacobian_is_identity() {
        let s = spray(0.01);
        let j = s.period_jacobian_at_zero().unwrap();
        assert!((j[(0, 0)] - 1.0).norm() < 1e-8);
    }

    #[test]
    fn rejects_degenerate_configs() {
        let mut cfg = SprayConfig::default_scene(0.01).unwrap();
        cfg.q = cfg.p;
        assert!(cfg.validate().is_err());
        let mut cfg = SprayConfig::default_scene(0.01).unwrap();
        cfg.arc = PathSpec::arc(Complex64::new(0.0, 0.0), 0.62, 0.0, 1.2);
        assert!(cfg.validate().is_err());
    }
}
