//! Desk-scale base models: domains in the `u`-plane (or a polydisc), the
//! coframe density `theta`, a vector field with explicit flow, homology loops
//! and the flow map `phi[h](u) = phi_{h(u)}(u)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{path_integral, JetSpace, LaurentSeries, PathKind, PathSpec, Quadrature, ThetaSpec};

/// Compact subdomain factor: the working region `M` is the open domain shrunk by it.
pub const DEFAULT_SHRINK: f64 = 0.95;
/// Clearance of arcs from loops, relative to the outer radius of `M`.
pub const DEFAULT_CLEARANCE: f64 = 0.05;
const DOMAIN_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceKind {
    Disc { radius: f64 },
    Annulus { r_in: f64, r_out: f64 },
    /// `scale` sets the radius of the compact working region.
    Plane { scale: f64 },
    PuncturedPlane { scale: f64 },
    Polydisc { radii: Vec<f64> },
}

/// Vector field `V` on the base curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    /// `V = d/du`, flow `u + t`.
    Translation,
    /// `V = u d/du`, flow `u e^t`.
    Euler,
}

/// Scene-file form of a surface model.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_in: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_out: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<String>,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub v: Option<FlowKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loops: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shrink: Option<f64>,
}

/// Validated base model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SurfaceSpec", into = "SurfaceSpec")]
pub struct SurfaceModel {
    pub kind: SurfaceKind,
    pub theta: ThetaSpec,
    pub flow: FlowKind,
    /// Radii of the loop generators `|u| = r` of `H_1`.
    pub loops: Vec<f64>,
    pub basepoint: Complex64,
    pub shrink: f64,
}

impl TryFrom<SurfaceSpec> for SurfaceModel {
    type Error = Error;

    fn try_from(s: SurfaceSpec) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Scene(format!("surface.{name} is required")));
        let kind = match s.kind.as_str() {
            "disc" => SurfaceKind::Disc {
                radius: need(s.radius, "radius")?,
            },
            "annulus" => SurfaceKind::Annulus {
                r_in: need(s.r_in, "r_in")?,
                r_out: need(s.r_out, "r_out")?,
            },
            "plane" => SurfaceKind::Plane {
                scale: s.scale.unwrap_or(1.0),
            },
            "punctured_plane" => SurfaceKind::PuncturedPlane {
                scale: s.scale.unwrap_or(1.0),
            },
            "polydisc" => SurfaceKind::Polydisc {
                radii: s.radii.clone().ok_or_else(|| Error::Scene("surface.radii is required".into()))?,
            },
            other => return Err(Error::Scene(format!("unknown surface kind `{other}`"))),
        };
        let theta = match &s.theta {
            Some(t) => ThetaSpec::parse(t)?,
            None => ThetaSpec::DU,
        };
        let flow = s.v.unwrap_or(FlowKind::Translation);
        let shrink = s.shrink.unwrap_or(DEFAULT_SHRINK);
        let mut model = SurfaceModel {
            kind,
            theta,
            flow,
            loops: Vec::new(),
            basepoint: Complex64::new(0.0, 0.0),
            shrink,
        };
        model.loops = match s.loops {
            Some(l) => l,
            None => model.default_loops(),
        };
        model.basepoint = match s.basepoint {
            Some(p) => Complex64::new(p[0], p[1]),
            None => model.default_basepoint(),
        };
        model.validate()?;
        Ok(model)
    }
}

impl From<SurfaceModel> for SurfaceSpec {
    fn from(m: SurfaceModel) -> Self {
        let mut spec = SurfaceSpec {
            kind: String::new(),
            radius: None,
            r_in: None,
            r_out: None,
            scale: None,
            radii: None,
            theta: Some(theta_name(&m.theta)),
            v: Some(m.flow),
            loops: Some(m.loops.clone()),
            basepoint: Some([m.basepoint.re, m.basepoint.im]),
            shrink: Some(m.shrink),
        };
        match &m.kind {
            SurfaceKind::Disc { radius } => {
                spec.kind = "disc".into();
                spec.radius = Some(*radius);
            }
            SurfaceKind::Annulus { r_in, r_out } => {
                spec.kind = "annulus".into();
                spec.r_in = Some(*r_in);
                spec.r_out = Some(*r_out);
            }
            SurfaceKind::Plane { scale } => {
                spec.kind = "plane".into();
                spec.scale = Some(*scale);
            }
            SurfaceKind::PuncturedPlane { scale } => {
                spec.kind = "punctured_plane".into();
                spec.scale = Some(*scale);
            }
            SurfaceKind::Polydisc { radii } => {
                spec.kind = "polydisc".into();
                spec.radii = Some(radii.clone());
            }
        }
        spec
    }
}

fn theta_name(t: &ThetaSpec) -> String {
    if *t == ThetaSpec::DU {
        "du".into()
    } else if *t == ThetaSpec::DU_OVER_U {
        "du/u".into()
    } else {
        format!("({})u^{}du", t.coeff, t.power)
    }
}

impl SurfaceModel {
    pub fn disc(radius: f64) -> Result<Self> {
        Self::build(SurfaceKind::Disc { radius }, ThetaSpec::DU, FlowKind::Translation)
    }

    pub fn annulus(r_in: f64, r_out: f64, theta: ThetaSpec, flow: FlowKind) -> Result<Self> {
        Self::build(SurfaceKind::Annulus { r_in, r_out }, theta, flow)
    }

    pub fn polydisc(radii: Vec<f64>) -> Result<Self> {
        Self::build(SurfaceKind::Polydisc { radii }, ThetaSpec::DU, FlowKind::Translation)
    }

    pub fn build(kind: SurfaceKind, theta: ThetaSpec, flow: FlowKind) -> Result<Self> {
        let mut m = SurfaceModel {
            kind,
            theta,
            flow,
            loops: Vec::new(),
            basepoint: Complex64::new(0.0, 0.0),
            shrink: DEFAULT_SHRINK,
        };
        m.loops = m.default_loops();
        m.basepoint = m.default_basepoint();
        m.validate()?;
        Ok(m)
    }

    pub fn with_loops(mut self, loops: Vec<f64>) -> Result<Self> {
        self.loops = loops;
        self.validate()?;
        Ok(self)
    }

    pub fn with_basepoint(mut self, p: Complex64) -> Result<Self> {
        self.basepoint = p;
        self.validate()?;
        Ok(self)
    }

    fn default_loops(&self) -> Vec<f64> {
        match &self.kind {
            SurfaceKind::Annulus { .. } | SurfaceKind::PuncturedPlane { .. } => {
                let (lo, hi) = self.compact_radii();
                vec![0.5 * (lo + hi)]
            }
            _ => Vec::new(),
        }
    }

    fn default_basepoint(&self) -> Complex64 {
        let (lo, hi) = self.compact_radii();
        match &self.kind {
            SurfaceKind::Annulus { .. } | SurfaceKind::PuncturedPlane { .. } => {
                let r = self.loops.first().copied().unwrap_or(0.5 * (lo + hi));
                Complex64::new(0.5 * (r + hi), 0.0)
            }
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn is_polydisc(&self) -> bool {
        matches!(self.kind, SurfaceKind::Polydisc { .. })
    }

    pub fn base_dim(&self) -> usize {
        match &self.kind {
            SurfaceKind::Polydisc { radii } => radii.len(),
            _ => 1,
        }
    }

    /// Radii `(lo, hi)` of the compact working region `M` of a curve model.
    pub fn compact_radii(&self) -> (f64, f64) {
        let s = self.shrink;
        match &self.kind {
            SurfaceKind::Disc { radius } => (0.0, s * radius),
            SurfaceKind::Annulus { r_in, r_out } => (r_in / s, s * r_out),
            SurfaceKind::Plane { scale } => (0.0, s * scale),
            SurfaceKind::PuncturedPlane { scale } => ((1.0 - s) * scale, s * scale),
            SurfaceKind::Polydisc { radii } => (0.0, s * radii.iter().copied().fold(f64::INFINITY, f64::min)),
        }
    }

    /// Whether the domain contains the origin (so `theta` and jets must be regular there).
    pub fn contains_origin(&self) -> bool {
        matches!(
            self.kind,
            SurfaceKind::Disc { .. } | SurfaceKind::Plane { .. } | SurfaceKind::Polydisc { .. }
        )
    }

    /// Distance from `u` to the boundary of the open domain (infinite for the plane).
    pub fn boundary_distance(&self, u: Complex64) -> f64 {
        let r = u.norm();
        match &self.kind {
            SurfaceKind::Disc { radius } => radius - r,
            SurfaceKind::Annulus { r_in, r_out } => (r - r_in).min(r_out - r),
            SurfaceKind::Plane { .. } => f64::INFINITY,
            SurfaceKind::PuncturedPlane { .. } => r,
            SurfaceKind::Polydisc { radii } => radii[0] - r,
        }
    }

    pub fn in_domain(&self, u: Complex64) -> bool {
        u.re.is_finite() && u.im.is_finite() && self.boundary_distance(u) > DOMAIN_MARGIN
    }

    pub fn in_compact(&self, u: Complex64) -> bool {
        let (lo, hi) = self.compact_radii();
        let r = u.norm();
        r >= lo - 1e-12 && r <= hi + 1e-12
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64, what: &str| -> Result<()> {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::Scene(format!("{what} must be positive and finite")))
            }
        };
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Scene("shrink factor must lie in (0, 1)".into()));
        }
        match &self.kind {
            SurfaceKind::Disc { radius } => pos(*radius, "disc radius")?,
            SurfaceKind::Annulus { r_in, r_out } => {
                pos(*r_in, "r_in")?;
                pos(*r_out, "r_out")?;
                if r_in / self.shrink >= self.shrink * r_out {
                    return Err(Error::Scene("annulus is too thin for the shrink factor".into()));
                }
            }
            SurfaceKind::Plane { scale } | SurfaceKind::PuncturedPlane { scale } => pos(*scale, "scale")?,
            SurfaceKind::Polydisc { radii } => {
                if radii.is_empty() {
                    return Err(Error::Scene("polydisc needs at least one radius".into()));
                }
                for r in radii {
                    pos(*r, "polydisc radius")?;
                }
            }
        }
        if self.theta.coeff.norm() < 1e-6 || !self.theta.coeff.re.is_finite() || !self.theta.coeff.im.is_finite() {
            return Err(Error::Scene("theta density vanishes".into()));
        }
        if self.contains_origin() && self.theta.power != 0 {
            return Err(Error::Scene("theta must be regular and nonvanishing at the origin".into()));
        }
        if self.is_polydisc() && self.theta != ThetaSpec::DU {
            return Err(Error::Scene("polydisc bases use theta_j = du_j".into()));
        }
        if self.flow == FlowKind::Euler && self.contains_origin() {
            return Err(Error::Scene("Euler field vanishes at the origin, which lies in the domain".into()));
        }
        let expected = match &self.kind {
            SurfaceKind::Annulus { .. } | SurfaceKind::PuncturedPlane { .. } => 1,
            _ => 0,
        };
        if self.loops.len() != expected {
            return Err(Error::Scene(format!(
                "this surface has {expected} homology generator(s), scene lists {}",
                self.loops.len()
            )));
        }
        let (lo, hi) = self.compact_radii();
        for &r in &self.loops {
            if !(r > lo && r < hi) {
                return Err(Error::Scene(format!("loop |u| = {r} is not inside the working region")));
            }
        }
        if !self.is_polydisc() && !self.in_compact(self.basepoint) {
            return Err(Error::Scene("basepoint lies outside the working region".into()));
        }
        Ok(())
    }

    /// Loop generators as counterclockwise circles.
    pub fn loop_paths(&self) -> Vec<PathSpec> {
        self.loops
            .iter()
            .enumerate()
            .map(|(j, &r)| PathSpec::circle(r).labeled(&format!("C{}", j + 1)))
            .collect()
    }

    /// Density `g(u)` of `theta = g du`.
    pub fn density(&self, u: Complex64) -> Complex64 {
        self.theta.density(u)
    }

    /// The vector field `V(u)`.
    pub fn field(&self, u: Complex64) -> Complex64 {
        match self.flow {
            FlowKind::Translation => Complex64::new(1.0, 0.0),
            FlowKind::Euler => u,
        }
    }

    /// Time-`t` flow of `V` from `u`.
    pub fn flow_at(&self, u: Complex64, t: Complex64) -> Complex64 {
        match self.flow {
            FlowKind::Translation => u + t,
            FlowKind::Euler => u * t.exp(),
        }
    }

    /// A radius inside `M` used for circle sampling of jet coefficients.
    pub fn sample_radius(&self) -> f64 {
        match self.loops.first() {
            Some(&r) => r,
            None => 0.5 * self.compact_radii().1,
        }
    }

    /// Working jet window: `[-w, w]` on domains with a hole, `[0, w]` otherwise.
    pub fn window(&self, w: i32) -> (i32, i32) {
        if self.contains_origin() {
            (0, w)
        } else {
            (-w, w)
        }
    }

    /// Jet space over this base with the given fiber variables.
    pub fn jet_space(&self, fiber: &[&str], degree: usize, w: i32) -> Result<Arc<JetSpace>> {
        let base = match &self.kind {
            SurfaceKind::Polydisc { radii } => (1..=radii.len())
                .map(|j| (format!("u{j}"), ThetaSpec::DU))
                .collect(),
            _ => vec![("u".to_string(), self.theta)],
        };
        JetSpace::new(
            base,
            fiber.iter().map(|s| s.to_string()).collect(),
            degree,
            self.window(w),
            self.sample_radius(),
        )
    }

    /// Base sample points: 64 per circle on the boundary circles of `M`, its
    /// midline and every loop, plus the origin when it lies in the domain.
    pub fn sample_points(&self) -> Vec<Vec<Complex64>> {
        let m = self.base_dim();
        let (lo, hi) = self.compact_radii();
        let mut radii = vec![hi, 0.5 * (lo + hi)];
        if lo > 0.0 {
            radii.push(lo);
        } else {
            radii.push(0.5 * hi * 0.5);
        }
        radii.extend(self.loops.iter().copied());
        let mut pts = Vec::new();
        for r in radii {
            for k in 0..64 {
                let ang = 2.0 * PI * k as f64 / 64.0;
                pts.push((0..m).map(|b| Complex64::from_polar(r, ang * (b + 1) as f64)).collect());
            }
        }
        if self.contains_origin() {
            pts.push(vec![Complex64::new(0.0, 0.0); m]);
        }
        pts
    }

    /// Sample points of a curve model (first coordinate only).
    pub fn curve_samples(&self) -> Vec<Complex64> {
        self.sample_points().into_iter().map(|p| p[0]).collect()
    }

    /// Checks an arc against the working region and its clearance from the loops.
    /// Returns the attained clearance.
    pub fn check_arc(&self, arc: &PathSpec, clearance: f64) -> Result<f64> {
        arc.validate()?;
        let (_, hi) = self.compact_radii();
        let need = clearance * hi;
        let mut min_gap = f64::INFINITY;
        for u in arc.sample(512).into_iter().chain([arc.start(), arc.end()]) {
            if !self.in_compact(u) {
                return Err(Error::Scene(format!("arc leaves the working region at {u}")));
            }
            for &r in &self.loops {
                min_gap = min_gap.min((u.norm() - r).abs());
            }
        }
        if min_gap < need {
            return Err(Error::Scene(format!(
                "arc comes within {min_gap:.4} of a loop (clearance {need:.4} required)"
            )));
        }
        Ok(min_gap)
    }

    /// Path from the basepoint-like point `a` to `b` inside an annular `M`:
    /// along `|u| = |a|` to the argument of `b`, then radially.
    pub fn connecting_path(&self, a: Complex64, b: Complex64) -> PathSpec {
        if self.contains_origin() || a.norm() < 1e-14 || b.norm() < 1e-14 {
            return PathSpec::segment(a, b);
        }
        let start = a.arg();
        let mut end = b.arg();
        if end - start > PI {
            end -= 2.0 * PI;
        } else if start - end > PI {
            end += 2.0 * PI;
        }
        let elbow = Complex64::from_polar(a.norm(), end);
        let n = 32.max(((end - start).abs() * 16.0) as usize);
        let mut pts: Vec<Complex64> = (0..=n)
            .map(|k| Complex64::from_polar(a.norm(), start + (end - start) * k as f64 / n as f64))
            .collect();
        if (elbow - b).norm() > 1e-15 {
            pts.push(b);
        }
        if pts.len() < 2 || (pts.len() == 2 && pts[0] == pts[1]) {
            return PathSpec::segment(a, b);
        }
        dedup_polyline(pts)
    }
}

fn dedup_polyline(mut pts: Vec<Complex64>) -> PathSpec {
    pts.dedup_by(|a, b| (*a - *b).norm() < 1e-15);
    if pts.len() < 2 {
        pts.push(pts[0]);
    }
    PathSpec {
        kind: PathKind::Polyline {
            points: pts.iter().map(|p| [p.re, p.im]).collect(),
        },
        label: None,
    }
}

/// `u -> phi_{h(u)}(u)` for a Laurent polynomial `h`.
#[derive(Clone, Debug)]
pub struct FlowMap {
    pub flow: FlowKind,
    pub h: LaurentSeries,
    dh: LaurentSeries,
}

impl FlowMap {
    pub fn eval(&self, u: Complex64) -> Complex64 {
        let t = self.h.eval(u);
        match self.flow {
            FlowKind::Translation => u + t,
            FlowKind::Euler => u * t.exp(),
        }
    }

    pub fn derivative(&self, u: Complex64) -> Complex64 {
        let dh = self.dh.eval(u);
        match self.flow {
            FlowKind::Translation => Complex64::new(1.0, 0.0) + dh,
            FlowKind::Euler => self.h.eval(u).exp() * (Complex64::new(1.0, 0.0) + u * dh),
        }
    }

    /// Truncated Laurent representation over `lo..=hi`, sampled on `|u| = rho`.
    pub fn series(&self, rho: f64, lo: i32, hi: i32) -> Result<LaurentSeries> {
        let n = 128usize.max((4 * (hi - lo + 1) as usize).next_power_of_two());
        LaurentSeries::from_circle_samples(self.h.var(), |u| self.eval(u), rho, lo, hi, n)
    }
}

/// Builds `phi[h]` and checks on the sample set that the image stays in the domain.
pub fn flow_map(h: &LaurentSeries, model: &SurfaceModel) -> Result<FlowMap> {
    if model.is_polydisc() {
        return Err(Error::Structural("flow maps are defined on curve models".into()));
    }
    let map = FlowMap {
        flow: model.flow,
        h: h.clone(),
        dh: h.derivative(),
    };
    if h.is_zero() {
        return Ok(map);
    }
    for u in model.curve_samples() {
        let img = map.eval(u);
        if !model.in_domain(img) {
            return Err(Error::FlowEscape { witness: u });
        }
    }
    Ok(map)
}

/// Evaluator for `(phi[h])^* theta / du = g(phi[h](u)) phi[h]'(u)`.
pub fn theta_pullback(
    h: &LaurentSeries,
    model: &SurfaceModel,
) -> Result<impl Fn(Complex64) -> Complex64 + Send + Sync + Clone> {
    let map = flow_map(h, model)?;
    let theta = model.theta;
    Ok(move |u: Complex64| theta.density(map.eval(u)) * map.derivative(u))
}

/// `(phi[h])^* theta / du` as a Laurent series. Exact for the pairings
/// (translation, `du`) and (Euler, `du/u`); sampled on `|u| = rho` otherwise.
pub fn theta_pullback_series(h: &LaurentSeries, model: &SurfaceModel, lo: i32, hi: i32) -> Result<LaurentSeries> {
    let map = flow_map(h, model)?;
    let var = h.var().to_string();
    let t = model.theta;
    match (model.flow, t.power) {
        (FlowKind::Translation, 0) => {
            Ok(map.dh.add(&LaurentSeries::constant(var, Complex64::new(1.0, 0.0))).scale(t.coeff))
        }
        (FlowKind::Euler, -1) => Ok(LaurentSeries::monomial(var.clone(), Complex64::new(1.0, 0.0), -1)
            .add(&map.dh)
            .scale(t.coeff)),
        _ => {
            let n = 256usize.max((4 * (hi - lo + 1) as usize).next_power_of_two());
            LaurentSeries::from_circle_samples(
                var,
                |u| t.density(map.eval(u)) * map.derivative(u),
                model.sample_radius(),
                lo,
                hi,
                n,
            )
        }
    }
}

/// Periods `int_{C_j} w(u) du` over the loop generators.
pub fn homology_periods(
    w: &(dyn Fn(Complex64) -> Complex64 + Sync),
    model: &SurfaceModel,
    tol: f64,
) -> Result<Vec<Quadrature>> {
    model.loop_paths().iter().map(|c| path_integral(w, c, tol)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::TOL_QUAD;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn annulus() -> SurfaceModel {
        SurfaceModel::annulus(0.5, 1.0, ThetaSpec::DU_OVER_U, FlowKind::Euler).unwrap()
    }

    #[test]
    fn scene_json_round_trip() {
        let js = r#"{"kind":"annulus","r_in":0.5,"r_out":1.0,"theta":"du/u","V":"euler","loops":[0.75],"basepoint":[0.8,0.0]}"#;
        let m: SurfaceModel = serde_json::from_str(js).unwrap();
        assert_eq!(m.loops, vec![0.75]);
        assert_eq!(m.flow, FlowKind::Euler);
        let back: SurfaceModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_inconsistent_models() {
        assert!(SurfaceModel::build(SurfaceKind::Disc { radius: 1.0 }, ThetaSpec::DU, FlowKind::Euler).is_err());
        assert!(SurfaceModel::build(SurfaceKind::Disc { radius: 1.0 }, ThetaSpec::DU_OVER_U, FlowKind::Translation).is_err());
        assert!(annulus().with_loops(vec![]).is_err());
        assert!(annulus().with_loops(vec![0.99]).is_err());
    }

    #[test]
    fn flow_maps() {
        let m = annulus();
        let zero = flow_map(&LaurentSeries::zero("u"), &m).unwrap();
        assert_eq!(zero.eval(c(0.7, 0.1)), c(0.7, 0.1));
        let k = c(0.01, 0.02);
        let f = flow_map(&LaurentSeries::constant("u", k), &m).unwrap();
        assert!((f.eval(c(0.7, 0.0)) - c(0.7, 0.0) * k.exp()).norm() < 1e-15);
        let big = LaurentSeries::constant("u", c(2.0, 0.0));
        assert!(matches!(flow_map(&big, &m), Err(Error::FlowEscape { .. })));
    }

    #[test]
    fn residue_periods() {
        let m = annulus();
        let p = homology_periods(&|u: Complex64| 1.0 / u + 3.0 * u * u, &m, TOL_QUAD).unwrap();
        assert!((p[0].value - c(0.0, 2.0 * PI)).norm() < 1e-12);
        let p = homology_periods(&|_u| c(1.0, 0.0), &m, TOL_QUAD).unwrap();
        assert!(p[0].value.norm() < 1e-12);
    }

    #[test]
    fn exact_pullback_series_matches_sampled() {
        let m = annulus();
        let h = LaurentSeries::from_terms("u", &[(-1, c(0.01, 0.0)), (2, c(0.0, 0.02))]);
        let s = theta_pullback_series(&h, &m, -8, 8).unwrap();
        let f = theta_pullback(&h, &m).unwrap();
        for u in m.curve_samples() {
            assert!((s.eval(u) - f(u)).norm() < 1e-13);
        }
    }

    #[test]
    fn arc_clearance() {
        let m = annulus();
        let good = PathSpec::arc(c(0.0, 0.0), 0.9, 0.0, 1.5);
        assert!(m.check_arc(&good, DEFAULT_CLEARANCE).unwrap() > 0.1);
        let bad = PathSpec::segment(c(0.6, 0.0), c(0.9, 0.0));
        assert!(m.check_arc(&bad, DEFAULT_CLEARANCE).is_err());
    }
}
