//! Holomorphic maps `f = (x_1, ..., x_n, y_1, ..., y_n, z)` from a curve model
//! into `R x C^{2n}` with the model form `alpha = dz - y_1 theta(x_1) - sum_{i>=2} y_i dx_i`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{arclength_integral, CoordinateChange, JetSpace, LaurentSeries, PathSpec, TOL_QUAD};
use crate::surfaces::{homology_periods, SurfaceModel};

pub const TOL_LEG: f64 = 1e-10;
pub const TOL_PERIOD: f64 = 1e-10;
pub const TOL_IMM: f64 = 1e-6;
pub const TOL_EMBED: f64 = 1e-6;

type Evaluator = Arc<dyn Fn(Complex64) -> (Complex64, Complex64) + Send + Sync>;

/// One coordinate function of a map, with its `u`-derivative.
#[derive(Clone)]
pub enum Component {
    Series(LaurentSeries),
    /// Returns `(value, derivative)`.
    Sampled(Evaluator),
}

impl std::fmt::Debug for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Component::Series(s) => write!(f, "Series({s:?})"),
            Component::Sampled(_) => write!(f, "Sampled(..)"),
        }
    }
}

impl Component {
    pub fn zero() -> Self {
        Component::Series(LaurentSeries::zero("u"))
    }

    pub fn identity() -> Self {
        Component::Series(LaurentSeries::monomial("u", Complex64::new(1.0, 0.0), 1))
    }

    pub fn sampled(f: impl Fn(Complex64) -> (Complex64, Complex64) + Send + Sync + 'static) -> Self {
        Component::Sampled(Arc::new(f))
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        match self {
            Component::Series(s) => s.eval(u),
            Component::Sampled(f) => f(u).0,
        }
    }

    pub fn deriv(&self, u: Complex64) -> Complex64 {
        match self {
            Component::Series(s) => s.derivative().eval(u),
            Component::Sampled(f) => f(u).1,
        }
    }

    pub fn value_and_deriv(&self, u: Complex64) -> (Complex64, Complex64) {
        match self {
            Component::Series(s) => (s.eval(u), s.derivative().eval(u)),
            Component::Sampled(f) => f(u),
        }
    }

    pub fn as_series(&self) -> Option<&LaurentSeries> {
        match self {
            Component::Series(s) => Some(s),
            Component::Sampled(_) => None,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        match self {
            Component::Series(s) => Component::Series(s.scale(c)),
            Component::Sampled(f) => {
                let f = f.clone();
                Component::sampled(move |u| {
                    let (v, d) = f(u);
                    (v * c, d * c)
                })
            }
        }
    }
}

/// Certified facts about a map.
#[derive(Clone, Debug, Serialize)]
pub struct LegendrianCertificate {
    pub pullback_residual: f64,
    pub residual_witness: [f64; 2],
    pub periods: Vec<[f64; 2]>,
    pub immersion_min_derivative: f64,
    pub legendrian: bool,
    pub immersion: bool,
}

#[derive(Clone, Debug)]
pub struct LegendrianMap {
    pub model: SurfaceModel,
    /// `x_1, ..., x_n`; `x_1` is the base component.
    pub x: Vec<Component>,
    pub y: Vec<Component>,
    pub z: Component,
}

/// Serializable form with Laurent-series components.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LegendrianRecord {
    pub x: Vec<LaurentSeries>,
    pub y: Vec<LaurentSeries>,
    pub z: LaurentSeries,
}

impl LegendrianMap {
    pub fn new(model: SurfaceModel, x: Vec<Component>, y: Vec<Component>, z: Component) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Structural("a map into R x C^{2n} needs n x- and n y-components".into()));
        }
        if model.is_polydisc() {
            return Err(Error::Structural("Legendrian maps are defined on curve models".into()));
        }
        Ok(Self { model, x, y, z })
    }

    /// The zero section `u -> (u, 0, ..., 0)`.
    pub fn zero_section(model: SurfaceModel, n: usize) -> Result<Self> {
        let mut x = vec![Component::identity()];
        x.extend((1..n).map(|_| Component::zero()));
        Self::new(model, x, vec![Component::zero(); n], Component::zero())
    }

    pub fn from_record(model: SurfaceModel, r: &LegendrianRecord) -> Result<Self> {
        Self::new(
            model,
            r.x.iter().cloned().map(Component::Series).collect(),
            r.y.iter().cloned().map(Component::Series).collect(),
            Component::Series(r.z.clone()),
        )
    }

    pub fn to_record(&self) -> Result<LegendrianRecord> {
        let ser = |c: &Component| {
            c.as_series()
                .cloned()
                .ok_or_else(|| Error::Structural("only Laurent-series components serialize".into()))
        };
        Ok(LegendrianRecord {
            x: self.x.iter().map(ser).collect::<Result<_>>()?,
            y: self.y.iter().map(ser).collect::<Result<_>>()?,
            z: ser(&self.z)?,
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Image point `(x, y, z)` in `C^{2n+1}` (base chart coordinate first).
    pub fn eval(&self, u: Complex64) -> Vec<Complex64> {
        self.x
            .iter()
            .chain(&self.y)
            .chain(std::iter::once(&self.z))
            .map(|c| c.eval(u))
            .collect()
    }

    /// Derivatives of all components at `u`.
    pub fn derivative(&self, u: Complex64) -> Vec<Complex64> {
        self.x
            .iter()
            .chain(&self.y)
            .chain(std::iter::once(&self.z))
            .map(|c| c.deriv(u))
            .collect()
    }

    /// `f^* alpha / du` at `u`.
    pub fn pullback_density(&self, u: Complex64) -> Complex64 {
        let (x1, dx1) = self.x[0].value_and_deriv(u);
        let mut w = self.z.deriv(u) - self.y[0].eval(u) * self.model.density(x1) * dx1;
        for i in 1..self.n() {
            w -= self.y[i].eval(u) * self.x[i].deriv(u);
        }
        w
    }

    /// Sup of `|f^* alpha / du|` over the model sample set, with the witness.
    pub fn pullback_residual(&self) -> (f64, Complex64) {
        self.model
            .curve_samples()
            .into_iter()
            .map(|u| (self.pullback_density(u).norm(), u))
            .fold((0.0, Complex64::new(0.0, 0.0)), |a, b| if b.0 > a.0 { b } else { a })
    }

    pub fn periods(&self) -> Result<Vec<Complex64>> {
        let w = |u: Complex64| self.pullback_density(u);
        Ok(homology_periods(&w, &self.model, TOL_QUAD)?.iter().map(|q| q.value).collect())
    }

    pub fn immersion_min_derivative(&self) -> f64 {
        self.model
            .curve_samples()
            .into_iter()
            .map(|u| self.derivative(u).iter().map(|d| d.norm_sqr()).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn certify(&self) -> Result<LegendrianCertificate> {
        let (res, wit) = self.pullback_residual();
        let periods = self.periods()?;
        let imm = self.immersion_min_derivative();
        Ok(LegendrianCertificate {
            pullback_residual: res,
            residual_witness: [wit.re, wit.im],
            periods: periods.iter().map(|p| [p.re, p.im]).collect(),
            immersion_min_derivative: imm,
            legendrian: res < TOL_LEG && periods.iter().all(|p| p.norm() < TOL_PERIOD),
            immersion: imm > TOL_IMM,
        })
    }
}

/// `f^* alpha / du` as a Laurent series when every component is a series and
/// `x_1` is the identity; otherwise sampled on `|u| = rho` into `[-w, w]`.
fn pullback_series(f: &LegendrianMap, w: i32) -> Result<LaurentSeries> {
    let all_series = f.x.iter().chain(&f.y).chain(std::iter::once(&f.z)).all(|c| c.as_series().is_some());
    let x1_is_id = f.x[0]
        .as_series()
        .is_some_and(|s| s.trimmed() == LaurentSeries::monomial(s.var(), Complex64::new(1.0, 0.0), 1));
    if all_series && x1_is_id {
        let s = |c: &Component| c.as_series().unwrap().clone();
        let t = f.model.theta;
        let g = LaurentSeries::monomial("u", t.coeff, t.power);
        let mut acc = s(&f.z).derivative().sub(&s(&f.y[0]).mul(&g));
        for i in 1..f.n() {
            acc = acc.sub(&s(&f.y[i]).mul(&s(&f.x[i]).derivative()));
        }
        return Ok(acc.trimmed());
    }
    let (lo, hi) = f.model.window(w);
    let n = 1024usize.max((4 * (hi - lo + 1) as usize).next_power_of_two());
    LaurentSeries::from_circle_samples("u", |u| f.pullback_density(u), f.model.sample_radius(), lo, hi, n)
}

/// Report of a Legendrianization.
#[derive(Clone, Debug, Serialize)]
pub struct LegendrianizeReport {
    pub periods: Vec<[f64; 2]>,
    /// Sup over samples of `|z~ - z|`.
    pub z_change: f64,
    /// Sup over samples of `|int_p^u f^* alpha|` along the connecting paths.
    pub integral_bound: f64,
    pub certificate: LegendrianCertificate,
}

/// Replaces `z` by `z~(u) = z(u) - int_p^u f^* alpha`.
pub fn legendrianize(f: &LegendrianMap, p: Complex64) -> Result<(LegendrianMap, LegendrianizeReport)> {
    let periods = f.periods()?;
    if periods.iter().any(|q| q.norm() >= TOL_PERIOD) {
        return Err(Error::PeriodObstruction { periods });
    }
    let w = pullback_series(f, 64)?;
    let (prim, residue) = w.antiderivative();
    // The residue is the period over the loop divided by 2 pi i.
    if residue.norm() * 2.0 * PI >= TOL_PERIOD {
        return Err(Error::PeriodObstruction {
            periods: vec![residue * Complex64::new(0.0, 2.0 * PI)],
        });
    }
    let shift = prim.sub(&LaurentSeries::constant("u", prim.eval(p)));
    let z_new = match &f.z {
        Component::Series(z) => Component::Series(z.sub(&shift).trimmed()),
        Component::Sampled(zf) => {
            let zf = zf.clone();
            let ds = shift.derivative();
            let shift = shift.clone();
            Component::sampled(move |u| {
                let (v, d) = zf(u);
                (v - shift.eval(u), d - ds.eval(u))
            })
        }
    };
    let out = LegendrianMap {
        model: f.model.clone(),
        x: f.x.clone(),
        y: f.y.clone(),
        z: z_new,
    };
    let samples = f.model.curve_samples();
    let z_change = samples
        .iter()
        .map(|&u| (out.z.eval(u) - f.z.eval(u)).norm())
        .fold(0.0, f64::max);
    let integral_bound = samples.iter().map(|&u| shift.eval(u).norm()).fold(0.0, f64::max);
    let certificate = out.certify()?;
    Ok((
        out,
        LegendrianizeReport {
            periods: periods.iter().map(|q| [q.re, q.im]).collect(),
            z_change,
            integral_bound,
            certificate,
        },
    ))
}

/// Weights of the non-isotropic dilation on `(x_2..x_n, y_1, y_2..y_n, z)`.
pub fn dilation_weights(n: usize, t: Complex64) -> Result<(Vec<Complex64>, Vec<Complex64>, Complex64)> {
    if t.norm() == 0.0 {
        return Err(Error::DegenerateDilation);
    }
    let t2 = t * t;
    let x = (1..n).map(|_| t).collect();
    let mut y = vec![t2];
    y.extend((1..n).map(|_| t));
    Ok((x, y, t2))
}

/// Dilation of a map: `z -> t^2 z`, `y_1 -> t^2 y_1`, `x_j -> t x_j`, `y_j -> t y_j` (`j >= 2`).
pub fn dilate_map(f: &LegendrianMap, t: Complex64) -> Result<LegendrianMap> {
    let (wx, wy, wz) = dilation_weights(f.n(), t)?;
    let mut x = vec![f.x[0].clone()];
    x.extend(f.x[1..].iter().zip(&wx).map(|(c, w)| c.scale(*w)));
    Ok(LegendrianMap {
        model: f.model.clone(),
        x,
        y: f.y.iter().zip(&wy).map(|(c, w)| c.scale(*w)).collect(),
        z: f.z.scale(wz),
    })
}

/// The dilation as a coordinate change on a jet space whose fibers are
/// named `x2..xn, y1..yn, z`.
pub fn dilation_change(space: &Arc<JetSpace>, t: Complex64) -> Result<CoordinateChange> {
    if t.norm() == 0.0 {
        return Err(Error::DegenerateDilation);
    }
    let t2 = t * t;
    let weights = space
        .fiber_names()
        .iter()
        .map(|name| match name.as_str() {
            "z" | "y1" => Ok(t2),
            other if other.starts_with('x') || other.starts_with('y') => Ok(t),
            other => Err(Error::Structural(format!("dilation does not know fiber variable `{other}`"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoordinateChange::scaling(space, &weights)?.labeled("dilation"))
}

#[derive(Clone, Debug, Serialize)]
pub struct LengthProfile {
    pub u0: [f64; 2],
    pub paths: Vec<f64>,
    /// Lengths of the images of 32 radial paths from `u0` to the boundary of `M`.
    pub fan: Vec<f64>,
    pub fan_min: f64,
}

/// Ambient Euclidean length of `f o gamma`.
pub fn image_length(f: &LegendrianMap, path: &PathSpec, tol: f64) -> Result<f64> {
    let w = |z: Complex64, dz: Complex64| -> f64 {
        let speed: f64 = f.derivative(z).iter().map(|d| d.norm_sqr()).sum::<f64>().sqrt();
        speed * dz.norm()
    };
    arclength_integral(&w, path, tol)
}

/// Exit radius parameter `s > 0` of `u0 + s e^{i phi}` from the annulus `lo <= |u| <= hi`.
fn radial_exit(u0: Complex64, dir: Complex64, lo: f64, hi: f64) -> f64 {
    // |u0 + s d|^2 = r^2  <=>  s^2 + 2 Re(conj(d) u0) s + |u0|^2 - r^2 = 0.
    let b = (dir.conj() * u0).re;
    let c0 = u0.norm_sqr();
    let mut s_exit = -b + (b * b - c0 + hi * hi).max(0.0).sqrt();
    if lo > 0.0 {
        let disc = b * b - c0 + lo * lo;
        if disc >= 0.0 {
            let s1 = -b - disc.sqrt();
            if s1 > 1e-12 && s1 < s_exit {
                s_exit = s1;
            }
        }
    }
    s_exit
}

pub fn length_profile(f: &LegendrianMap, u0: Complex64, paths: &[PathSpec]) -> Result<LengthProfile> {
    let lens = paths.iter().map(|p| image_length(f, p, 1e-10)).collect::<Result<Vec<_>>>()?;
    let (lo, hi) = f.model.compact_radii();
    let fan = (0..32)
        .map(|k| {
            let dir = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 32.0);
            let s = radial_exit(u0, dir, lo, hi);
            image_length(f, &PathSpec::segment(u0, u0 + dir * s), 1e-10)
        })
        .collect::<Result<Vec<_>>>()?;
    let fan_min = fan.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(LengthProfile {
        u0: [u0.re, u0.im],
        paths: lens,
        fan,
        fan_min,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectivityReport {
    pub grid_points: usize,
    pub rings: usize,
    pub angles: usize,
    pub diag_margin: f64,
    pub pairs_scanned: usize,
    pub min_distance: f64,
    pub witness: [[f64; 2]; 2],
    pub embedding_plausible: bool,
}

/// Polar grid of `rings x angles` points in `M`.
pub fn scan_grid(model: &SurfaceModel, rings: usize, angles: usize) -> Vec<Complex64> {
    let (lo, hi) = model.compact_radii();
    let mut pts = Vec::with_capacity(rings * angles);
    for r in 0..rings {
        let rad = lo + (hi - lo) * (r as f64 + 0.5) / rings as f64;
        for a in 0..angles {
            pts.push(Complex64::from_polar(rad, 2.0 * PI * a as f64 / angles as f64));
        }
    }
    pts
}

/// Closest image pair over grid pairs at distance above `diag_margin`.
pub fn double_point_scan(f: &LegendrianMap, diag_margin: f64) -> InjectivityReport {
    let (rings, angles) = (8, 16);
    let pts = scan_grid(&f.model, rings, angles);
    let images: Vec<Vec<Complex64>> = pts.iter().map(|&u| f.eval(u)).collect();
    let best = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut local = (f64::INFINITY, i, i, 0usize);
            for j in (i + 1)..pts.len() {
                if (pts[i] - pts[j]).norm() <= diag_margin {
                    continue;
                }
                local.3 += 1;
                let d = images[i]
                    .iter()
                    .zip(&images[j])
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                if d < local.0 {
                    local = (d, i, j, local.3);
                }
            }
            local
        })
        .reduce(
            || (f64::INFINITY, usize::MAX, usize::MAX, 0),
            |a, b| {
                let count = a.3 + b.3;
                let pick = if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a };
                (pick.0, pick.1, pick.2, count)
            },
        );
    let wit = |k: usize| pts.get(k).map_or([f64::NAN, f64::NAN], |u| [u.re, u.im]);
    InjectivityReport {
        grid_points: pts.len(),
        rings,
        angles,
        diag_margin,
        pairs_scanned: best.3,
        min_distance: best.0,
        witness: [wit(best.1), wit(best.2)],
        embedding_plausible: best.0 > TOL_EMBED,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ThetaSpec;
    use crate::surfaces::FlowKind;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn s(terms: &[(i32, f64)]) -> Component {
        let t: Vec<(i32, Complex64)> = terms.iter().map(|&(k, v)| (k, c(v, 0.0))).collect();
        Component::Series(LaurentSeries::from_terms("u", &t))
    }

    fn disc() -> SurfaceModel {
        SurfaceModel::disc(1.0).unwrap()
    }

    #[test]
    fn pullback_examples() {
        let f = LegendrianMap::zero_section(disc(), 1).unwrap();
        assert_eq!(f.pullback_residual().0, 0.0);
        let f = LegendrianMap::new(disc(), vec![Component::identity()], vec![s(&[(1, 1.0)])], s(&[(2, 0.5)])).unwrap();
        assert!(f.pullback_residual().0 < 1e-15);
        let f = LegendrianMap::new(disc(), vec![Component::identity()], vec![s(&[(0, 1.0)])], Component::zero()).unwrap();
        assert!((f.pullback_density(c(0.3, 0.2)) + c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn legendrianize_disc() {
        let f = LegendrianMap::new(disc(), vec![Component::identity()], vec![s(&[(1, 1.0)])], Component::zero()).unwrap();
        let (g, rep) = legendrianize(&f, c(0.0, 0.0)).unwrap();
        assert!(rep.certificate.legendrian);
        let z = g.z.as_series().unwrap();
        assert!(z.max_diff(&LaurentSeries::monomial("u", c(0.5, 0.0), 2)) < 1e-15);
    }

    #[test]
    fn obstructed_annulus() {
        let m = SurfaceModel::annulus(0.5, 1.0, ThetaSpec::DU, FlowKind::Translation).unwrap();
        let f = LegendrianMap::new(m, vec![Component::identity()], vec![s(&[(-1, 1.0)])], Component::zero()).unwrap();
        match legendrianize(&f, c(0.8, 0.0)) {
            Err(Error::PeriodObstruction { periods }) => assert!((periods[0] - c(0.0, -2.0 * PI)).norm() < 1e-10),
            other => panic!("expected an obstruction, got {other:?}"),
        }
    }

    #[test]
    fn dilation_keeps_legendrian() {
        let m = disc();
        let f = LegendrianMap::new(
            m,
            vec![Component::identity(), s(&[(2, 1.0)])],
            vec![s(&[(1, 1.0)]), s(&[(1, 0.5)])],
            Component::zero(),
        )
        .unwrap();
        let (g, _) = legendrianize(&f, c(0.0, 0.0)).unwrap();
        let h = dilate_map(&g, c(2.0, 0.0)).unwrap();
        assert!(h.pullback_residual().0 < 1e-12);
        assert!(matches!(dilate_map(&g, c(0.0, 0.0)), Err(Error::DegenerateDilation)));
    }

    #[test]
    fn lengths() {
        let f = LegendrianMap::zero_section(disc(), 1).unwrap();
        let l = image_length(&f, &PathSpec::segment(c(0.0, 0.0), c(1.0, 0.0)), 1e-12).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        let l = image_length(&f, &PathSpec::circle(0.5), 1e-12).unwrap();
        assert!((l - PI).abs() < 1e-12);
        let g = LegendrianMap::new(disc(), vec![Component::identity()], vec![s(&[(1, 1.0)])], s(&[(2, 0.5)])).unwrap();
        let l = image_length(&g, &PathSpec::segment(c(0.0, 0.0), c(1.0, 0.0)), 1e-12).unwrap();
        // int_0^1 sqrt(2 + s^2) ds
        let exact = 0.5 * (3f64.sqrt() + 2.0 * (1.0 + 3f64.sqrt()).ln() - 2.0 * 2f64.sqrt().ln());
        assert!((l - exact).abs() < 1e-10, "{l} vs {exact}");
        let prof = length_profile(&f, c(0.0, 0.0), &[]).unwrap();
        assert_eq!(prof.fan.len(), 32);
        assert!((prof.fan_min - 0.95).abs() < 1e-12);
    }

    #[test]
    fn double_points() {
        let f = LegendrianMap::zero_section(disc(), 1).unwrap();
        let r = double_point_scan(&f, 0.1);
        assert!(r.embedding_plausible && r.min_distance > 0.1);
        let sq = LegendrianMap::new(disc(), vec![s(&[(2, 1.0)])], vec![Component::zero()], Component::zero()).unwrap();
        let r = double_point_scan(&sq, 0.1);
        assert!(r.min_distance < 1e-9 && !r.embedding_plausible);
    }
}
