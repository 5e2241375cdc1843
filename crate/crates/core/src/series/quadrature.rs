use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance between successive quadrature refinements.
pub const TOL_QUAD: f64 = 1e-12;
/// Hard cap on the number of integrand evaluations.
pub const MAX_POINTS: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathKind {
    /// `center + radius e^{it}`, counterclockwise when `orientation > 0`.
    Circle {
        center: [f64; 2],
        radius: f64,
        #[serde(default = "one")]
        orientation: i8,
    },
    Polyline {
        points: Vec<[f64; 2]>,
    },
    /// `center + radius e^{it}` for `t` running from `start` to `end`.
    Arc {
        center: [f64; 2],
        radius: f64,
        start: f64,
        end: f64,
    },
}

fn one() -> i8 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    #[serde(flatten)]
    pub kind: PathKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn c(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl PathSpec {
    pub fn circle(radius: f64) -> Self {
        Self {
            kind: PathKind::Circle {
                center: [0.0, 0.0],
                radius,
                orientation: 1,
            },
            label: None,
        }
    }

    pub fn segment(a: Complex64, b: Complex64) -> Self {
        Self::polyline(&[a, b])
    }

    pub fn polyline(points: &[Complex64]) -> Self {
        Self {
            kind: PathKind::Polyline {
                points: points.iter().map(|p| [p.re, p.im]).collect(),
            },
            label: None,
        }
    }

    pub fn arc(center: Complex64, radius: f64, start: f64, end: f64) -> Self {
        Self {
            kind: PathKind::Arc {
                center: [center.re, center.im],
                radius,
                start,
                end,
            },
            label: None,
        }
    }

    pub fn labeled(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn is_closed(&self) -> bool {
        match &self.kind {
            PathKind::Circle { .. } => true,
            PathKind::Polyline { points } => points.len() > 2 && points.first() == points.last(),
            PathKind::Arc { start, end, .. } => ((end - start).abs() - 2.0 * PI).abs() < 1e-14,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |p: &[f64; 2]| p[0].is_finite() && p[1].is_finite();
        match &self.kind {
            PathKind::Circle { center, radius, .. } | PathKind::Arc { center, radius, .. } => {
                if !finite(center) || !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Structural("circle or arc needs a positive finite radius".into()));
                }
            }
            PathKind::Polyline { points } => {
                if points.len() < 2 || !points.iter().all(finite) {
                    return Err(Error::Structural("polyline needs two finite points".into()));
                }
                if points.len() == 2 && points[0] == points[1] {
                    return Err(Error::Structural("polyline endpoints coincide".into()));
                }
            }
        }
        Ok(())
    }

    pub fn start(&self) -> Complex64 {
        self.point(0.0)
    }

    pub fn end(&self) -> Complex64 {
        self.point(1.0)
    }

    /// Point at parameter `s` in `[0, 1]`.
    pub fn point(&self, s: f64) -> Complex64 {
        match &self.kind {
            PathKind::Circle {
                center,
                radius,
                orientation,
            } => c(*center) + Complex64::from_polar(*radius, 2.0 * PI * s * f64::from(*orientation)),
            PathKind::Arc {
                center,
                radius,
                start,
                end,
            } => c(*center) + Complex64::from_polar(*radius, start + (end - start) * s),
            PathKind::Polyline { points } => {
                let n = points.len() - 1;
                let x = (s * n as f64).clamp(0.0, n as f64);
                let i = (x.floor() as usize).min(n - 1);
                let t = x - i as f64;
                c(points[i]) * (1.0 - t) + c(points[i + 1]) * t
            }
        }
    }

    /// `n` points spread uniformly in the parameter (closed paths omit the repeated endpoint).
    pub fn sample(&self, n: usize) -> Vec<Complex64> {
        let denom = if self.is_closed() { n } else { n.saturating_sub(1).max(1) };
        (0..n).map(|i| self.point(i as f64 / denom as f64)).collect()
    }

    /// Smooth pieces as `(z(s), z'(s))` parametrizations over `[0, 1]`.
    fn pieces(&self) -> Vec<Piece> {
        match &self.kind {
            PathKind::Circle {
                center,
                radius,
                orientation,
            } => {
                let o = f64::from(*orientation);
                vec![Piece::Arc {
                    center: c(*center),
                    radius: *radius,
                    start: 0.0,
                    sweep: 2.0 * PI * o,
                }]
            }
            PathKind::Arc {
                center,
                radius,
                start,
                end,
            } => vec![Piece::Arc {
                center: c(*center),
                radius: *radius,
                start: *start,
                sweep: end - start,
            }],
            PathKind::Polyline { points } => points
                .windows(2)
                .map(|w| Piece::Segment(c(w[0]), c(w[1])))
                .collect(),
        }
    }

    /// Euclidean length of the path itself.
    pub fn length(&self) -> f64 {
        self.pieces().iter().map(Piece::length).sum()
    }
}

#[derive(Clone, Copy)]
enum Piece {
    Segment(Complex64, Complex64),
    Arc {
        center: Complex64,
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

impl Piece {
    fn eval(&self, s: f64) -> (Complex64, Complex64) {
        match *self {
            Piece::Segment(a, b) => (a + (b - a) * s, b - a),
            Piece::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let e = Complex64::from_polar(radius, start + sweep * s);
                (center + e, e * Complex64::new(0.0, sweep))
            }
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Piece::Segment(a, b) => (b - a).norm(),
            Piece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }
}

/// Certified quadrature value.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Quadrature {
    pub value: Complex64,
    pub points: usize,
    /// Magnitude of the last refinement change.
    pub last_change: f64,
}

/// `int_path w(u) du` for a 1-form `w(u) du`.
///
/// Closed circles use the trapezoidal rule with doubling from 64 nodes; all
/// other paths use 16-point Gauss-Legendre with dyadic subdivision.
pub fn path_integral(
    w: &(dyn Fn(Complex64) -> Complex64 + Sync),
    path: &PathSpec,
    tol: f64,
) -> Result<Quadrature> {
    path.validate()?;
    match &path.kind {
        PathKind::Circle { .. } => trapezoid_circle(w, &path.pieces()[0], tol),
        _ => {
            let mut total = Quadrature {
                value: Complex64::new(0.0, 0.0),
                points: 0,
                last_change: 0.0,
            };
            let pieces = path.pieces();
            let share = tol / pieces.len() as f64;
            for p in &pieces {
                let q = gauss_adaptive(w, p, share)?;
                total.value += q.value;
                total.points += q.points;
                total.last_change = total.last_change.max(q.last_change);
            }
            Ok(total)
        }
    }
}

/// Integral of a scalar density along the path with respect to arclength.
pub fn arclength_integral(
    w: &(dyn Fn(Complex64, Complex64) -> f64 + Sync),
    path: &PathSpec,
    tol: f64,
) -> Result<f64> {
    let mut total = 0.0;
    let pieces = path.pieces();
    for p in &pieces {
        // z'(s) is passed as the (unnormalized) tangent so integrands may use it.
        let f = |s: f64| {
            let (z, dz) = p.eval(s);
            Complex64::new(w(z, dz), 0.0)
        };
        total += gauss_scalar(&f, tol / pieces.len() as f64)?.value.re;
    }
    Ok(total)
}

fn trapezoid_circle(
    w: &(dyn Fn(Complex64) -> Complex64 + Sync),
    piece: &Piece,
    tol: f64,
) -> Result<Quadrature> {
    let f = |s: f64| {
        let (z, dz) = piece.eval(s);
        w(z) * dz
    };
    let mut n = 64usize;
    let mut sum: Complex64 = (0..n).map(|k| f(k as f64 / n as f64)).sum();
    let mut prev = sum / n as f64;
    loop {
        let odd: Complex64 = (0..n).map(|k| f((2 * k + 1) as f64 / (2 * n) as f64)).sum();
        sum += odd;
        n *= 2;
        let cur = sum / n as f64;
        let change = (cur - prev).norm();
        if !cur.re.is_finite() || !cur.im.is_finite() {
            return Err(Error::NonFinite("circle quadrature"));
        }
        if change < tol {
            return Ok(Quadrature {
                value: cur,
                points: n,
                last_change: change,
            });
        }
        if n >= MAX_POINTS {
            return Err(Error::QuadratureFailure {
                points: n,
                last_change: change,
            });
        }
        prev = cur;
    }
}

fn gauss_adaptive(
    w: &(dyn Fn(Complex64) -> Complex64 + Sync),
    piece: &Piece,
    tol: f64,
) -> Result<Quadrature> {
    let f = |s: f64| {
        let (z, dz) = piece.eval(s);
        w(z) * dz
    };
    gauss_scalar(&f, tol)
}

fn gauss_scalar(f: &dyn Fn(f64) -> Complex64, tol: f64) -> Result<Quadrature> {
    let whole = gl16(f, 0.0, 1.0);
    let mut points = 16;
    let mut worst = 0.0f64;
    let value = refine(f, 0.0, 1.0, whole, tol, 0, &mut points, &mut worst)?;
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::NonFinite("arc quadrature"));
    }
    Ok(Quadrature {
        value,
        points,
        last_change: worst,
    })
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    whole: Complex64,
    tol: f64,
    depth: usize,
    points: &mut usize,
    worst: &mut f64,
) -> Result<Complex64> {
    let m = 0.5 * (a + b);
    let left = gl16(f, a, m);
    let right = gl16(f, m, b);
    *points += 32;
    let change = (left + right - whole).norm();
    // Rounding floor: refinements cannot resolve below a few ulps of the value.
    let floor = 32.0 * f64::EPSILON * whole.norm();
    if change < tol.max(floor) {
        *worst = worst.max(change);
        return Ok(left + right);
    }
    if *points >= MAX_POINTS || depth > 48 {
        return Err(Error::QuadratureFailure {
            points: *points,
            last_change: change,
        });
    }
    let l = refine(f, a, m, left, 0.5 * tol, depth + 1, points, worst)?;
    let r = refine(f, m, b, right, 0.5 * tol, depth + 1, points, worst)?;
    Ok(l + r)
}

fn gl16(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64) -> Complex64 {
    let (nodes, weights) = gauss_legendre_16();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(weights)
        .map(|(x, wt)| f(mid + half * x) * *wt)
        .sum::<Complex64>()
        * half
}

/// Nodes and weights of the 16-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre_16() -> &'static ([f64; 16], [f64; 16]) {
    static RULE: OnceLock<([f64; 16], [f64; 16])> = OnceLock::new();
    RULE.get_or_init(|| {
        const N: usize = 16;
        let mut nodes = [0.0; N];
        let mut weights = [0.0; N];
        for i in 0..N {
            let mut x = (PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=N {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_of_du_over_u() {
        let q = path_integral(&|u: Complex64| u.inv(), &PathSpec::circle(1.0), TOL_QUAD).unwrap();
        assert!((q.value - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-12);
        let q = path_integral(&|_| Complex64::new(1.0, 0.0), &PathSpec::circle(0.7), TOL_QUAD).unwrap();
        assert!(q.value.norm() < 1e-12);
    }

    #[test]
    fn segment_integral_of_cubic() {
        let p = PathSpec::segment(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        let q = path_integral(&|u: Complex64| u.powi(3), &p, TOL_QUAD).unwrap();
        assert!((q.value.re - 0.25).abs() < 1e-14);
    }

    #[test]
    fn gauss_weights_sum_to_two() {
        let (_, w) = gauss_legendre_16();
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn arc_matches_antiderivative() {
        let p = PathSpec::arc(Complex64::new(0.0, 0.0), 2.0, 0.0, 1.3);
        let q = path_integral(&|u: Complex64| u * u, &p, TOL_QUAD).unwrap();
        let exact = (p.end().powi(3) - p.start().powi(3)) / 3.0;
        assert!((q.value - exact).norm() < 1e-12);
    }
}
