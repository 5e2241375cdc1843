//! Seeded random instances. Every generator draws from a ChaCha20 stream
//! selected by `(seed, stream)`, so instance `k` of a family is reproducible
//! independently of how many other instances were drawn.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::forms::{contact_check, default_samples, Form1, TOL_CONTACT};
use crate::frame::{rank_check, FunctionMatrix, TOL_RANK};
use crate::legendrian::{Component, LegendrianMap};
use crate::normalize::{normal_form, Layout};
use crate::series::{Jet, JetSpace, LaurentSeries};
use crate::surfaces::SurfaceModel;
use crate::symplectic::{CVec, Field, Subspace, SymplecticFibre};

/// Attempts before a rejection sampler gives up.
const MAX_DRAWS: usize = 64;

/// Stream `stream` of the generator seeded by `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform in the square `[-s, s]^2`.
pub fn complex(rng: &mut impl Rng, s: f64) -> Complex64 {
    Complex64::new(rng.random_range(-s..=s), rng.random_range(-s..=s))
}

/// Gaussian integer with parts in `[-b, b]`.
pub fn gaussian_int(rng: &mut impl Rng, b: i64) -> Complex64 {
    Complex64::new(rng.random_range(-b..=b) as f64, rng.random_range(-b..=b) as f64)
}

pub fn laurent(rng: &mut impl Rng, lo: i32, hi: i32, s: f64) -> LaurentSeries {
    let terms: Vec<(i32, Complex64)> = (lo..=hi).map(|k| (k, complex(rng, s))).collect();
    LaurentSeries::from_terms("u", &terms)
}

fn laurent_int(rng: &mut impl Rng, lo: i32, hi: i32, b: i64) -> LaurentSeries {
    let terms: Vec<(i32, Complex64)> = (lo..=hi).map(|k| (k, gaussian_int(rng, b))).collect();
    LaurentSeries::from_terms("u", &terms)
}

/// `m x p` matrix of Gaussian-integer Laurent polynomials in `u^-1..u`,
/// redrawn until it has full rank on `samples` and its maximal minors have
/// no common zero in `C*`.
pub fn frame_instance(rng: &mut impl Rng, m: usize, p: usize, samples: &[Complex64]) -> Result<FunctionMatrix> {
    let mut last = None;
    for _ in 0..MAX_DRAWS {
        let entries = (0..m * p)
            .map(|_| {
                let lo = rng.random_range(-1..=0);
                let hi = rng.random_range(lo..=1);
                laurent_int(rng, lo, hi, 2)
            })
            .collect();
        let a = FunctionMatrix::new(m, p, entries)?;
        if let Err(e) = rank_check(&a, samples, TOL_RANK) {
            last = Some(e);
            continue;
        }
        match common_zero(&maximal_minors(&a)) {
            Some(w) => last = Some(Error::RankDeficient { witness: w, sigma: 0.0 }),
            None => return Ok(a),
        }
    }
    Err(last.unwrap())
}

/// Maximal minors of a matrix with at most two rows.
fn maximal_minors(a: &FunctionMatrix) -> Vec<LaurentSeries> {
    match a.rows() {
        1 => (0..a.cols()).map(|j| a.get(0, j).clone()).collect(),
        2 => {
            let mut out = Vec::new();
            for i in 0..a.cols() {
                for j in i + 1..a.cols() {
                    out.push(a.get(0, i).mul(a.get(1, j)).sub(&a.get(0, j).mul(a.get(1, i))).trimmed());
                }
            }
            out
        }
        r => unimplemented!("minors of {r}-row matrices"),
    }
}

/// Nonzero roots of a Laurent polynomial, as eigenvalues of the companion
/// matrix of `u^-kmin f`.
fn nonzero_roots(f: &LaurentSeries) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = f.trimmed().coeffs().to_vec();
    while c.first().is_some_and(|x| x.norm() == 0.0) {
        c.remove(0);
    }
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    let d = c.len().saturating_sub(1);
    if d == 0 {
        return Vec::new();
    }
    let lead = c[d];
    let comp = DMatrix::from_fn(d, d, |i, j| {
        if j == d - 1 {
            -c[i] / lead
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    comp.eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
}

/// A point of `C*` where every polynomial vanishes, if any.
fn common_zero(fs: &[LaurentSeries]) -> Option<Complex64> {
    let pivot = fs.iter().filter(|f| !f.is_zero()).min_by_key(|f| f.trimmed().coeffs().len())?;
    nonzero_roots(pivot).into_iter().find(|&r| {
        fs.iter().all(|f| {
            let scale = f.max_abs() * r.norm().max(r.norm().recip()).powi(f.kmax().abs().max(f.kmin().abs()) + 1);
            f.eval(r).norm() <= 1e-8 * scale.max(1.0)
        })
    })
}

/// A map into `R x C^{2n}` over `model` whose only period defect is `defect`.
///
/// `x_1 = u`, the other components are random Laurent polynomials in the
/// model window; the `u^{-1-k}` coefficient of `y_1` (for `theta = a u^k du`)
/// is tuned so that the residue of `y_1 theta + sum y_i dx_i` at 0 equals
/// `defect`; the loop period of `f^* alpha` is then `-2 pi i defect`.
/// On models without loops no tuning happens.
pub fn legendrian_instance(rng: &mut impl Rng, model: &SurfaceModel, n: usize, defect: Complex64) -> Result<LegendrianMap> {
    let (lo, hi) = model.window(3);
    let draw = |rng: &mut _| laurent(rng, lo, hi, 0.2);
    let mut x = vec![Component::identity()];
    let mut xs = Vec::new();
    for _ in 1..n {
        let s = draw(rng);
        xs.push(s.clone());
        x.push(Component::Series(s));
    }
    let mut ys: Vec<LaurentSeries> = (0..n).map(|_| draw(rng)).collect();
    let z = draw(rng);
    if !model.loops.is_empty() {
        let t = model.theta;
        // Residue of y_1 a u^k du + sum_i y_i x_i' du + z' du.
        let mut res = ys[0].mul(&LaurentSeries::monomial("u", t.coeff, t.power)).coeff(-1);
        for (yi, xi) in ys[1..].iter().zip(&xs) {
            res += yi.mul(&xi.derivative()).coeff(-1);
        }
        let k = -1 - t.power;
        let fix = (defect - res) / t.coeff;
        ys[0] = ys[0].add(&LaurentSeries::monomial("u", fix, k));
        // The z' term has no residue; y_1 now carries the defect.
    }
    LegendrianMap::new(
        model.clone(),
        x,
        ys.into_iter().map(Component::Series).collect(),
        Component::Series(z),
    )
}

/// Random jet on `space` with fiber degrees in `degrees`, coefficients
/// uniform in `[-s, s]^2`. Base exponents are `0..=1` from fiber degree 2 on
/// and `0` below, so the frame matrices met by normalization have constant
/// entries and full rank over the Laurent ring whenever they do at one point.
pub fn random_jet(rng: &mut impl Rng, space: &Arc<JetSpace>, degrees: std::ops::RangeInclusive<usize>, s: f64) -> Result<Jet> {
    let mut acc = Jet::zero(space);
    let (wlo, whi) = space.window();
    let (blo, bhi) = (wlo.max(0), whi.min(1));
    for i in 0..space.n_fiber_monos() {
        if !degrees.contains(&space.fiber_mono_degree(i)) {
            continue;
        }
        let exps = space.fiber_mono(i).to_vec();
        let top = if space.fiber_mono_degree(i) >= 2 { bhi } else { blo };
        for b in blo..=top {
            let base = vec![b; space.base_dim()];
            acc = &acc + &Jet::term(space, &exps, &base, complex(rng, s))?;
        }
    }
    Ok(acc)
}

/// `alpha + s R` with `alpha` the normal form of the layout of `space` and
/// `R` a random remainder vanishing on the zero section, redrawn until contact.
pub fn perturbed_contact(rng: &mut impl Rng, space: &Arc<JetSpace>, s: f64) -> Result<(Form1, Form1)> {
    let layout = Layout::of(space)?;
    let alpha = normal_form(space, &layout);
    let samples = default_samples(space);
    let mut last = None;
    for _ in 0..MAX_DRAWS {
        let mut beta = alpha.clone();
        for slot in 0..space.slots() {
            beta.add_term(slot, &random_jet(rng, space, 1..=space.degree(), s)?);
        }
        match contact_check(&beta, layout.n, &samples, TOL_CONTACT) {
            Ok(_) => return Ok((alpha, beta)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap())
}

/// `alpha` as above plus `s R` where `R` also has base-only terms in the
/// fiber slots, so the linear stage of normalization has work to do.
pub fn skewed_contact(rng: &mut impl Rng, space: &Arc<JetSpace>, s: f64) -> Result<(Form1, Form1)> {
    let layout = Layout::of(space)?;
    let alpha = normal_form(space, &layout);
    let samples = default_samples(space);
    let mut last = None;
    for _ in 0..MAX_DRAWS {
        let mut beta = alpha.clone();
        for slot in 0..space.slots() {
            let lowest = if slot < space.base_dim() { 1 } else { 0 };
            beta.add_term(slot, &random_jet(rng, space, lowest..=space.degree(), s)?);
        }
        match contact_check(&beta, layout.n, &samples, TOL_CONTACT) {
            Ok(_) => return Ok((alpha, beta)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap())
}

/// `alpha + s gamma` with `gamma` and `d gamma` vanishing on the zero section:
/// every coefficient of `gamma` has fiber degree at least 2.
pub fn tangent_pair(rng: &mut impl Rng, space: &Arc<JetSpace>, s: f64) -> Result<(Form1, Form1)> {
    let layout = Layout::of(space)?;
    let alpha = normal_form(space, &layout);
    let mut beta = alpha.clone();
    for slot in 0..space.slots() {
        beta.add_term(slot, &random_jet(rng, space, 2..=space.degree(), s)?);
    }
    Ok((alpha, beta))
}

pub fn random_vector(rng: &mut impl Rng, d: usize) -> CVec {
    CVec::from_fn(d, |_, _| complex(rng, 1.0))
}

/// `A^T Omega_std A` for a random `A` near the identity.
pub fn random_fibre(rng: &mut impl Rng, n: usize) -> SymplecticFibre {
    let d = 2 * n;
    let a = DMatrix::from_fn(d, d, |i, j| {
        let e = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        e + complex(rng, 0.3)
    });
    let std = SymplecticFibre::standard(n);
    SymplecticFibre {
        n,
        omega: a.transpose() * std.omega * a,
    }
}

/// Random subspace of real dimension up to `4n` (real) or complex dimension up to `2n`.
pub fn random_subspace(rng: &mut impl Rng, fibre: &SymplecticFibre, field: Field, k: usize) -> Result<Subspace> {
    let d = fibre.dim();
    let basis = (0..k).map(|_| random_vector(rng, d)).collect();
    Subspace::new(field, d, basis)
}

/// Basis of a random complex Lagrangian subspace of `fibre`.
pub fn random_lagrangian_basis(rng: &mut impl Rng, fibre: &SymplecticFibre) -> Vec<CVec> {
    let (n, d) = (fibre.n, fibre.dim());
    // Symplectic basis by Gram-Schmidt: pick e_j, then f_j with omega(e_j, f_j) = 1,
    // projecting out earlier pairs. span{e_j} is Lagrangian.
    let mut es: Vec<CVec> = Vec::new();
    let mut fs: Vec<CVec> = Vec::new();
    let project = |v: CVec, es: &[CVec], fs: &[CVec]| {
        let mut w = v.clone();
        for (e, f) in es.iter().zip(fs) {
            w = w - e * fibre.pair(&v, f) + f * fibre.pair(&v, e);
        }
        w
    };
    for _ in 0..n {
        let e = project(random_vector(rng, d), &es, &fs);
        let mut f = project(random_vector(rng, d), &es, &fs);
        for _ in 0..MAX_DRAWS {
            if fibre.pair(&e, &f).norm() > 1e-3 {
                break;
            }
            f = project(random_vector(rng, d), &es, &fs);
        }
        let c = fibre.pair(&e, &f);
        es.push(e);
        fs.push(f / c);
    }
    es
}

/// Random isotropic subspace: `k` random combinations inside a random Lagrangian,
/// taken over `field` (`k <= n` complex, `k <= 2n` real).
pub fn random_isotropic(rng: &mut impl Rng, fibre: &SymplecticFibre, field: Field, k: usize) -> Result<Subspace> {
    let lag = random_lagrangian_basis(rng, fibre);
    let i = Complex64::new(0.0, 1.0);
    let pool: Vec<CVec> = match field {
        Field::Complex => lag.clone(),
        Field::Real => lag.iter().flat_map(|v| [v.clone(), v * i]).collect(),
    };
    let basis = (0..k)
        .map(|_| {
            pool.iter().fold(CVec::zeros(fibre.dim()), |acc, v| {
                let c = match field {
                    Field::Complex => complex(rng, 1.0),
                    Field::Real => Complex64::new(rng.random_range(-1.0..=1.0), 0.0),
                };
                acc + v * c
            })
        })
        .collect();
    Subspace::new(field, fibre.dim(), basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ThetaSpec;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = (0..4).map(|_| stream(1, 3).random()).collect();
        let b: Vec<f64> = (0..4).map(|_| stream(1, 3).random()).collect();
        assert_eq!(a, b);
        let mut r1 = stream(1, 3);
        let mut r2 = stream(1, 4);
        assert_ne!(r1.random::<u64>(), r2.random::<u64>());
    }

    #[test]
    fn legendrian_defect_is_the_period() {
        let m = SurfaceModel::annulus(0.5, 1.0, ThetaSpec::DU_OVER_U, crate::surfaces::FlowKind::Euler).unwrap();
        let d = Complex64::new(0.0, 0.25);
        let f = legendrian_instance(&mut stream(5, 0), &m, 2, d).unwrap();
        let p = f.periods().unwrap()[0];
        assert!((p + d * Complex64::new(0.0, 2.0 * std::f64::consts::PI)).norm() < 1e-12, "{p}");
    }

    #[test]
    fn common_zero_detects_shared_factor() {
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        // (u - i)(u + 2) and (u - i) u^-1.
        let f = LaurentSeries::from_terms("u", &[(0, -2.0 * i), (1, 2.0 - i), (2, one)]);
        let g = LaurentSeries::from_terms("u", &[(-1, -i), (0, one)]);
        let w = common_zero(&[f.clone(), g]).unwrap();
        assert!((w - i).norm() < 1e-10);
        let h = LaurentSeries::from_terms("u", &[(0, one), (1, one)]);
        assert!(common_zero(&[f, h]).is_none());
    }

    #[test]
    fn isotropic_instances_are_isotropic() {
        let mut rng = stream(9, 0);
        let f = random_fibre(&mut rng, 3);
        let u = random_isotropic(&mut rng, &f, Field::Real, 4).unwrap();
        for a in &u.basis {
            for b in &u.basis {
                assert!(f.pair(a, b).norm() < 1e-12);
            }
        }
    }
}
