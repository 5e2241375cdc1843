use contact_forge::spray::{
    build_spray, compose_sprays, mu_sweep, period_map, solve_periods, verify_submersivity, SprayConfig,
    SprayFamily,
};
use contact_forge::surfaces::theta_pullback_series;
use contact_forge::{LaurentSeries, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spray(mu: f64) -> SprayFamily {
    build_spray(&SprayConfig::default_scene(mu).unwrap()).unwrap()
}

fn random_xi(rng: &mut ChaCha8Rng, radius: f64) -> [C64; 3] {
    let v: Vec<C64> = (0..3).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let r = radius * rng.random_range(0.1..1.0) / n;
    [v[0] * r, v[1] * r, v[2] * r]
}

/// Direct cancellation: `P` is affine in `zeta`, so `zeta = -P(0) / (P(1) - P(0))`
/// with both periods read off as residues of the exact product series.
fn residue_zeta(s: &SprayFamily, xi: [C64; 3]) -> C64 {
    let c = &s.controls;
    let h = c.h1.scale(xi[0]);
    let pull = theta_pullback_series(&h, &s.config.model, -80, 80).unwrap();
    let y0 = c.h2.scale(xi[1]).add(&c.h1.scale(xi[2]));
    let p0 = y0.mul(&pull).coeff(-1);
    let p1 = c.g[0].mul(&pull).coeff(-1);
    -p0 / p1
}

#[test]
fn period_map_examples() {
    let s = spray(0.01);
    let z = [C64::new(0.0, 0.0); 3];
    assert!(period_map(&s, z, &[C64::new(0.0, 0.0)]).unwrap()[0].norm() < 1e-15);
    let e = period_map(&s, z, &[C64::new(1.0, 0.0)]).unwrap()[0];
    assert!((e - 1.0).norm() < 1e-12, "{e}");
}

#[test]
fn newton_matches_direct_cancellation() {
    let s = spray(0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let xi = random_xi(&mut rng, 1e-3);
        let sol = solve_periods(&s, xi).unwrap();
        assert!(sol.residual < 1e-12);
        assert!((sol.zeta[0] - residue_zeta(&s, xi)).norm() < 1e-9);
    }
}

#[test]
fn small_xi2_zeta_is_order_mu() {
    let s = spray(0.01);
    let eps = 1e-3;
    let sol = solve_periods(&s, [C64::new(0.0, 0.0), C64::new(eps, 0.0), C64::new(0.0, 0.0)]).unwrap();
    assert!(sol.zeta[0].norm() <= s.config.k_bound * s.config.mu * eps);
    assert!(s.zeta_prime_norm().unwrap() <= s.config.k_bound * s.config.mu);
}

#[test]
fn members_are_legendrian_and_fix_p() {
    let s = spray(0.01);
    let p = s.config.p();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let xi = random_xi(&mut rng, 1e-3);
        let (f, res) = s.evaluate_certified(xi).unwrap();
        assert!(res < 1e-9);
        let v = f.eval(p);
        assert!((v[0] - p).norm() < 1e-10 && v[1].norm() < 1e-10 && v[2].norm() < 1e-10);
    }
}

#[test]
fn xi1_alone_moves_only_the_base() {
    let s = spray(0.01);
    let f = s.evaluate([C64::new(1e-3, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
    let mut moved: f64 = 0.0;
    for u in s.config.model.curve_samples() {
        let v = f.eval(u);
        moved = moved.max((v[0] - u).norm());
        assert!(v[1].norm() < 1e-15 && v[2].norm() < 1e-15);
    }
    assert!(moved > 1e-5);
}

#[test]
fn holomorphic_in_xi() {
    let s = spray(0.01);
    let xi = [C64::new(2e-4, 1e-4), C64::new(-3e-4, 0.0), C64::new(1e-4, 2e-4)];
    assert!(s.cauchy_riemann_defect(xi, s.config.q(), 1e-6).unwrap() < 1e-6);
}

#[test]
fn submersive_at_q() {
    let s = spray(0.01);
    let r = verify_submersivity(&s).unwrap();
    assert!(r.structure_deviation <= 5.0 * r.mu, "{r:?}");
    assert!(r.det_ratio > 0.5, "{r:?}");
    assert!(r.first_order_deviation < 1e-6, "{r:?}");
}

#[test]
fn mu_scaling() {
    let cfg = SprayConfig::default_scene(0.1).unwrap();
    let rows = mu_sweep(&cfg, &[0.1, 0.05, 0.025]).unwrap();
    for w in rows.windows(2) {
        let zr = w[0].zeta_prime / w[1].zeta_prime;
        let dr = w[0].structure_deviation / w[1].structure_deviation;
        assert!((1.0..=4.0).contains(&zr), "{rows:?}");
        assert!((1.0..=4.0).contains(&dr), "{rows:?}");
    }
}

#[test]
fn composed_pair_is_submersive() {
    let a = SprayConfig::default_scene(0.01).unwrap();
    let mut b = a.clone();
    std::mem::swap(&mut b.p, &mut b.q);
    b.arc = contact_forge::PathSpec::arc(C64::new(0.0, 0.0), 0.93, 1.6, 0.0);
    let comp = compose_sprays(vec![build_spray(&a).unwrap(), build_spray(&b).unwrap()]).unwrap();
    assert_eq!(comp.params(), 6);
    let sv = comp.pair_singular_values(a.p(), a.q()).unwrap();
    assert!(sv[5] > 1e-3, "{sv:?}");
    let zero = vec![C64::new(0.0, 0.0); 6];
    let f = comp.evaluate(&zero).unwrap();
    assert!(f.pullback_residual().0 < 1e-12);
    let _ = LaurentSeries::zero("u");
}
