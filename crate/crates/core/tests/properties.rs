//! Invariants over randomly drawn instances; each case seeds one ChaCha stream.

use std::f64::consts::PI;

use contact_forge::forms::default_samples;
use contact_forge::frame::{frame_complete, FrameMode};
use contact_forge::legendrian::legendrianize;
use contact_forge::normalize::{normalize, Layout, NormalizeOptions};
use contact_forge::random::{
    frame_instance, legendrian_instance, perturbed_contact, random_fibre, random_isotropic, random_subspace, stream,
};
use contact_forge::surfaces::{FlowKind, SurfaceModel};
use contact_forge::symplectic::{
    dimension_certificate, isotropy_check, lagrangian_complexity_check, normal_split, omega_perp, subspace_distance,
    Field, IsotropyClass, SymplecticFibre, TOL_SUBSPACE,
};
use contact_forge::{JetSpace, ThetaSpec, C64};
use proptest::prelude::*;

fn field(real: bool) -> Field {
    if real {
        Field::Real
    } else {
        Field::Complex
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dimension_formula(seed in any::<u64>(), n in 1usize..=3, real in any::<bool>(), standard in any::<bool>()) {
        let mut r = stream(seed, 0);
        let fibre = if standard { SymplecticFibre::standard(n) } else { random_fibre(&mut r, n) };
        let k = r.random_range(0..=2 * n);
        let u = random_subspace(&mut r, &fibre, field(real), k).unwrap();
        let c = dimension_certificate(&u, &fibre);
        prop_assert!(c.holds, "{c:?}");
    }

    #[test]
    fn perp_is_an_involution_on_complex_subspaces(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = stream(seed, 1);
        let fibre = random_fibre(&mut r, n);
        let k = r.random_range(0..=2 * n);
        let u = random_subspace(&mut r, &fibre, Field::Complex, k).unwrap();
        let back = omega_perp(&omega_perp(&u, &fibre), &fibre);
        prop_assert!(subspace_distance(&u, &back) < TOL_SUBSPACE);
    }

    #[test]
    fn lagrangians_are_complex(seed in any::<u64>(), n in 1usize..=3, real in any::<bool>()) {
        let mut r = stream(seed, 2);
        let fibre = SymplecticFibre::standard(n);
        let u = random_isotropic(&mut r, &fibre, field(real), if real { 2 * n } else { n }).unwrap();
        let rep = isotropy_check(&u, &fibre);
        prop_assert_eq!(rep.class, IsotropyClass::Lagrangian);
        prop_assert!(lagrangian_complexity_check(&u, &fibre).unwrap());
    }

    #[test]
    fn split_ranks_fill_the_normal_space(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = stream(seed, 3);
        let m = r.random_range(1..=n);
        let fibre = SymplecticFibre::standard(n);
        let tm: Vec<_> = (0..3).map(|_| random_isotropic(&mut r, &fibre, Field::Complex, m).unwrap()).collect();
        let rep = normal_split(&tm, &fibre).unwrap();
        for p in &rep.points {
            prop_assert_eq!(p.ranks, (1, m, 2 * (n - m)));
            prop_assert_eq!(p.ranks.0 + p.ranks.1 + p.ranks.2, 2 * n + 1 - m);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn frame_completions_agree(seed in any::<u64>(), shape in prop::sample::select(vec![(1usize, 2usize), (1, 3), (2, 3)])) {
        let samples: Vec<C64> = (0..64).map(|k| C64::from_polar(0.8, 2.0 * PI * k as f64 / 64.0)).collect();
        let a = frame_instance(&mut stream(seed, 4), shape.0, shape.1, &samples).unwrap();
        let ex = frame_complete(&a, FrameMode::Exact, &samples, 0.8).unwrap();
        prop_assert!(ex.certificate.exact_identity);
        prop_assert_eq!(ex.certificate.residual, 0.0);
        prop_assert!(ex.certificate.det_unit.is_some());
        let nu = frame_complete(&a, FrameMode::Numeric, &samples, 0.8).unwrap();
        prop_assert!(nu.certificate.residual < 1e-10);
    }

    #[test]
    fn legendrianization_is_exact_without_periods(seed in any::<u64>(), n in 1usize..=3, on_annulus in any::<bool>()) {
        let model = if on_annulus {
            SurfaceModel::annulus(0.5, 1.0, ThetaSpec::DU_OVER_U, FlowKind::Euler).unwrap()
        } else {
            SurfaceModel::disc(1.0).unwrap()
        };
        let f = legendrian_instance(&mut stream(seed, 5), &model, n, C64::new(0.0, 0.0)).unwrap();
        let (_, rep) = legendrianize(&f, model.basepoint).unwrap();
        prop_assert!(rep.certificate.pullback_residual < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn normalization_round_trips(seed in any::<u64>()) {
        let names = Layout { m: 1, n: 1 }.names();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let space = JetSpace::curve(ThetaSpec::DU, &refs, 3, (-3, 3)).unwrap();
        let (_, beta) = perturbed_contact(&mut stream(seed, 6), &space, 0.1).unwrap();
        let opts = NormalizeOptions { mode: FrameMode::Numeric, samples: default_samples(&space) };
        let dec = normalize(&beta, &opts).unwrap();
        prop_assert!(dec.round_trip_residual(&beta).unwrap() < 1e-10);
    }
}
