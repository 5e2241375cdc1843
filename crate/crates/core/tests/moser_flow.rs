use std::sync::Arc;

use contact_forge::forms::Form1;
use contact_forge::moser::{integrate_flow, moser_field, moser_normalize, solve_h, MoserProblem};
use contact_forge::{Jet, JetSpace, ThetaSpec, C64};

fn setup(d: usize) -> (Arc<JetSpace>, Form1) {
    let s = JetSpace::curve(ThetaSpec::DU, &["z", "y1"], d, (-3, 3)).unwrap();
    let mut a = Form1::zero(&s);
    a.set(1, Jet::one(&s));
    a.set(0, -Jet::var(&s, "y1").unwrap());
    (s, a)
}

/// `alpha + eps (y1 + y1^2 + u z) theta + eps z y1 dy1 + eps/2 y1^2 dz`.
fn perturbed(s: &Arc<JetSpace>, a: &Form1, eps: f64) -> Form1 {
    let z = Jet::var(s, "z").unwrap();
    let y = Jet::var(s, "y1").unwrap();
    let u = Jet::base_monomial(s, 0, 1, C64::new(1.0, 0.0));
    let mut b = a.clone();
    b.add_term(0, &(&(&(&y * &y) + &(&z * &u)) + &y).scale_re(eps));
    b.add_term(2, &(&z * &y).scale_re(eps));
    b.add_term(1, &(&y * &y).scale_re(0.5 * eps));
    b
}

#[test]
fn pipeline_at_default_steps() {
    let (s, a) = setup(3);
    let b = perturbed(&s, &a, 0.1);
    let (flow, rep) = moser_normalize(&b, &a, 1, 100).unwrap();
    assert!(rep.residual < 1e-7, "{rep:?}");
    assert!(rep.fixes_zero_section < 1e-12);
    assert!(rep.max_zero_section < 1e-12);
    assert!(rep.max_pde_residual < 1e-11);
    assert!(rep.max_y_residual < 1e-11);
    assert_eq!(rep.certified_degrees, vec![0, 1, 2]);
    assert_eq!(flow.snapshots.len(), 101);
    assert!(flow.snapshots.iter().all(|(_, c)| c.fixes_zero_section(1e-12)));
}

#[test]
fn small_z_remainder() {
    let (s, a) = setup(3);
    let z = Jet::var(&s, "z").unwrap();
    let y = Jet::var(&s, "y1").unwrap();
    let mut b = a.clone();
    b.add_term(2, &(&z * &y).scale_re(1e-2));
    let (_, rep) = moser_normalize(&b, &a, 1, 100).unwrap();
    assert!(rep.residual < 1e-9);
}

#[test]
fn rk4_order() {
    let (s, a) = setup(3);
    let b = perturbed(&s, &a, 0.5);
    let maps: Vec<_> = [50, 100, 200]
        .iter()
        .map(|&k| integrate_flow(&MoserProblem::new(&a, &b, 1, k).unwrap()).unwrap().final_map)
        .collect();
    let ratio = maps[0].max_diff(&maps[1]) / maps[1].max_diff(&maps[2]);
    assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
}

#[test]
fn refinement_does_not_increase_residual() {
    let (s, a) = setup(3);
    let b = perturbed(&s, &a, 0.5);
    let res: Vec<f64> = [25, 50, 100, 200]
        .iter()
        .map(|&k| moser_normalize(&b, &a, 1, k).unwrap().1.residual)
        .collect();
    assert!(res.windows(2).all(|w| w[1] <= w[0]), "{res:?}");
    assert!(res[2] / res[3] > 10.0, "{res:?}");
}

#[test]
fn truncation_flag_at_low_degree() {
    let (s2, a2) = setup(2);
    let (_, low) = moser_normalize(&perturbed(&s2, &a2, 0.5), &a2, 1, 100).unwrap();
    assert!(low.truncation_dominated);
    let (s4, a4) = setup(4);
    let (_, high) = moser_normalize(&perturbed(&s4, &a4, 0.5), &a4, 1, 100).unwrap();
    assert!(high.certified_degrees.contains(&2));
    assert!(high.residual < 1e-6);
}

#[test]
fn field_vanishes_on_zero_section() {
    let (s, a) = setup(3);
    let b = perturbed(&s, &a, 0.3);
    let p = MoserProblem::new(&a, &b, 1, 10).unwrap();
    for t in [0.0, 0.37, 1.0] {
        let (v, d) = moser_field(&p, t).unwrap();
        assert!(d.zero_section < 1e-12);
        assert!(v.comps().iter().all(|c| c.degree_part(0).is_zero()));
        let h = solve_h(&p, t).unwrap();
        assert!(h.truncate_degree(1).max_abs() < 1e-14);
    }
}
