//! Fixtures shared by the kernel benchmarks.

use std::sync::Arc;

use contact_forge::forms::Form1;
use contact_forge::normalize::Layout;
use contact_forge::random::{perturbed_contact, random_jet, stream};
use contact_forge::{Jet, JetSpace, Result, ThetaSpec};

/// Curve jet space of the normal-form layout with `n` fibre pairs.
pub fn curve_space(n: usize, degree: usize) -> Result<Arc<JetSpace>> {
    let names = Layout { m: 1, n }.names();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    JetSpace::curve(ThetaSpec::DU, &refs, degree, (-3, 3))
}

/// Two dense jets of fibre degree `0..=degree`.
pub fn jet_pair(space: &Arc<JetSpace>) -> Result<(Jet, Jet)> {
    let mut r = stream(0, 0);
    let d = space.degree();
    Ok((random_jet(&mut r, space, 0..=d, 0.5)?, random_jet(&mut r, space, 0..=d, 0.5)?))
}

/// A perturbed contact form on `space`.
pub fn contact_form(space: &Arc<JetSpace>) -> Result<Form1> {
    Ok(perturbed_contact(&mut stream(0, 1), space, 0.1)?.1)
}
