//! Named tolerances used by the commands, overridable from the scene
//! `tolerances` table and `--tol NAME=VALUE`.

use std::collections::BTreeMap;

use contact_forge::{forms, legendrian, normalize, spray, symplectic};

use crate::scene::{SceneError, SceneResult};

pub const DEFAULTS: &[(&str, f64)] = &[
    ("contact", forms::TOL_CONTACT),
    ("reeb", 1e-10),
    ("legendrian", 1e-12),
    ("period", legendrian::TOL_PERIOD),
    ("roundtrip", normalize::TOL_ROUNDTRIP),
    ("soundness", normalize::TOL_SOUNDNESS),
    ("frame_numeric", 1e-10),
    ("moser", 1e-7),
    ("spray_legendrian", spray::TOL_SPRAY_LEG),
    ("spray_fix", 1e-10),
    // In units of mu.
    ("spray_structure", 5.0),
    ("spray_det_ratio", 0.5),
    ("subspace", symplectic::TOL_SUBSPACE),
];

#[derive(Clone, Debug)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Self(DEFAULTS.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    pub fn set(&mut self, name: &str, value: f64) -> SceneResult<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(SceneError(format!("tolerance `{name}` must be positive, got {value}")));
        }
        match self.0.get_mut(name) {
            Some(v) => {
                *v = value;
                Ok(())
            }
            None => Err(SceneError(format!(
                "unknown tolerance `{name}` (known: {})",
                self.0.keys().cloned().collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    pub fn get(&self, name: &str) -> f64 {
        self.0[name]
    }

    /// Parses `NAME=VALUE`.
    pub fn apply_flag(&mut self, flag: &str) -> SceneResult<()> {
        let (k, v) = flag
            .split_once('=')
            .ok_or_else(|| SceneError(format!("--tol expects NAME=VALUE, got `{flag}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| SceneError(format!("--tol value `{v}` is not a number")))?;
        self.set(k.trim(), v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_rejections() {
        let mut t = Tolerances::default();
        t.apply_flag("moser=1e-6").unwrap();
        assert_eq!(t.get("moser"), 1e-6);
        assert!(t.apply_flag("nonsense=1").is_err());
        assert!(t.apply_flag("moser=-1").is_err());
        assert!(t.apply_flag("moser").is_err());
    }
}
