use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base coframe element `theta = coeff * u^power * du`.
///
/// Only monomial densities are supported so that `1/g` stays an exact
/// Laurent monomial; `du` and `du/u` are the shipped cases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaSpec {
    pub coeff: Complex64,
    pub power: i32,
}

impl ThetaSpec {
    pub const DU: ThetaSpec = ThetaSpec {
        coeff: Complex64::new(1.0, 0.0),
        power: 0,
    };
    pub const DU_OVER_U: ThetaSpec = ThetaSpec {
        coeff: Complex64::new(1.0, 0.0),
        power: -1,
    };

    pub fn parse(s: &str) -> Result<Self> {
        match s.replace(' ', "").as_str() {
            "du" => Ok(Self::DU),
            "du/u" => Ok(Self::DU_OVER_U),
            other => Err(Error::Scene(format!("unsupported theta `{other}` (use du or du/u)"))),
        }
    }

    /// Density `g(u)` with `theta = g(u) du`.
    pub fn density(&self, u: Complex64) -> Complex64 {
        self.coeff * u.powi(self.power)
    }
}

/// The ambient jet space: base variables with their coframe densities,
/// fiber variables, truncation degree and Laurent window.
///
/// Holds the precomputed index tables that make jet arithmetic dense
/// array work. Shared between jets through an `Arc`.
#[derive(Debug)]
pub struct JetSpace {
    base_names: Vec<String>,
    theta: Vec<ThetaSpec>,
    fiber_names: Vec<String>,
    degree: usize,
    window: (i32, i32),
    rho: f64,

    pub(crate) fiber_monos: Vec<Vec<u8>>,
    pub(crate) fiber_deg: Vec<usize>,
    fiber_index: HashMap<Vec<u8>, usize>,
    pub(crate) fiber_mul: Vec<(u32, u32, u32)>,
    /// `fiber_deriv[v][i] = (j, e)` when `d/dzeta_v` maps monomial `i` to `e * monomial j`.
    pub(crate) fiber_deriv: Vec<Vec<Option<(usize, f64)>>>,
    /// `fiber_raise[v][i]` is the index of `monomial_i * zeta_v` when it fits in degree d.
    pub(crate) fiber_raise: Vec<Vec<Option<usize>>>,
    /// `(parent, v)` with `monomial_i = monomial_parent * zeta_v`, for degree >= 1.
    pub(crate) fiber_parent: Vec<Option<(usize, usize)>>,

    pub(crate) base_monos: Vec<Vec<i32>>,
    base_index: HashMap<Vec<i32>, usize>,
    pub(crate) base_mul: Vec<(u32, u32, u32)>,
}

impl JetSpace {
    pub fn new(
        base: Vec<(String, ThetaSpec)>,
        fiber_names: Vec<String>,
        degree: usize,
        window: (i32, i32),
        rho: f64,
    ) -> Result<Arc<Self>> {
        if window.0 > window.1 {
            return Err(Error::Structural(format!("empty Laurent window {window:?}")));
        }
        if base.is_empty() && window != (0, 0) {
            return Err(Error::Structural("a space without base variables needs window [0, 0]".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for name in base.iter().map(|b| &b.0).chain(fiber_names.iter()) {
            if !seen.insert(name.clone()) {
                return Err(Error::Structural(format!("duplicate variable `{name}`")));
            }
        }
        if fiber_names.len() > 12 {
            return Err(Error::Structural("too many fiber variables".into()));
        }
        let (base_names, theta): (Vec<_>, Vec<_>) = base.into_iter().unzip();
        let nf_vars = fiber_names.len();

        let mut fiber_monos: Vec<Vec<u8>> = Vec::new();
        for deg in 0..=degree {
            let mut cur = vec![0u8; nf_vars];
            enumerate_degree(&mut cur, 0, deg, &mut fiber_monos);
        }
        let fiber_deg: Vec<usize> = fiber_monos
            .iter()
            .map(|m| m.iter().map(|&e| e as usize).sum())
            .collect();
        let fiber_index: HashMap<Vec<u8>, usize> = fiber_monos
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();

        let mut fiber_mul = Vec::new();
        for (i, a) in fiber_monos.iter().enumerate() {
            for (j, b) in fiber_monos.iter().enumerate() {
                if fiber_deg[i] + fiber_deg[j] > degree {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                fiber_mul.push((i as u32, j as u32, fiber_index[&sum] as u32));
            }
        }

        let mut fiber_deriv = vec![vec![None; fiber_monos.len()]; nf_vars];
        let mut fiber_raise = vec![vec![None; fiber_monos.len()]; nf_vars];
        for v in 0..nf_vars {
            for (i, m) in fiber_monos.iter().enumerate() {
                if m[v] > 0 {
                    let mut lower = m.clone();
                    lower[v] -= 1;
                    fiber_deriv[v][i] = Some((fiber_index[&lower], m[v] as f64));
                }
                if fiber_deg[i] < degree {
                    let mut upper = m.clone();
                    upper[v] += 1;
                    fiber_raise[v][i] = Some(fiber_index[&upper]);
                }
            }
        }
        let fiber_parent = fiber_monos
            .iter()
            .map(|m| {
                m.iter().position(|&e| e > 0).map(|v| {
                    let mut lower = m.clone();
                    lower[v] -= 1;
                    (fiber_index[&lower], v)
                })
            })
            .collect();

        let mut base_monos: Vec<Vec<i32>> = vec![Vec::new()];
        for _ in 0..base_names.len() {
            let mut next = Vec::new();
            for m in &base_monos {
                for k in window.0..=window.1 {
                    let mut e = m.clone();
                    e.push(k);
                    next.push(e);
                }
            }
            base_monos = next;
        }
        let base_index: HashMap<Vec<i32>, usize> = base_monos
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let mut base_mul = Vec::new();
        for (i, a) in base_monos.iter().enumerate() {
            for (j, b) in base_monos.iter().enumerate() {
                let sum: Vec<i32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                if let Some(&k) = base_index.get(&sum) {
                    base_mul.push((i as u32, j as u32, k as u32));
                }
            }
        }

        Ok(Arc::new(Self {
            base_names,
            theta,
            fiber_names,
            degree,
            window,
            rho,
            fiber_monos,
            fiber_deg,
            fiber_index,
            fiber_mul,
            fiber_deriv,
            fiber_raise,
            fiber_parent,
            base_monos,
            base_index,
            base_mul,
        }))
    }

    /// Curve base `u` with the given theta and fiber variables.
    pub fn curve(
        theta: ThetaSpec,
        fiber: &[&str],
        degree: usize,
        window: (i32, i32),
    ) -> Result<Arc<Self>> {
        Self::new(
            vec![("u".to_string(), theta)],
            fiber.iter().map(|s| s.to_string()).collect(),
            degree,
            window,
            1.0,
        )
    }

    /// Pure fiber space (no base variables), e.g. the standard model on C^{2n+1}.
    pub fn flat(fiber: &[&str], degree: usize) -> Result<Arc<Self>> {
        Self::new(
            Vec::new(),
            fiber.iter().map(|s| s.to_string()).collect(),
            degree,
            (0, 0),
            1.0,
        )
    }

    /// Same variables and densities with a different degree and window.
    pub fn with_truncation(&self, degree: usize, window: (i32, i32)) -> Result<Arc<Self>> {
        Self::new(
            self.base_names.iter().cloned().zip(self.theta.iter().copied()).collect(),
            self.fiber_names.clone(),
            degree,
            window,
            self.rho,
        )
    }

    pub fn with_rho(&self, rho: f64) -> Result<Arc<Self>> {
        Self::new(
            self.base_names.iter().cloned().zip(self.theta.iter().copied()).collect(),
            self.fiber_names.clone(),
            self.degree,
            self.window,
            rho,
        )
    }

    pub fn base_dim(&self) -> usize {
        self.base_names.len()
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_names.len()
    }

    /// Number of coframe slots: base thetas followed by fiber differentials.
    pub fn slots(&self) -> usize {
        self.base_dim() + self.fiber_dim()
    }

    pub fn base_names(&self) -> &[String] {
        &self.base_names
    }

    pub fn fiber_names(&self) -> &[String] {
        &self.fiber_names
    }

    pub fn theta(&self, b: usize) -> ThetaSpec {
        self.theta[b]
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn window(&self) -> (i32, i32) {
        self.window
    }

    /// Radius of the reference circle used when a Laurent unit has to be
    /// inverted by sampling.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn is_taylor(&self) -> bool {
        self.window.0 >= 0
    }

    pub fn fiber_var(&self, name: &str) -> Option<usize> {
        self.fiber_names.iter().position(|n| n == name)
    }

    pub fn base_var(&self, name: &str) -> Option<usize> {
        self.base_names.iter().position(|n| n == name)
    }

    /// Slot index of a named coframe element (`theta`/`theta1`.. or a fiber name).
    pub fn slot_of(&self, name: &str) -> Option<usize> {
        if let Some(v) = self.fiber_var(name) {
            return Some(self.base_dim() + v);
        }
        if self.base_dim() == 1 && name == "theta" {
            return Some(0);
        }
        name.strip_prefix("theta")
            .and_then(|r| r.parse::<usize>().ok())
            .filter(|&i| i >= 1 && i <= self.base_dim())
            .map(|i| i - 1)
    }

    pub fn slot_name(&self, slot: usize) -> String {
        let m = self.base_dim();
        if slot < m {
            if m == 1 {
                "theta".into()
            } else {
                format!("theta{}", slot + 1)
            }
        } else {
            self.fiber_names[slot - m].clone()
        }
    }

    pub fn n_fiber_monos(&self) -> usize {
        self.fiber_monos.len()
    }

    pub fn n_base_monos(&self) -> usize {
        self.base_monos.len()
    }

    pub fn fiber_mono(&self, i: usize) -> &[u8] {
        &self.fiber_monos[i]
    }

    pub fn fiber_mono_degree(&self, i: usize) -> usize {
        self.fiber_deg[i]
    }

    pub fn fiber_mono_index(&self, exps: &[u8]) -> Option<usize> {
        self.fiber_index.get(exps).copied()
    }

    pub fn base_mono(&self, i: usize) -> &[i32] {
        &self.base_monos[i]
    }

    pub fn base_mono_index(&self, exps: &[i32]) -> Option<usize> {
        self.base_index.get(exps).copied()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        std::ptr::eq(self, other)
            || (self.base_names == other.base_names
                && self.theta == other.theta
                && self.fiber_names == other.fiber_names
                && self.degree == other.degree
                && self.window == other.window)
    }

    pub fn describe(&self) -> String {
        format!(
            "base {:?}, fiber {:?}, degree {}, window [{}, {}]",
            self.base_names, self.fiber_names, self.degree, self.window.0, self.window.1
        )
    }
}

fn enumerate_degree(cur: &mut Vec<u8>, pos: usize, remaining: usize, out: &mut Vec<Vec<u8>>) {
    if pos + 1 >= cur.len() {
        if cur.is_empty() {
            if remaining == 0 {
                out.push(Vec::new());
            }
            return;
        }
        cur[pos] = remaining as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e as u8;
        enumerate_degree(cur, pos + 1, remaining - e, out);
    }
    cur[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_counts() {
        let s = JetSpace::curve(ThetaSpec::DU, &["y", "z"], 3, (-2, 2)).unwrap();
        // binomial(2 + 3, 3)
        assert_eq!(s.n_fiber_monos(), 10);
        assert_eq!(s.n_base_monos(), 5);
        assert_eq!(s.fiber_mono(0), &[0, 0]);
        assert_eq!(s.slots(), 3);
        assert_eq!(s.slot_of("theta"), Some(0));
        assert_eq!(s.slot_of("z"), Some(2));
    }

    #[test]
    fn rejects_duplicates_and_bad_windows() {
        assert!(JetSpace::curve(ThetaSpec::DU, &["u"], 2, (0, 2)).is_err());
        assert!(JetSpace::curve(ThetaSpec::DU, &["z"], 2, (3, 2)).is_err());
        assert!(JetSpace::flat(&["x", "x"], 2).is_err());
    }
}
