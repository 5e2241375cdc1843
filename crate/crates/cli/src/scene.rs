//! Scene files: the surface, the contact form (preset or literal), named
//! objects, tolerance overrides and the seed.

use std::collections::BTreeMap;
use std::sync::Arc;

use contact_forge::forms::Form1;
use contact_forge::frame::{FrameMode, FunctionMatrix};
use contact_forge::legendrian::{LegendrianMap, LegendrianRecord};
use contact_forge::normalize::{normal_form, Layout};
use contact_forge::spray::SprayConfig;
use contact_forge::surfaces::SurfaceModel;
use contact_forge::symplectic::{CVec, Field, Subspace, SymplecticFibre};
use contact_forge::{Jet, JetSpace, LaurentSeries, PathSpec, C64};
use serde::{Deserialize, Serialize};

pub const DEFAULT_DEGREE: usize = 4;
pub const DEFAULT_WINDOW: i32 = 8;
pub const DEFAULT_T_STEPS: usize = 100;

/// Input problems: unreadable files, malformed JSON, unresolvable references.
#[derive(Debug, Clone)]
pub struct SceneError(pub String);

impl std::fmt::Display for SceneError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<contact_forge::Error> for SceneError {
    fn from(e: contact_forge::Error) -> Self {
        SceneError(e.to_string())
    }
}

pub type SceneResult<T> = std::result::Result<T, SceneError>;

fn bad<T>(msg: impl Into<String>) -> SceneResult<T> {
    Err(SceneError(msg.into()))
}

/// `{"monomial": "y1^2*z", "series": <Laurent literal>}`. The series variable
/// names the base variable the term depends on.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermLiteral {
    pub monomial: String,
    pub series: LaurentSeries,
}

pub type JetLiteral = Vec<TermLiteral>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormLiteral {
    #[serde(default)]
    pub theta: Vec<JetLiteral>,
    #[serde(default)]
    pub fiber: BTreeMap<String, JetLiteral>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormSpec {
    Preset(String),
    Literal(FormLiteral),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectSpec {
    LegendrianMap {
        x: Vec<LaurentSeries>,
        y: Vec<LaurentSeries>,
        z: LaurentSeries,
        #[serde(default)]
        basepoint: Option<[f64; 2]>,
    },
    FunctionMatrix {
        rows: Vec<Vec<LaurentSeries>>,
        #[serde(default = "default_mode")]
        mode: FrameMode,
    },
    MoserProblem {
        beta: FormSpec,
        #[serde(default)]
        t_steps: Option<usize>,
    },
    /// Overrides of the default spray data; the model is the scene surface.
    Spray {
        #[serde(default)]
        p: Option<[f64; 2]>,
        #[serde(default)]
        q: Option<[f64; 2]>,
        #[serde(default)]
        arc: Option<PathSpec>,
        #[serde(default)]
        mu: Option<f64>,
        #[serde(default)]
        window: Option<i32>,
        #[serde(default)]
        enlarged_window: Option<i32>,
        #[serde(default)]
        k_bound: Option<f64>,
    },
    /// Spanning vectors in `C^{2n}` with the standard form of the scene `n`.
    Subspace { field: Field, basis: Vec<Vec<[f64; 2]>> },
    /// Complex tangent spaces of an isotropic submanifold at sample points.
    TangentBundle { points: Vec<Vec<Vec<[f64; 2]>>> },
}

fn default_mode() -> FrameMode {
    FrameMode::Exact
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    #[serde(default)]
    pub surface: Option<SurfaceModel>,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_window")]
    pub window: i32,
    /// Defaults to `normal` (curve), `normal3` (polydisc) or `standard` (no surface).
    #[serde(default)]
    pub contact_form: Option<FormSpec>,
    #[serde(default)]
    pub objects: BTreeMap<String, ObjectSpec>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}
fn default_degree() -> usize {
    DEFAULT_DEGREE
}
fn default_window() -> i32 {
    DEFAULT_WINDOW
}

/// Parses scene JSON; errors carry the line and column.
pub fn parse_scene(text: &str) -> SceneResult<Scene> {
    let scene: Scene = serde_json::from_str(text)
        .map_err(|e| SceneError(format!("scene parse error at line {} column {}: {e}", e.line(), e.column())))?;
    scene.validate()?;
    Ok(scene)
}

impl Scene {
    pub fn validate(&self) -> SceneResult<()> {
        if self.n == 0 || self.n > 4 {
            return bad(format!("n = {} is outside 1..=4", self.n));
        }
        if self.degree == 0 || self.degree > 8 {
            return bad(format!("degree = {} is outside 1..=8", self.degree));
        }
        if self.window < 1 {
            return bad("window must be positive");
        }
        for (k, v) in &self.tolerances {
            if !(v.is_finite() && *v > 0.0) {
                return bad(format!("tolerance `{k}` must be positive, got {v}"));
            }
        }
        // Resolve everything once so later stages only see runtime failures.
        self.contact_form()?;
        for (name, obj) in &self.objects {
            self.resolve(name, obj)?;
        }
        Ok(())
    }

    pub fn model(&self) -> SceneResult<&SurfaceModel> {
        self.surface.as_ref().ok_or_else(|| SceneError("scene has no surface".into()))
    }

    /// Layout and jet space of the contact form. Without a surface the
    /// space is flat with fibers `x1..xn, y1..yn, z`.
    pub fn contact_space(&self) -> SceneResult<(Option<Layout>, Arc<JetSpace>)> {
        match &self.surface {
            None => {
                let names = standard_names(self.n);
                let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                Ok((None, JetSpace::flat(&refs, self.degree)?))
            }
            Some(model) => {
                let m = model.base_dim();
                if m > self.n {
                    return bad(format!("base dimension {m} exceeds n = {}", self.n));
                }
                let layout = Layout { m, n: self.n };
                let names = layout.names();
                let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                Ok((Some(layout), model.jet_space(&refs, self.degree, self.window)?))
            }
        }
    }

    pub fn contact_form(&self) -> SceneResult<Form1> {
        match &self.contact_form {
            Some(spec) => self.form(spec),
            None => {
                let preset = match &self.surface {
                    None => "standard",
                    Some(m) if m.is_polydisc() => "normal3",
                    Some(_) => "normal",
                };
                self.form(&FormSpec::Preset(preset.into()))
            }
        }
    }

    pub fn form(&self, spec: &FormSpec) -> SceneResult<Form1> {
        let (layout, space) = self.contact_space()?;
        match spec {
            FormSpec::Preset(name) => match (name.as_str(), layout) {
                ("standard", None) => Ok(standard_form(&space, self.n)),
                ("standard", Some(_)) => bad("preset `standard` lives on C^{2n+1}; drop the surface"),
                ("normal", Some(l)) if l.m == 1 => Ok(normal_form(&space, &l)),
                ("normal", _) => bad("preset `normal` needs a curve surface"),
                ("normal3", Some(l)) => Ok(normal_form(&space, &l)),
                ("normal3", None) => bad("preset `normal3` needs a surface"),
                (other, _) => bad(format!("unknown contact form preset `{other}`")),
            },
            FormSpec::Literal(lit) => form_literal(&space, lit),
        }
    }

    fn resolve(&self, name: &str, obj: &ObjectSpec) -> SceneResult<()> {
        let ctx = |e: SceneError| SceneError(format!("object `{name}`: {e}"));
        match obj {
            ObjectSpec::LegendrianMap { .. } => self.legendrian_map(obj).map(|_| ()).map_err(ctx),
            ObjectSpec::FunctionMatrix { rows, .. } => FunctionMatrix::from_rows(rows.clone())
                .map(|_| ())
                .map_err(|e| ctx(e.into())),
            ObjectSpec::MoserProblem { beta, .. } => self.form(beta).map(|_| ()).map_err(ctx),
            ObjectSpec::Spray { .. } => self.spray_config(obj, None).map(|_| ()).map_err(ctx),
            ObjectSpec::Subspace { .. } => self.subspace(obj).map(|_| ()).map_err(ctx),
            ObjectSpec::TangentBundle { .. } => self.tangent_bundle(obj).map(|_| ()).map_err(ctx),
        }
    }

    pub fn legendrian_map(&self, obj: &ObjectSpec) -> SceneResult<(LegendrianMap, C64)> {
        let ObjectSpec::LegendrianMap { x, y, z, basepoint } = obj else {
            return bad("not a legendrian_map");
        };
        let model = self.model()?.clone();
        let p = basepoint.map(|b| C64::new(b[0], b[1])).unwrap_or(model.basepoint);
        let rec = LegendrianRecord {
            x: x.clone(),
            y: y.clone(),
            z: z.clone(),
        };
        Ok((LegendrianMap::from_record(model, &rec)?, p))
    }

    pub fn spray_config(&self, obj: &ObjectSpec, mu_flag: Option<f64>) -> SceneResult<SprayConfig> {
        let ObjectSpec::Spray { p, q, arc, mu, window, enlarged_window, k_bound } = obj else {
            return bad("not a spray");
        };
        let mu = mu_flag.or(*mu).unwrap_or(0.01);
        let mut cfg = SprayConfig::default_scene(mu)?;
        if let Some(model) = &self.surface {
            cfg.model = model.clone();
        }
        if let Some(p) = p {
            cfg.p = *p;
        }
        if let Some(q) = q {
            cfg.q = *q;
        }
        if let Some(a) = arc {
            cfg.arc = a.clone();
        }
        if let Some(w) = window {
            cfg.window = *w;
        }
        if let Some(w) = enlarged_window {
            cfg.enlarged_window = *w;
        }
        if let Some(k) = k_bound {
            cfg.k_bound = *k;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn fibre(&self) -> SymplecticFibre {
        SymplecticFibre::standard(self.n)
    }

    pub fn subspace(&self, obj: &ObjectSpec) -> SceneResult<Subspace> {
        let ObjectSpec::Subspace { field, basis } = obj else {
            return bad("not a subspace");
        };
        Ok(Subspace::new(*field, 2 * self.n, vectors(basis, 2 * self.n)?)?)
    }

    pub fn tangent_bundle(&self, obj: &ObjectSpec) -> SceneResult<Vec<Subspace>> {
        let ObjectSpec::TangentBundle { points } = obj else {
            return bad("not a tangent_bundle");
        };
        if points.is_empty() {
            return bad("tangent_bundle needs at least one point");
        }
        points
            .iter()
            .map(|b| Ok(Subspace::new(Field::Complex, 2 * self.n, vectors(b, 2 * self.n)?)?))
            .collect()
    }

    /// Objects of the given kind, in name order.
    pub fn objects_of<'a>(&'a self, pred: impl Fn(&ObjectSpec) -> bool + 'a) -> impl Iterator<Item = (&'a String, &'a ObjectSpec)> + 'a {
        self.objects.iter().filter(move |(_, o)| pred(o))
    }
}

fn vectors(basis: &[Vec<[f64; 2]>], dim: usize) -> SceneResult<Vec<CVec>> {
    basis
        .iter()
        .map(|v| {
            if v.len() != dim {
                return bad(format!("vector of length {} in C^{dim}", v.len()));
            }
            Ok(CVec::from_iterator(dim, v.iter().map(|c| C64::new(c[0], c[1]))))
        })
        .collect()
}

pub fn standard_names(n: usize) -> Vec<String> {
    let mut v: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    v.extend((1..=n).map(|j| format!("y{j}")));
    v.push("z".into());
    v
}

/// `dz + sum_j x_j dy_j` on the flat space with fibers `x1..xn, y1..yn, z`.
pub fn standard_form(space: &Arc<JetSpace>, n: usize) -> Form1 {
    let mut a = Form1::zero(space);
    a.set(2 * n, Jet::one(space));
    for j in 0..n {
        a.set(n + j, Jet::fiber_var(space, j));
    }
    a
}

fn parse_monomial(space: &JetSpace, s: &str) -> SceneResult<Vec<u8>> {
    let mut exps = vec![0u8; space.fiber_dim()];
    let s = s.replace(' ', "");
    if s == "1" {
        return Ok(exps);
    }
    for factor in s.split('*') {
        let (name, power) = match factor.split_once('^') {
            Some((n, p)) => (n, p.parse::<u8>().map_err(|_| SceneError(format!("bad exponent in `{factor}`")))?),
            None => (factor, 1),
        };
        let v = space
            .fiber_var(name)
            .ok_or_else(|| SceneError(format!("unknown fiber variable `{name}`")))?;
        exps[v] += power;
    }
    Ok(exps)
}

pub fn jet_literal(space: &Arc<JetSpace>, lit: &JetLiteral) -> SceneResult<Jet> {
    let mut acc = Jet::zero(space);
    for t in lit {
        let exps = parse_monomial(space, &t.monomial)?;
        let b = space
            .base_var(t.series.var())
            .ok_or_else(|| SceneError(format!("series variable `{}` is not a base variable", t.series.var())))?;
        for (k, c) in t.series.terms() {
            let mut base = vec![0i32; space.base_dim()];
            base[b] = k;
            acc = &acc + &Jet::term(space, &exps, &base, c)?;
        }
    }
    Ok(acc)
}

fn form_literal(space: &Arc<JetSpace>, lit: &FormLiteral) -> SceneResult<Form1> {
    let m = space.base_dim();
    if lit.theta.len() > m {
        return bad(format!("{} theta coefficients for {m} base variables", lit.theta.len()));
    }
    let mut a = Form1::zero(space);
    for (b, j) in lit.theta.iter().enumerate() {
        a.set(b, jet_literal(space, j)?);
    }
    for (name, j) in &lit.fiber {
        let v = space
            .fiber_var(name)
            .ok_or_else(|| SceneError(format!("unknown fiber variable `{name}`")))?;
        a.set(m + v, jet_literal(space, j)?);
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_expand() {
        let s = parse_scene(r#"{"n": 2, "contact_form": "standard"}"#).unwrap();
        let a = s.contact_form().unwrap();
        assert_eq!(a.space().fiber_names(), &["x1", "x2", "y1", "y2", "z"]);
        let s = parse_scene(r#"{"surface": {"kind": "disc", "radius": 1.0}, "n": 2}"#).unwrap();
        let a = s.contact_form().unwrap();
        assert_eq!(a.space().fiber_names(), &["z", "y1", "x2", "y2"]);
    }

    #[test]
    fn parse_errors_carry_location() {
        let e = parse_scene("{\n  \"n\": }").unwrap_err();
        assert!(e.0.contains("line 2"), "{e}");
        let e = parse_scene(r#"{"contact_form": "bogus", "surface": {"kind": "disc", "radius": 1.0}}"#).unwrap_err();
        assert!(e.0.contains("bogus"));
    }

    #[test]
    fn literal_form_matches_preset() {
        let text = r#"{
            "surface": {"kind": "disc", "radius": 1.0},
            "contact_form": {
                "theta": [[{"monomial": "y1", "series": {"var": "u", "kmin": 0, "kmax": 0, "coeffs": [[-1, 0]]}}]],
                "fiber": {"z": [{"monomial": "1", "series": {"var": "u", "kmin": 0, "kmax": 0, "coeffs": [[1, 0]]}}]}
            }
        }"#;
        let s = parse_scene(text).unwrap();
        let preset = s.form(&FormSpec::Preset("normal".into())).unwrap();
        assert_eq!(s.contact_form().unwrap().max_diff(&preset), 0.0);
    }
}
