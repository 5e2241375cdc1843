//! Module pipelines behind the subcommands. Each returns a report whose
//! checks decide the exit code, plus optional plot data and output records.

use std::collections::BTreeMap;

use contact_forge::forms::{contact_check, default_samples, reeb_field, reeb_residuals, VectorField};
use contact_forge::frame::{frame_complete, FrameMode, FunctionMatrix, TOL_DET};
use contact_forge::legendrian::{legendrianize, length_profile, LegendrianMap};
use contact_forge::moser::moser_normalize;
use contact_forge::normalize::{normal_form, normalize, NormalizeOptions};
use contact_forge::spray::{build_spray, verify_submersivity, SprayConfig};
use contact_forge::symplectic::{isotropy_check, lagrangian_complexity_check, normal_split, IsotropyClass};
use contact_forge::{Error, C64};
use serde_json::{json, Value};

use crate::plot::{complex_columns, PlotKind, Table};
use crate::report::{Check, Report};
use crate::scene::{ObjectSpec, Scene, SceneError, SceneResult, DEFAULT_T_STEPS};
use crate::tolerances::Tolerances;

/// Step counts of the residual-decay sweep.
pub const T_SWEEP: [usize; 4] = [25, 50, 100, 200];
/// Largest relative deviation of `det b` from its best monomial `c u^k` on
/// `samples`, with `k` the winding number of `det b` around the sample loop.
pub fn det_unit_defect(b: &FunctionMatrix, samples: &[C64]) -> f64 {
    let dets: Vec<C64> = samples.iter().map(|&u| b.eval(u).determinant()).collect();
    let mut wind = 0.0;
    for i in 0..dets.len() {
        wind += (dets[(i + 1) % dets.len()] / dets[i]).arg();
    }
    let k = (wind / (2.0 * std::f64::consts::PI)).round() as i32;
    let c = dets[0] / samples[0].powi(k);
    samples.iter().zip(&dets).map(|(u, d)| (d / (c * u.powi(k)) - 1.0).norm()).fold(0.0, f64::max)
}

/// Tolerance of the Jacobian identity of the period map at zero.
pub const TOL_PERIOD_JACOBIAN: f64 = 1e-8;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub t_steps: Option<usize>,
    pub mu: Option<f64>,
    pub xi: Option<[C64; 3]>,
    pub plot: Option<PlotKind>,
}

pub struct Outcome {
    pub report: Report,
    /// Tables this command can emit, by kind.
    pub tables: Vec<Table>,
    /// Records for `--out`.
    pub records: Option<Value>,
}

impl Outcome {
    fn new(report: Report) -> Self {
        Self {
            report,
            tables: Vec::new(),
            records: None,
        }
    }
}

/// Parses `re,im;re,im;re,im`.
pub fn parse_xi(s: &str) -> SceneResult<[C64; 3]> {
    let parts: Vec<&str> = s.split(';').collect();
    if parts.len() != 3 {
        return Err(SceneError(format!("--xi needs three complex numbers `re,im;re,im;re,im`, got `{s}`")));
    }
    let mut out = [C64::new(0.0, 0.0); 3];
    for (o, p) in out.iter_mut().zip(parts) {
        let (re, im) = p
            .split_once(',')
            .ok_or_else(|| SceneError(format!("--xi entry `{p}` is not `re,im`")))?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| SceneError(format!("--xi entry `{p}` is not numeric")))
        };
        *o = C64::new(num(re)?, num(im)?);
    }
    Ok(out)
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn check(scene: &Scene, tol: &Tolerances, report: Report) -> SceneResult<Outcome> {
    let mut out = Outcome::new(report);
    let alpha = scene.contact_form()?;
    let space = alpha.space().clone();
    let t = tol.get("contact");
    out.report.push(match contact_check(&alpha, scene.n, &default_samples(&space), t) {
        Ok(c) => Check::from_bool("contact", true, c.min_abs, t, json!(c)),
        Err(e) => Check::error("contact", t, e),
    });
    let t = tol.get("reeb");
    match reeb_field(&alpha) {
        Ok(r) => {
            let deg = space.degree().saturating_sub(1);
            let (e1, e2) = reeb_residuals(&alpha, &r, deg);
            out.report.push(Check::below("reeb_normalization", e1, t, json!({ "degrees": deg })));
            out.report.push(Check::below("reeb_closed", e2, t, json!({ "degrees": deg })));
            let z = space.slot_of("z").ok_or_else(|| SceneError("contact space has no z".into()))?;
            out.report.data = json!({
                "reeb_is_dz": r.max_diff(&VectorField::basis(&space, z)) == 0.0,
                "reeb_dz_deviation": r.max_diff(&VectorField::basis(&space, z)),
            });
        }
        Err(e) => out.report.push(Check::error("reeb", t, e)),
    }
    if let Some(model) = &scene.surface {
        if !model.is_polydisc() {
            let maps = legendrian_objects(scene)?;
            let (name, f, p) = match maps.into_iter().next() {
                Some(m) => m,
                None => ("zero_section".into(), LegendrianMap::zero_section(model.clone(), scene.n)?, model.basepoint),
            };
            if let Ok(prof) = length_profile(&f, p, &[]) {
                let mut t = Table::new(PlotKind::LengthProfile, &["path", "angle", "length"]);
                for (k, l) in prof.fan.iter().enumerate() {
                    t.push(vec![k as f64, 2.0 * std::f64::consts::PI * k as f64 / 32.0, *l]);
                }
                out.tables.push(t);
                out.report.notes.push(format!("length profile of `{name}` from {p}"));
            }
        }
    }
    Ok(out)
}

fn legendrian_objects(scene: &Scene) -> SceneResult<Vec<(String, LegendrianMap, C64)>> {
    scene
        .objects_of(|o| matches!(o, ObjectSpec::LegendrianMap { .. }))
        .map(|(name, o)| {
            let (f, p) = scene.legendrian_map(o)?;
            Ok((name.clone(), f, p))
        })
        .collect()
}

pub fn legendrianize_cmd(scene: &Scene, tol: &Tolerances, report: Report) -> SceneResult<Outcome> {
    let mut out = Outcome::new(report);
    let maps = legendrian_objects(scene)?;
    if maps.is_empty() {
        return Err(SceneError("scene has no legendrian_map objects".into()));
    }
    let t = tol.get("legendrian");
    let mut records = BTreeMap::new();
    let mut data = BTreeMap::new();
    let mut first = None;
    for (name, f, p) in maps {
        let label = format!("legendrianize:{name}");
        match legendrianize(&f, p) {
            Ok((g, rep)) => {
                out.report.push(Check::below(&label, rep.certificate.pullback_residual, t, json!(rep.certificate)));
                records.insert(name.clone(), json!(g.to_record()?));
                data.insert(name.clone(), json!(rep));
                first.get_or_insert((g, p));
            }
            Err(Error::PeriodObstruction { periods }) => {
                let w: Vec<[f64; 2]> = periods.iter().map(|q| pair(*q)).collect();
                out.report.push(Check::from_bool(
                    &label,
                    false,
                    periods.iter().map(|q| q.norm()).fold(0.0, f64::max),
                    tol.get("period"),
                    json!({ "period_obstruction": w }),
                ));
            }
            Err(e) => out.report.push(Check::error(&label, t, e)),
        }
    }
    if let Some((g, p)) = first {
        let mut table = curve_table(&g);
        table.kind = PlotKind::CurveTrace;
        out.tables.push(table);
        if let Ok(prof) = length_profile(&g, p, &[]) {
            let mut t = Table::new(PlotKind::LengthProfile, &["path", "angle", "length"]);
            for (k, l) in prof.fan.iter().enumerate() {
                t.push(vec![k as f64, 2.0 * std::f64::consts::PI * k as f64 / 32.0, *l]);
            }
            out.tables.push(t);
        }
    }
    out.report.data = json!(data);
    out.records = Some(json!(records));
    Ok(out)
}

/// `(u, components)` rows over the model's curve samples.
fn curve_table(f: &LegendrianMap) -> Table {
    let n = f.n();
    let mut header: Vec<String> = complex_columns("u").to_vec();
    for j in 1..=n {
        header.extend(complex_columns(&format!("x{j}")));
    }
    for j in 1..=n {
        header.extend(complex_columns(&format!("y{j}")));
    }
    header.extend(complex_columns("z"));
    let mut t = Table::with_header(PlotKind::CurveTrace, header);
    for u in f.model.curve_samples() {
        let mut row = vec![u.re, u.im];
        for v in f.eval(u) {
            row.extend([v.re, v.im]);
        }
        t.push(row);
    }
    t
}

fn frame_samples(scene: &Scene) -> (Vec<C64>, f64) {
    match &scene.surface {
        Some(m) if !m.is_polydisc() => (m.curve_samples(), m.sample_radius()),
        _ => {
            let r = 0.8;
            ((0..64).map(|k| C64::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / 64.0)).collect(), r)
        }
    }
}

pub fn normalize_cmd(scene: &Scene, tol: &Tolerances, report: Report) -> SceneResult<Outcome> {
    let mut out = Outcome::new(report);
    let mut data = BTreeMap::new();
    if scene.surface.is_some() {
        let beta = scene.contact_form()?;
        let space = beta.space().clone();
        let opts = NormalizeOptions {
            mode: FrameMode::Exact,
            samples: default_samples(&space),
        };
        match normalize(&beta, &opts) {
            Ok(dec) => {
                let t = tol.get("roundtrip");
                out.report.push(match dec.round_trip_residual(&beta) {
                    Ok(r) => Check::below("round_trip", r, t, Value::Null),
                    Err(e) => Check::error("round_trip", t, e),
                });
                let t = tol.get("soundness");
                out.report.push(match dec.soundness_residual() {
                    Ok(r) => Check::below("soundness", r, t, Value::Null),
                    Err(e) => Check::error("soundness", t, e),
                });
                let shape = dec.normal_part.max_diff(&normal_form(&space, &dec.layout));
                out.report.push(Check::from_bool("normal_shape", shape == 0.0, shape, 0.0, json!(dec.layout)));
                data.insert(
                    "normalize".to_string(),
                    json!({
                        "layout": dec.layout,
                        "change_log": dec.change_log.iter().map(|c| c.label().to_string()).collect::<Vec<_>>(),
                        "stages": dec.stages,
                        "discards": dec.discards,
                        "noise": dec.noise,
                        "remainder_max": dec.remainder.max_abs(),
                    }),
                );
            }
            Err(e) => out.report.push(Check::error("normalize", tol.get("roundtrip"), e)),
        }
    }
    let (samples, rho) = frame_samples(scene);
    for (name, obj) in scene.objects_of(|o| matches!(o, ObjectSpec::FunctionMatrix { .. })) {
        let ObjectSpec::FunctionMatrix { rows, mode } = obj else { unreachable!() };
        let label = format!("frame:{name}");
        let a = FunctionMatrix::from_rows(rows.clone())?;
        let t = tol.get("frame_numeric");
        match frame_complete(&a, *mode, &samples, rho) {
            Ok(fc) => {
                let c = &fc.certificate;
                let unit = det_unit_defect(&fc.b, &samples);
                let ok = match mode {
                    FrameMode::Exact => c.exact_identity && c.residual == 0.0 && c.det_unit.is_some(),
                    FrameMode::Numeric => c.residual < t && unit < TOL_DET,
                };
                let t = if *mode == FrameMode::Exact { 0.0 } else { t };
                out.report.push(Check::from_bool(&label, ok, c.residual, t, json!({ "certificate": c, "det_unit_defect": unit })));
            }
            Err(e) => out.report.push(Check::error(&label, t, e)),
        }
    }
    if out.report.checks.is_empty() {
        return Err(SceneError("normalize needs a surface or function_matrix objects".into()));
    }
    out.report.data = json!(data);
    Ok(out)
}

pub fn moser_cmd(scene: &Scene, tol: &Tolerances, opts: &RunOptions, report: Report) -> SceneResult<Outcome> {
    let mut out = Outcome::new(report);
    let alpha = scene.contact_form()?;
    let problems: Vec<_> = scene
        .objects_of(|o| matches!(o, ObjectSpec::MoserProblem { .. }))
        .map(|(n, o)| (n.clone(), o.clone()))
        .collect();
    if problems.is_empty() {
        return Err(SceneError("scene has no moser_problem objects".into()));
    }
    let t = tol.get("moser");
    let mut data = BTreeMap::new();
    for (i, (name, obj)) in problems.iter().enumerate() {
        let ObjectSpec::MoserProblem { beta, t_steps } = obj else { unreachable!() };
        let beta = scene.form(beta)?;
        let steps = opts.t_steps.or(*t_steps).unwrap_or(DEFAULT_T_STEPS);
        let label = format!("moser:{name}");
        match moser_normalize(&beta, &alpha, scene.n, steps) {
            Ok((_, rep)) => {
                let ok = rep.residual < t && rep.fixes_zero_section < contact_forge::moser::TOL_ZERO_SECTION;
                out.report.push(Check::from_bool(&label, ok, rep.residual, t, json!({
                    "certified_degrees": rep.certified_degrees,
                    "fixes_zero_section": rep.fixes_zero_section,
                })));
                data.insert(name.clone(), json!(rep));
            }
            Err(e) => out.report.push(Check::error(&label, t, e)),
        }
        if i == 0 && opts.plot == Some(PlotKind::ResidualDecay) {
            let mut table = Table::new(PlotKind::ResidualDecay, &["t_steps", "residual", "top_slice_residual"]);
            for k in T_SWEEP {
                if let Ok((_, rep)) = moser_normalize(&beta, &alpha, scene.n, k) {
                    table.push(vec![k as f64, rep.residual, rep.top_slice_residual]);
                }
            }
            out.tables.push(table);
        }
    }
    out.report.data = json!(data);
    Ok(out)
}

fn spray_config(scene: &Scene, opts: &RunOptions) -> SceneResult<(String, SprayConfig)> {
    let found = scene.objects_of(|o| matches!(o, ObjectSpec::Spray { .. })).next();
    match found {
        Some((name, obj)) => Ok((name.clone(), scene.spray_config(obj, opts.mu)?)),
        None => {
            let obj = ObjectSpec::Spray {
                p: None,
                q: None,
                arc: None,
                mu: None,
                window: None,
                enlarged_window: None,
                k_bound: None,
            };
            Ok(("default".into(), scene.spray_config(&obj, opts.mu)?))
        }
    }
}

pub fn spray_cmd(scene: &Scene, tol: &Tolerances, opts: &RunOptions, report: Report) -> SceneResult<Outcome> {
    let mut out = Outcome::new(report);
    let (name, cfg) = spray_config(scene, opts)?;
    let spray = match build_spray(&cfg) {
        Ok(s) => s,
        Err(e) => {
            out.report.push(Check::error(format!("controls:{name}"), 0.0, e));
            return Ok(out);
        }
    };
    let certs = &spray.controls.certificates;
    let worst = certs.iter().map(|c| c.value / c.bound).fold(0.0, f64::max);
    out.report.push(Check::from_bool(
        "controls",
        spray.controls.all_passed(),
        worst,
        1.0,
        json!(certs),
    ));
    match spray.period_jacobian_at_zero() {
        Ok(j) => {
            let n = j.nrows();
            let dev = (0..n)
                .flat_map(|r| (0..n).map(move |c| (r, c)))
                .map(|(r, c)| (j[(r, c)] - if r == c { 1.0 } else { 0.0 }).norm())
                .fold(0.0, f64::max);
            out.report.push(Check::below("period_jacobian_identity", dev, TOL_PERIOD_JACOBIAN, Value::Null));
        }
        Err(e) => out.report.push(Check::error("period_jacobian_identity", TOL_PERIOD_JACOBIAN, e)),
    }
    let xi = opts.xi.unwrap_or([C64::new(0.0, 0.0); 3]);
    let t = tol.get("spray_legendrian");
    match spray.evaluate_certified(xi) {
        Ok((f, res)) => {
            out.report.push(Check::below("member_legendrian", res, t, json!({ "xi": xi.map(pair) })));
            let p = cfg.p();
            let v = f.eval(p);
            let fix = (v[0] - p).norm().max(v[1].norm()).max(v[2].norm());
            out.report.push(Check::below("member_fixes_p", fix, tol.get("spray_fix"), json!({ "p": cfg.p })));
            out.tables.push(curve_table(&f));
        }
        Err(e) => out.report.push(Check::error("member_legendrian", t, e)),
    }
    match verify_submersivity(&spray) {
        Ok(r) => {
            let bound = tol.get("spray_structure") * r.mu;
            out.report.push(Check::from_bool(
                "jacobian_structure",
                r.structure_deviation <= bound,
                r.structure_deviation,
                bound,
                json!({ "row_deviation": r.row_deviation }),
            ));
            let dr = tol.get("spray_det_ratio");
            out.report.push(Check::from_bool("jacobian_determinant", r.det_ratio > dr, r.det_ratio, dr, json!({
                "determinant": r.determinant,
                "v_q": r.v_q,
            })));
            let mut heat = Table::new(PlotKind::JacobianHeat, &["row", "col", "re", "im", "abs", "predicted_re", "predicted_im"]);
            for (i, row) in r.jacobian.iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    let p = r.predicted[i][j];
                    heat.push(vec![i as f64, j as f64, e[0], e[1], e[0].hypot(e[1]), p[0], p[1]]);
                }
            }
            out.tables.push(heat);
            out.report.data = json!({ "spray": name, "submersivity": r, "window": spray.controls.window });
        }
        Err(e) => out.report.push(Check::error("jacobian_determinant", tol.get("spray_det_ratio"), e)),
    }
    Ok(out)
}

pub fn symplectic_cmd(scene: &Scene, tol: &Tolerances, report: Report) -> SceneResult<Outcome> {
    let mut out = Outcome::new(report);
    let fibre = scene.fibre();
    let t = tol.get("subspace");
    let mut data = BTreeMap::new();
    for (name, obj) in &scene.objects {
        match obj {
            ObjectSpec::Subspace { .. } => {
                let u = scene.subspace(obj)?;
                let rep = isotropy_check(&u, &fibre);
                out.report.push(Check::from_bool(
                    format!("dimension:{name}"),
                    rep.dimension.holds,
                    (rep.dimension.total as f64 - rep.dimension.expected as f64).abs(),
                    0.5,
                    json!(rep.dimension),
                ));
                if rep.class == IsotropyClass::Lagrangian {
                    let label = format!("lagrangian_complex:{name}");
                    out.report.push(match lagrangian_complexity_check(&u, &fibre) {
                        Ok(b) => Check::from_bool(label, b, 0.0, t, Value::Null),
                        Err(e) => Check::error(label, t, e),
                    });
                }
                data.insert(name.clone(), json!(rep));
            }
            ObjectSpec::TangentBundle { .. } => {
                let tm = scene.tangent_bundle(obj)?;
                let label = format!("split:{name}");
                match normal_split(&tm, &fibre) {
                    Ok(r) => {
                        out.report.push(Check::from_bool(&label, r.all_pass, 0.0, t, json!({
                            "ranks": r.points.iter().map(|p| p.ranks).collect::<Vec<_>>(),
                        })));
                        data.insert(name.clone(), json!(r));
                    }
                    Err(e) => out.report.push(Check::error(label, t, e)),
                }
            }
            _ => {}
        }
    }
    if out.report.checks.is_empty() {
        return Err(SceneError("scene has no subspace or tangent_bundle objects".into()));
    }
    out.report.data = json!(data);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_flag() {
        let xi = parse_xi("1e-4,0;0,-2e-4;0.5,0.5").unwrap();
        assert_eq!(xi[1], C64::new(0.0, -2e-4));
        assert!(parse_xi("1,2;3,4").is_err());
        assert!(parse_xi("1,2;3;4,5").is_err());
    }
}
