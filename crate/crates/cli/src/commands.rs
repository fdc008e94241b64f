//! The six subcommands. Each returns the report path(s) it wrote and whether
//! every asserted tolerance passed.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use degor_core::crosscheck::{run_crosscheck, CrosscheckParams};
use degor_core::de::{grid_around, residual_sweep, GammaField, Point, SweepSummary};
use degor_core::deform::{self, flow_residual, make_isotropic_d, random_symmetric, DeformedField, TripleField};
use degor_core::exec::{self, Exec};
use degor_core::fock::{self, convergence_sweep, LoopElement, Truncation};
use degor_core::hurwitz::{critical_data, PolyMap};
use degor_core::linalg::{self, CMat, Pair, C64};
use degor_core::wave::{self, JetSource, WaveJet};
use serde::Serialize;
use serde_json::{json, Value};

use crate::fields::{self, FieldSpec};
use crate::params::Params;
use crate::report::{self, envelope};
use crate::{CliError, Family, Outcome};

fn grid_for(field: &dyn GammaField, p: &Params) -> Vec<Point> {
    grid_around(&field.base_point(), p.radius.unwrap_or(0.05), p.per_axis.unwrap_or(3))
}

fn point_string(u: &Point) -> String {
    serde_json::to_string(u).expect("point serializes")
}

pub fn seed(family: Family, degree: Option<usize>, input: Option<&Path>, p: &Params, out: &Path) -> Result<Outcome, CliError> {
    let inputs: Vec<PathBuf> = input.map(Path::to_path_buf).into_iter().collect();
    let spec = match family {
        Family::Trivial => FieldSpec::Trivial { n: p.n.unwrap_or(3) },
        Family::AnalyticN2 => {
            let path = input.ok_or_else(|| CliError::input("analytic-n2 needs a JSON file with \"num\" and \"den\""))?;
            let v = fields::read_json(path)?;
            let mut obj = v.as_object().cloned().ok_or_else(|| CliError::input("rational data must be a JSON object"))?;
            obj.insert("family".into(), json!("analytic-n2"));
            serde_json::from_value(Value::Object(obj)).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        }
        Family::Hurwitz0 => {
            let poly = match (input, degree) {
                (Some(path), None) => fields::parse::<PolyMap>(path, "polynomial map")?,
                (None, Some(d)) => PolyMap::power_minus_linear(d).map_err(CliError::core)?,
                _ => return Err(CliError::input("hurwitz0 needs exactly one of a PolyMap file or --degree")),
            };
            FieldSpec::Hurwitz0 { poly }
        }
        Family::RandomControl => FieldSpec::RandomControl { n: p.n.unwrap_or(3), seed: p.seed.unwrap_or(1), scale: 1.0 },
    };
    let field = spec.build()?;
    let base = field.base_point();
    let gamma = field.eval(&base).map_err(CliError::core)?;
    let mut body = json!({
        "field": spec,
        "n": field.dim(),
        "provenance": field.provenance(),
        "base_point": base,
        "gamma_at_base": linalg::mat_to_rows(&gamma),
    });
    if let FieldSpec::Hurwitz0 { poly } = &spec {
        body["critical"] = serde_json::to_value(critical_data(poly).map_err(CliError::core)?).expect("serializes");
    }
    let path = out.join("seed.json");
    report::write_json(&path, &envelope("seed", p, &inputs, true, body))?;
    Ok(Outcome { passed: true, files: vec![path], summary: format!("{:?} seed, n = {}", field.provenance(), field.dim()) })
}

#[derive(Serialize)]
struct ResidualRow {
    index: usize,
    max_flatness: f64,
    max_translation: f64,
    u: String,
}

pub fn verify(input: &Path, p: &Params, out: &Path) -> Result<Outcome, CliError> {
    let spec = fields::load_field(input)?;
    let field = spec.build()?;
    let (h, tol) = (p.h.unwrap_or(degor_core::de::DEFAULT_H), p.tol.unwrap_or(1e-6));
    let pts = grid_for(field.as_ref(), p);
    let reports = residual_sweep(field.as_ref(), &pts, h, Exec::Parallel).map_err(CliError::core)?;
    let summary = SweepSummary::of(&reports);
    let passed = summary.max() < tol;
    let rows: Vec<ResidualRow> = reports
        .iter()
        .enumerate()
        .map(|(index, r)| ResidualRow { index, max_flatness: r.max_flatness, max_translation: r.max_translation, u: point_string(&r.point) })
        .collect();
    let params = json!({"h": h, "tol": tol, "radius": p.radius.unwrap_or(0.05), "per_axis": p.per_axis.unwrap_or(3)});
    let json_path = out.join("verify.json");
    let csv_path = out.join("residuals.csv");
    let body = json!({"field": spec, "summary": summary, "residuals": reports});
    report::write_json(&json_path, &envelope("verify", &params, &[input.to_path_buf()], passed, body))?;
    report::write_csv(&csv_path, &rows)?;
    Ok(Outcome {
        passed,
        files: vec![json_path, csv_path],
        summary: format!("{} points, max flatness {:.3e}, max translation {:.3e}, tol {tol:.1e}", summary.points, summary.max_flatness, summary.max_translation),
    })
}

#[derive(Serialize)]
struct JetRow {
    index: usize,
    ladder_defect: f64,
    c_symmetry_defect: f64,
    u: String,
}

pub fn hierarchy(input: &Path, points: Option<&Path>, p: &Params, out: &Path) -> Result<Outcome, CliError> {
    let spec = fields::load_field(input)?;
    let field = spec.build()?;
    let source = JetSource { order: p.order.unwrap_or(3), steps: p.steps.unwrap_or(40) };
    let tol = p.tol.unwrap_or(1e-7);
    let pts = match points {
        Some(path) => fields::parse::<Vec<Point>>(path, "list of points")?,
        None => grid_for(field.as_ref(), p),
    };
    if pts.iter().any(|u| u.dim() != field.dim()) {
        return Err(CliError::input(format!("points must have {} coordinates", field.dim())));
    }
    let jets: Vec<WaveJet> = exec::try_map(Exec::Parallel, &pts, |u| source.jet_at(field.as_ref(), u)).map_err(CliError::core)?;
    let rows: Vec<JetRow> = jets
        .iter()
        .enumerate()
        .map(|(index, j)| JetRow {
            index,
            ladder_defect: j.max_orthogonality_defect(),
            c_symmetry_defect: wave::c_matrix(j).map(|c| linalg::symmetry_defect(&c)).unwrap_or(0.0),
            u: point_string(&j.at),
        })
        .collect();
    let worst = rows.iter().map(|r| r.ladder_defect.max(r.c_symmetry_defect)).fold(0.0, f64::max);
    let passed = worst < tol;
    let mut inputs = vec![input.to_path_buf()];
    inputs.extend(points.map(Path::to_path_buf));
    let params = json!({"order": source.order, "steps": source.steps, "tol": tol, "radius": p.radius.unwrap_or(0.05), "per_axis": p.per_axis.unwrap_or(3)});
    let json_path = out.join("jets.json");
    let csv_path = out.join("hierarchy.csv");
    report::write_json(&json_path, &envelope("hierarchy", &params, &inputs, passed, json!({"field": spec, "max_defect": worst, "jets": jets})))?;
    report::write_csv(&csv_path, &rows)?;
    Ok(Outcome { passed, files: vec![json_path, csv_path], summary: format!("{} jets of depth {}, max defect {worst:.3e}, tol {tol:.1e}", jets.len(), source.order) })
}

#[derive(Serialize)]
struct DeformRow {
    eps: f64,
    max_flatness: f64,
    max_translation: f64,
    flow_residual: f64,
    shramchenko_defect: Option<f64>,
}

pub fn deform(input: &Path, m_file: Option<&Path>, p: &Params, out: &Path) -> Result<Outcome, CliError> {
    let spec = fields::load_field(input)?;
    let field = spec.build()?;
    let n = field.dim();
    let (g, seed) = (p.g.unwrap_or(1), p.seed.unwrap_or(1));
    let (h, tol, steps) = (p.h.unwrap_or(1e-4), p.tol.unwrap_or(1e-5), p.steps.unwrap_or(20));
    let grid = p.eps_grid.clone().unwrap_or_else(|| vec![0.0, 0.25, 0.5]);
    let d = make_isotropic_d(n, g, seed).map_err(CliError::core)?;
    let m = match m_file {
        Some(path) => linalg::rows_to_mat(&fields::parse::<Vec<Vec<Pair>>>(path, "matrix")?).map_err(CliError::core)?,
        None => random_symmetric(g, seed, 1.0),
    };
    let triples = Arc::new(TripleField::new(field.clone(), d.clone(), steps).map_err(CliError::core)?);
    let pts = grid_for(field.as_ref(), p);
    let probe = triples.triple_at(&pts[pts.len() - 1]).map_err(CliError::core)?;

    let mut rows = Vec::with_capacity(grid.len());
    for &eps in &grid {
        let e = C64::new(eps, 0.0);
        let deformed = DeformedField::special(triples.clone(), m.clone(), e).map_err(CliError::core)?;
        let s = SweepSummary::of(&residual_sweep(&deformed, &pts, h, Exec::Parallel).map_err(CliError::core)?);
        let flow = exec::try_map(Exec::Parallel, &pts, |u| flow_residual(&triples, &m, e, h, u).map(|r| r.max()))
            .map_err(CliError::core)?
            .into_iter()
            .fold(0.0, f64::max);
        let shramchenko_defect = if eps == 0.0 {
            None
        } else {
            linalg::try_inverse(&(&m * e)).and_then(|inv| {
                let a = deform::shramchenko_form(&probe, &inv).ok()?;
                let b = deform::special_flow(&probe, &m, e).ok()?.gamma;
                Some(linalg::max_abs_diff(&a, &b))
            })
        };
        rows.push(DeformRow { eps, max_flatness: s.max_flatness, max_translation: s.max_translation, flow_residual: flow, shramchenko_defect });
    }
    let worst = rows.iter().map(|r| r.max_flatness.max(r.max_translation).max(r.flow_residual)).fold(0.0, f64::max);
    let shr_ok = rows.iter().filter_map(|r| r.shramchenko_defect).all(|x| x < 1e-10);
    let passed = worst < tol && shr_ok;
    let mut inputs = vec![input.to_path_buf()];
    inputs.extend(m_file.map(Path::to_path_buf));
    let params = json!({"g": g, "seed": seed, "h": h, "tol": tol, "steps": steps, "eps_grid": grid,
        "radius": p.radius.unwrap_or(0.05), "per_axis": p.per_axis.unwrap_or(3)});
    let body = json!({"field": spec, "D": d, "M": linalg::mat_to_rows(&m), "points": pts.len(), "per_eps": rows});
    let json_path = out.join("deform.json");
    let csv_path = out.join("deform.csv");
    report::write_json(&json_path, &envelope("deform", &params, &inputs, passed, body))?;
    report::write_csv(&csv_path, &rows)?;
    Ok(Outcome { passed, files: vec![json_path, csv_path], summary: format!("{} ε values, max residual {worst:.3e}, tol {tol:.1e}", rows.len()) })
}

fn parse_point(text: &str, n: usize) -> Result<Point, CliError> {
    let u: Point = serde_json::from_str(text).map_err(|e| CliError::input(format!("--u must be a JSON list of [re, im] pairs: {e}")))?;
    if u.dim() != n {
        return Err(CliError::input(format!("--u has {} coordinates, loop element has n = {n}", u.dim())));
    }
    Ok(u)
}

pub fn oracle(input: &Path, u: Option<&str>, p: &Params, out: &Path) -> Result<Outcome, CliError> {
    let a: LoopElement = fields::parse(input, "loop element")?;
    let n = a.n();
    let u = match u {
        Some(text) => parse_point(text, n)?,
        None => Point::zeros(n),
    };
    let window = p.trunc_n.unwrap_or(16);
    let order = p.order.unwrap_or(2);
    let trunc = Truncation::new(window).map_err(CliError::core)?;
    let windows: Vec<usize> = [window.saturating_sub(4), window.saturating_sub(2), window].into_iter().filter(|&w| w >= fock::MIN_WINDOW).collect();
    let sweep = convergence_sweep(&a, &u, &windows, order).map_err(CliError::core)?;
    let vacuum = fock::vacuum_expectation(&a, &u, trunc).map_err(CliError::core)?;
    let gamma = fock::gamma_fock(&a, &u, trunc).map_err(CliError::core)?;
    let psi: Vec<CMat> = (0..=order).map(|d| fock::psi_fock(&a, &u, trunc, d)).collect::<Result<_, _>>().map_err(CliError::core)?;
    let passed = !sweep.unstable;
    let params = json!({"trunc_N": window, "order": order, "u": u});
    let body = json!({
        "vacuum": linalg::to_pair(vacuum),
        "gamma": linalg::mat_to_rows(&gamma),
        "psi": psi.iter().map(linalg::mat_to_rows).collect::<Vec<_>>(),
        "convergence": sweep,
    });
    let json_path = out.join("oracle.json");
    report::write_json(&json_path, &envelope("oracle", &params, &[input.to_path_buf()], passed, body))?;
    Ok(Outcome { passed, files: vec![json_path], summary: format!("N = {window}, ⟨0|A|0⟩ = {vacuum:.6}, convergence {}", if passed { "stable" } else { "unstable" }) })
}

#[derive(Serialize)]
struct CheckRow {
    name: String,
    eps_flow: f64,
    defect: f64,
    tol: f64,
    pass: bool,
}

pub fn crosscheck(p: &Params, out: &Path) -> Result<Outcome, CliError> {
    let base = CrosscheckParams {
        n: p.n.unwrap_or(2),
        window: p.trunc_n.unwrap_or(16),
        eps_fd: p.eps.unwrap_or(1e-5),
        eps_flow: 0.2,
        u_radius: p.radius.unwrap_or(0.2),
        seed: p.seed.unwrap_or(1),
    };
    let grid = p.eps_grid.clone().unwrap_or_else(|| vec![base.eps_flow]);
    let mut rows = Vec::new();
    for &eps_flow in &grid {
        for e in run_crosscheck(&CrosscheckParams { eps_flow, ..base }).map_err(CliError::core)? {
            rows.push(CheckRow { name: e.name, eps_flow, defect: e.defect, tol: e.tol, pass: e.pass });
        }
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    let passed = failed == 0;
    let params = json!({"n": base.n, "trunc_N": base.window, "eps": base.eps_fd, "eps_grid": grid, "radius": base.u_radius, "seed": base.seed});
    let json_path = out.join("crosscheck.json");
    let csv_path = out.join("crosscheck.csv");
    report::write_json(&json_path, &envelope("crosscheck", &params, &[], passed, json!({"matrix": rows})))?;
    report::write_csv(&csv_path, &rows)?;
    Ok(Outcome { passed, files: vec![json_path, csv_path], summary: format!("{} checks, {failed} failed", rows.len()) })
}
