use ancestrec::caustic::{caustic_sweep, caustic_table, compare_extended, CausticOptions, ExtendedOptions};
use ancestrec::quantization::{ancestor_via_quantization, IntersectionCache, OracleOptions};
use ancestrec::recursion::{build_table, closure_n, eo_step, TableOptions};
use ancestrec::{AnModel, CorrelatorKey, CorrelatorTable, Insertion, ModelOptions, RMatrix, C64};
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::job::{Command, JobSpec};

pub const SCHEMA: u32 = 1;

const CERTIFICATE_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-8;
const ORACLE_TOL: f64 = 1e-6;
const SWEEP_TOL: f64 = 1e-3;
const EXTENDED_TOL: f64 = 1e-5;

fn insertions(key: &CorrelatorKey) -> Vec<[usize; 2]> {
    key.ins.iter().map(|i| [i.a + 1, i.k]).collect()
}

fn header(spec: &JobSpec, model: &AnModel) -> Value {
    json!({
        "schema": SCHEMA,
        "version": env!("CARGO_PKG_VERSION"),
        "model": { "type": format!("A{}", spec.n), "t": spec.t },
        "flat_point": model.tau,
    })
}

fn merge(mut doc: Value, extra: Value) -> Value {
    if let (Some(d), Value::Object(e)) = (doc.as_object_mut(), extra) {
        d.extend(e);
    }
    doc
}

fn table_options(spec: &JobSpec, g_max: usize, n_max: usize) -> TableOptions {
    let defaults = TableOptions::default();
    TableOptions { g_max, n_max, order: Some(spec.order), tol: spec.tol.unwrap_or(defaults.tol) }
}

fn caustic_options(spec: &JobSpec) -> CausticOptions {
    CausticOptions { g_max: spec.g_max, n_max: spec.n_max, ..Default::default() }
}

pub fn execute(spec: &JobSpec) -> anyhow::Result<Value> {
    let model = AnModel::build(spec.n, &spec.t, &ModelOptions::default())?;
    let body = match spec.command {
        Command::Correlators => correlators(spec, &model)?,
        Command::Verify => verify(spec, &model)?,
        Command::Sweep => sweep(spec)?,
        Command::Extended { deg } => extended(spec, &model, deg)?,
    };
    Ok(merge(header(spec, &model), body))
}

fn entries(table: &CorrelatorTable, g_max: usize, n_max: usize) -> Vec<Value> {
    table
        .values
        .iter()
        .filter(|(k, _)| k.g <= g_max && k.n() <= n_max)
        .map(|(k, v)| {
            json!({
                "g": k.g,
                "insertions": insertions(k),
                "value": v,
                "provenance": table.provenance.get(k),
            })
        })
        .collect()
}

fn correlators(spec: &JobSpec, model: &AnModel) -> anyhow::Result<Value> {
    if spec.caustic {
        let table = caustic_table(model, &caustic_options(spec))?;
        return Ok(json!({
            "correlators": entries(&table, spec.g_max, spec.n_max),
            "residual_report": { "semisimple": model.semisimple, "u_gap": model.u_gap },
        }));
    }
    let frame = model.canonical_frame()?;
    let (table, _) = build_table(model, &frame, &table_options(spec, spec.g_max, spec.n_max))?;
    let r = RMatrix::compute(model, &frame, spec.order)?;
    let flagged: Vec<Value> = table.flagged.iter().map(|k| json!({ "g": k.g, "insertions": insertions(k) })).collect();
    Ok(json!({
        "correlators": entries(&table, spec.g_max, spec.n_max),
        "residual_report": {
            "semisimple": true,
            "u_gap": model.u_gap,
            "r_matrix": r.residuals(&frame),
            "flagged": flagged,
        },
    }))
}

fn check(name: &str, max_error: f64, tolerance: f64) -> Value {
    json!({ "name": name, "max_error": max_error, "tolerance": tolerance, "pass": max_error <= tolerance })
}

fn verify(spec: &JobSpec, model: &AnModel) -> anyhow::Result<Value> {
    let frame = model.canonical_frame()?;
    let mut checks = Vec::new();

    let mut r = RMatrix::compute(model, &frame, spec.order.max(8))?;
    if let Some(eps) = spec.perturb_r {
        r.series.coeffs_mut()[1].iter_mut().for_each(|x| *x += eps);
    }
    let res = r.residuals(&frame);
    let worst = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    checks.push(check("r_unitarity", worst(&res.unitarity), CERTIFICATE_TOL));
    checks.push(check("r_connection", worst(&res.ode), CERTIFICATE_TOL));

    let opts = table_options(spec, spec.g_max, spec.n_max);
    let (table, data) = build_table(model, &frame, &opts)?;
    let mut slot: f64 = 0.0;
    let mut dilaton: f64 = 0.0;
    let unit = model.unit_index();
    for (k, v) in &table.values {
        if k.n() >= 2 && k.n() <= closure_n(spec.g_max, spec.n_max, k.g) {
            for first in 1..k.n() {
                let alt = eo_step(&data, &table, k, first)?.value;
                slot = slot.max((alt - v).norm() / (1.0 + v.norm()));
            }
        }
        let mut ins = k.ins.clone();
        ins.push(Insertion { a: unit, k: 1 });
        if let Ok(w) = table.get(&CorrelatorKey::new(k.g, ins)) {
            let expect = v * k.chi() as f64;
            dilaton = dilaton.max((w - expect).norm() / (1.0 + expect.norm()));
        }
    }
    checks.push(check("slot_symmetry", slot, SYMMETRY_TOL));
    checks.push(check("dilaton", dilaton, SYMMETRY_TOL));

    let flips: Vec<usize> = (0..model.n).collect();
    let (flipped, _) = build_table(model, &frame.with_flipped_branches(&flips), &opts)?;
    let mut branch: f64 = 0.0;
    for (k, v) in &table.values {
        branch = branch.max((flipped.get(k)? - v).norm() / (1.0 + v.norm()));
    }
    checks.push(check("branch_independence", branch, SYMMETRY_TOL));

    let oracle_opts = OracleOptions { g_max: spec.g_max.min(2), ..Default::default() };
    let r_oracle = RMatrix::compute(model, &frame, 8)?;
    let oracle = ancestor_via_quantization(model, &frame, &r_oracle, &oracle_opts)?;
    let (big, _) = build_table(model, &frame, &table_options(spec, oracle_opts.g_max, 3))?;
    let mut agreement: f64 = 0.0;
    let mut tameness: f64 = 0.0;
    for (k, v) in &oracle {
        if !k.is_tame() {
            tameness = tameness.max(v.norm());
            continue;
        }
        let w = big.get(k)?;
        agreement = agreement.max((w - v).norm() / v.norm().max(w.norm()).max(1e-3));
    }
    checks.push(check("oracle_agreement", agreement, ORACLE_TOL));
    checks.push(check("oracle_tameness", tameness, 1e-9));

    if model.n == 1 {
        let cache = IntersectionCache::new();
        let lambda = model.delta[0];
        let mut worst: f64 = 0.0;
        for (k, v) in &table.values {
            let ks: Vec<usize> = k.ins.iter().map(|i| i.k).collect();
            let exact = cache.get(k.g, &ks)?.to_f64().unwrap_or(f64::NAN);
            let expect = C64::new(exact, 0.0) * lambda.powi(k.g as i32 - 1);
            worst = worst.max((v - expect).norm() / expect.norm().max(1e-300));
        }
        checks.push(check("intersection_numbers", worst, 1e-9));
    }

    let pass = checks.iter().all(|c| c["pass"] == true);
    Ok(json!({ "checks": checks, "pass": pass }))
}

fn sweep(spec: &JobSpec) -> anyhow::Result<Value> {
    let sw = spec.sweep.as_ref().expect("sweep spec is validated");
    let rep = caustic_sweep(&spec.t, &sw.direction, &sw.eps, &caustic_options(spec))?;
    let tol = spec.tol.unwrap_or(SWEEP_TOL);
    let rows: Vec<Value> = rep
        .keys
        .iter()
        .enumerate()
        .map(|(j, k)| {
            json!({
                "g": k.g,
                "insertions": insertions(k),
                "sequence": rep.values[j],
                "limit": rep.limits[j],
                "extrapolation_err": rep.extrapolation_err[j],
                "caustic": rep.caustic[j],
                "deviation": rep.deviation[j],
            })
        })
        .collect();
    Ok(json!({
        "sweep": { "direction": sw.direction, "eps": rep.eps },
        "rows": rows,
        "max_deviation": rep.max_deviation,
        "flagged": rep.flagged,
        "tolerance": tol,
        "pass": rep.max_deviation <= tol,
    }))
}

fn extended(spec: &JobSpec, model: &AnModel, deg: usize) -> anyhow::Result<Value> {
    let rep = compare_extended(model, spec.g_max, deg, &ExtendedOptions::default())?;
    let tol = spec.tol.unwrap_or(EXTENDED_TOL);
    let rows: Vec<Value> = rep
        .rows
        .iter()
        .map(|r| {
            json!({
                "g": r.key.g,
                "insertions": insertions(&r.key),
                "residue_sum": r.residue_sum,
                "extended": r.extended,
                "rel_err": r.rel_err,
            })
        })
        .collect();
    Ok(json!({
        "rows": rows,
        "max_rel_err": rep.max_rel_err,
        "tolerance": tol,
        "pass": rep.max_rel_err <= tol,
    }))
}
