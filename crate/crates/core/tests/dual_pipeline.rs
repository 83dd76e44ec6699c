use ancestrec::frobenius::ModelOptions;
use ancestrec::quantization::{ancestor_via_quantization, OracleOptions};
use ancestrec::recursion::{build_table, TableOptions};
use ancestrec::{AnModel, RMatrix, C64};

#[test]
fn a2_oracle_matches_recursion() {
    let t = [C64::new(-0.6, 0.2), C64::new(0.15, -0.1)];
    let m = AnModel::build(2, &t, &ModelOptions::default()).unwrap();
    let f = m.canonical_frame().unwrap();
    let (table, _) = build_table(&m, &f, &TableOptions { g_max: 2, n_max: 3, ..Default::default() }).unwrap();
    let r = RMatrix::compute(&m, &f, 8).unwrap();
    let oracle = ancestor_via_quantization(&m, &f, &r, &OracleOptions::default()).unwrap();
    let mut checked = 0;
    let mut bad = Vec::new();
    for (key, v) in &oracle {
        if !key.is_tame() {
            assert!(v.norm() < 1e-9, "non-tame {key:?} {v}");
            continue;
        }
        let w = table.get(key).unwrap();
        checked += 1;
        if (w - v).norm() > 1e-6 * v.norm().max(w.norm()).max(1e-3) {
            bad.push(format!("{key:?} oracle {v} recursion {w}"));
        }
    }
    assert!(bad.is_empty(), "{} / {checked} mismatches:\n{}", bad.len(), bad.join("\n"));
    assert!(checked > 50);
}
