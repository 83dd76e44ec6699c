use ancestrec::recursion::{build_table, eo_step, TableOptions};
use ancestrec::series::MatrixSeriesZ;
use ancestrec::{AnModel, CMatrix, ComplexPolynomial, CorrelatorKey, Insertion, ModelOptions, PuiseuxSeries, RMatrix, C64};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn series(base: C64) -> impl Strategy<Value = PuiseuxSeries> {
    (-4..2i32, prop::collection::vec(complex(), 1..8), 0..6i32).prop_map(move |(val, coeffs, extra)| {
        let trunc = val + coeffs.len() as i32 - 1 + extra;
        PuiseuxSeries::from_coeffs(base, val, coeffs, trunc)
    })
}

fn agree(a: &PuiseuxSeries, b: &PuiseuxSeries, tol: f64) -> bool {
    let top = a.trunc_order().min(b.trunc_order());
    let low = a.val().min(b.val());
    (low..=top).all(|e| (a.coeff(e).unwrap() - b.coeff(e).unwrap()).norm() <= tol)
}

fn semisimple_a2(t: [C64; 2]) -> Option<AnModel> {
    AnModel::build(2, &t, &ModelOptions::default()).ok().filter(|m| m.semisimple && m.u_gap >= 0.1)
}

proptest! {
    #[test]
    fn puiseux_ring_axioms(a in series(C64::new(0.3, 0.0)), b in series(C64::new(0.3, 0.0)), c in series(C64::new(0.3, 0.0))) {
        let ab = a.mul(&b).unwrap();
        prop_assert!(agree(&ab, &b.mul(&a).unwrap(), 1e-12));
        prop_assert!(agree(&ab.mul(&c).unwrap(), &a.mul(&b.mul(&c).unwrap()).unwrap(), 1e-11));
        let left = a.mul(&b.add(&c).unwrap()).unwrap();
        let right = ab.add(&a.mul(&c).unwrap()).unwrap();
        prop_assert!(agree(&left, &right, 1e-11));
    }

    #[test]
    fn puiseux_inverse(a in series(C64::new(-0.2, 0.1))) {
        let lead = a.valuation().map(|v| a.coeff(v).unwrap().norm()).unwrap_or(0.0);
        prop_assume!(lead > 0.2);
        let one = a.mul(&a.invert().unwrap()).unwrap();
        let unit = PuiseuxSeries::monomial(a.base(), C64::new(1.0, 0.0), 0);
        prop_assert!(agree(&one, &unit, 1e-8));
    }

    #[test]
    fn residue_of_derivative_vanishes(a in series(C64::new(0.0, 0.0))) {
        let even = PuiseuxSeries::from_coeffs(
            a.base(),
            2 * a.val(),
            a.terms().flat_map(|(_, c)| [c, C64::new(0.0, 0.0)]).collect(),
            2 * a.trunc_order(),
        );
        prop_assume!(even.trunc_order() >= 0);
        prop_assert!(even.differentiate().residue(1e-12).unwrap().norm() == 0.0);
    }

    #[test]
    fn polynomial_roots_reconstruct(coeffs in prop::collection::vec(complex(), 2..8)) {
        let mut c = coeffs;
        c.push(C64::new(1.0, 0.0));
        let p = ComplexPolynomial::new(c);
        let roots = p.roots(1e-13, 0.0).unwrap().values;
        prop_assert_eq!(roots.len(), p.degree());
        let mut q = ComplexPolynomial::from_real(&[1.0]);
        for r in &roots {
            q = q.mul(&ComplexPolynomial::new(vec![-r, C64::new(1.0, 0.0)]));
        }
        let diff = q.add(&p.scale(C64::new(-1.0, 0.0)));
        prop_assert!(diff.norm() <= 1e-8 * p.norm(), "{:?}", diff);
    }

    #[test]
    fn matrix_log_exp_roundtrip(entries in prop::collection::vec(complex(), 12)) {
        let mut coeffs = vec![CMatrix::identity(2, 2)];
        for chunk in entries.chunks(4) {
            coeffs.push(CMatrix::from_iterator(2, 2, chunk.iter().copied()));
        }
        let m = MatrixSeriesZ::new(coeffs).unwrap();
        let back = m.log().unwrap().exp();
        for k in 0..=m.order() {
            prop_assert!((back.coeff(k) - m.coeff(k)).norm() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn r_matrix_symplectic(t0 in complex(), t1 in complex()) {
        let m = semisimple_a2([t0, t1]);
        prop_assume!(m.is_some());
        let m = m.unwrap();
        let f = m.canonical_frame().unwrap();
        let res = RMatrix::compute(&m, &f, 6).unwrap().residuals(&f);
        prop_assert!(res.max() < 1e-10, "{:?}", res);
    }

    #[test]
    fn recursion_symmetric_and_dilaton(t0 in complex(), t1 in complex()) {
        let m = semisimple_a2([t0, t1]);
        prop_assume!(m.is_some());
        let m = m.unwrap();
        let f = m.canonical_frame().unwrap();
        let (table, data) = build_table(&m, &f, &TableOptions { g_max: 1, n_max: 2, ..Default::default() }).unwrap();
        let unit = m.unit_index();
        for (key, v) in &table.values {
            if key.n() >= 2 && key.n() <= 3 {
                let alt = eo_step(&data, &table, key, key.n() - 1).unwrap().value;
                prop_assert!((alt - v).norm() <= 1e-8 * (1.0 + v.norm()), "{:?}", key);
            }
            if key.g == 1 && key.n() == 1 {
                let mut ins = key.ins.clone();
                ins.push(Insertion { a: unit, k: 1 });
                let w = table.get(&CorrelatorKey::new(1, ins)).unwrap();
                prop_assert!((w - v).norm() <= 1e-8 * (1.0 + v.norm()), "{:?}", key);
            }
        }
    }
}
