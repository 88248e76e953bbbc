//! Known values checked against hand computation or independent brute force.

use std::f64::consts::PI;

use qdilate::generators::{
    clock, cyclic_shift, gen_clock_shift, gen_mixed_brehmer, gen_sylvester_qpair, Combine,
    TwistSpec,
};
use qdilate::linalg::{
    c, cis, diag, douglas_solve, fro, from_real_rows, hermitian_sqrt, identity, sot_limit_power,
    sylvester_nullspace, zeros, ComplexMatrix, RelationVariant, ToleranceConfig,
};
use qdilate::pair::{build_gap_unitary, build_w, dilate_pair, TruncatedPairSpace};
use qdilate::phase::{verify_doubly_q, PhaseMatrix, QPair, QTuple};
use qdilate::tuple::{
    brehmer_check, brehmer_dilation, dilation_map_pi, fuglede_putnam_check, ordered_product,
    szego_defect,
};

fn cfg() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn scalar(v: f64) -> ComplexMatrix {
    ComplexMatrix::from_element(1, 1, c(v, 0.0))
}

#[test]
fn defect_root_of_scaled_flip() {
    let t = from_real_rows(&[&[0.0, 0.5], &[0.5, 0.0]]);
    let d = hermitian_sqrt(&(identity(2) - t.adjoint() * &t), &cfg()).unwrap();
    let expected = identity(2) * c(0.75f64.sqrt(), 0.0);
    assert!(fro(&(d - expected)) < 1e-14);
}

#[test]
fn commuting_scalar_defect() {
    let t = QTuple::new(vec![scalar(0.5), scalar(0.5)], PhaseMatrix::zeros(2)).unwrap();
    assert!((szego_defect(&t)[(0, 0)].re - 0.5625).abs() < 1e-15);
}

#[test]
fn douglas_on_projection() {
    let x = from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
    let t = diag(&[c(0.3, 0.4), c(-0.9, 0.0)]);
    let f = douglas_solve(&x, &t, &cfg()).unwrap();
    assert_eq!(f.rank(), 1);
    assert!((f.s[(0, 0)] - c(0.3, 0.4)).norm() < 1e-14);
}

#[test]
fn sot_limit_of_diagonal() {
    let a = diag(&[c(1.0, 0.0), c(0.5, 0.0)]);
    let lim = sot_limit_power(&a, &cfg()).unwrap();
    assert!(fro(&(lim.limit - diag(&[c(1.0, 0.0), c(0.0, 0.0)]))) < 1e-11);
}

#[test]
fn clock_solves_anticommutation_with_shift() {
    let basis = sylvester_nullspace(
        &cyclic_shift(2),
        &(identity(2) * c(-1.0, 0.0)),
        RelationVariant::Left,
        &cfg(),
    )
    .unwrap();
    // Solutions anticommute with the flip: span{diag(1, -1), [[0, -i], [i, 0]]}.
    assert_eq!(basis.len(), 2);
    let z = clock(2);
    let mut proj = zeros(2, 2);
    for b in &basis {
        proj += b * (b.adjoint() * &z).trace();
    }
    assert!(fro(&(proj - z)) < 1e-12);
}

#[test]
fn phase_values() {
    let p = PhaseMatrix::uniform(2, PI);
    assert!((p.q_value(0, 1).unwrap() + c(1.0, 0.0)).norm() < 1e-15);
    assert!((p.q_half(0, 1).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
    assert!((p.q_half(1, 0).unwrap() - c(0.0, -1.0)).norm() < 1e-15);
    assert!((p.monomial_phase(0, &[0, 2]).unwrap() + c(1.0, 0.0)).norm() < 1e-15);
    assert!((p.monomial_phase(0, &[5, 1]).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
    assert!((p.cross_phase(&[1, 1]).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
}

#[test]
fn w_on_scalar_contraction() {
    let space = TruncatedPairSpace::new(1, 3).unwrap();
    let w = build_w(&scalar(0.6), &identity(1), true, &space, &cfg()).unwrap();
    let col = w.column(0);
    assert!((col[0].re - 0.6).abs() < 1e-15);
    assert!((col[1].re - 0.8).abs() < 1e-15);
    assert!(col.iter().skip(2).all(|z| z.norm() == 0.0));
}

#[test]
fn gap_unitary_for_zero_pair_fixes_range() {
    let pair = QPair::new(zeros(1, 1), zeros(1, 1), identity(1), RelationVariant::Left).unwrap();
    let g = build_gap_unitary(&pair, &cfg()).unwrap().unitary;
    let a = ComplexMatrix::from_column_slice(
        4,
        1,
        &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
    );
    assert!(fro(&(&g * &a - &a)) < 1e-14);
}

/// `P_H V1^k1 V2^k2 |_H` evaluated column by column with plain loops.
#[test]
fn pair_powers_against_naive_products() {
    for variant in RelationVariant::ALL {
        let pair = gen_sylvester_qpair(3, variant, &TwistSpec::Random, 11, 0.8).unwrap();
        let (dil, _) = dilate_pair(&pair, 4, &cfg()).unwrap();
        let h = pair.dim();
        for k1 in 0..=2 {
            for k2 in 0..=2 {
                let mut expected = identity(h);
                for _ in 0..k1 {
                    expected = &pair.t1 * expected;
                }
                let mut t2k = identity(h);
                for _ in 0..k2 {
                    t2k = &pair.t2 * t2k;
                }
                expected *= t2k;
                for col in 0..h {
                    let mut v = ComplexMatrix::zeros(dil.space.dim(), 1);
                    v[(col, 0)] = c(1.0, 0.0);
                    for _ in 0..k2 {
                        v = &dil.v2 * v;
                    }
                    for _ in 0..k1 {
                        v = &dil.v1 * v;
                    }
                    for row in 0..h {
                        assert!((v[(row, 0)] - expected[(row, col)]).norm() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn fuglede_on_diagonal_normal() {
    let n = diag(&[c(1.0, 0.0), c(0.0, 1.0)]);
    let x = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
    // X N = i N X for this pair; the conclusion then carries -i.
    let rep = fuglede_putnam_check(&x, &n, c(0.0, 1.0), &cfg()).unwrap();
    assert!(rep.passed);
    assert!(fro(&(&x * n.adjoint() - (n.adjoint() * &x) * c(0.0, -1.0))) < 1e-15);
    assert!(fuglede_putnam_check(&x, &n, c(0.0, -1.0), &cfg()).is_err());
}

#[test]
fn clock_shift_doubly_q_by_normality() {
    for d in [2, 3, 5] {
        let t = gen_clock_shift(d, 0.9).unwrap();
        assert!(verify_doubly_q(&t, &cfg()).passed);
    }
    // A q-commuting pair that is not doubly q-commuting: J and J^2 with J nilpotent.
    let j = ComplexMatrix::from_fn(
        3,
        3,
        |r, s| if r == s + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) },
    );
    let t = QTuple::new(vec![j.clone(), &j * &j], PhaseMatrix::zeros(2)).unwrap();
    let rep = verify_doubly_q(&t, &cfg());
    assert!(rep.max_relation_residual < 1e-15);
    assert!(!rep.passed);
}

#[test]
fn ordered_products_anticommuting() {
    let t = gen_clock_shift(2, 1.0).unwrap();
    let p = ordered_product(&t, &[0, 1]).unwrap();
    assert!(fro(&(p + t.op(1) * t.op(0))) < 1e-15);
}

/// `||Π h||^2 = sum_k ||D T*^k h||^2` from an explicit geometric series.
#[test]
fn pi_geometric_series() {
    let t = QTuple::new(vec![scalar(0.5)], PhaseMatrix::zeros(1)).unwrap();
    let d = hermitian_sqrt(&szego_defect(&t), &cfg()).unwrap();
    let (_, pi) = dilation_map_pi(&t, &[0], &d, 60).unwrap();
    for k in 0..=60 {
        assert!((pi[(k, 0)].re - 0.75f64.sqrt() * 0.5f64.powi(k as i32)).abs() < 1e-15);
    }
    let norm_sq: f64 = pi.iter().map(|z| z.norm_sqr()).sum();
    let series: f64 = (0..=60).map(|k| 0.75 * 0.25f64.powi(k)).sum();
    assert!((norm_sq - series).abs() < 1e-15);
    assert!((norm_sq - 1.0).abs() < 1e-15);
}

#[test]
fn indefinite_scalar_search() {
    // Scalar tuples always have (1 - t1^2)(1 - t2^2) >= 0; the 2x2 nilpotent pair does not.
    for &(a, b) in &[(0.9, 0.9), (1.0, 0.3), (0.2, 0.0)] {
        let t = QTuple::new(vec![scalar(a), scalar(b)], PhaseMatrix::zeros(2)).unwrap();
        assert!(brehmer_check(&t, &cfg()).unwrap().passed);
    }
    let j = from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]);
    let t = QTuple::new(vec![j.clone(), j], PhaseMatrix::zeros(2)).unwrap();
    let rep = brehmer_check(&t, &cfg()).unwrap();
    assert!(!rep.passed);
    assert!((rep.first_failure().unwrap().min_eigenvalue + 1.0).abs() < 1e-12);
}

#[test]
fn unitary_tuple_lives_on_empty_subset() {
    let t = gen_mixed_brehmer(3, &[], 1, 3, 1.0, Combine::Tensor, 21).unwrap();
    let dil = brehmer_dilation(&t, None, &cfg()).unwrap();
    assert!(dil.report.passed);
    let empty = dil.part(&[]).unwrap();
    assert_eq!(empty.diagnostics.rank, t.dim());
    assert!(fro(&(empty.pi.adjoint() * &empty.pi - identity(t.dim()))) < 1e-10);
    for p in dil.parts.iter().filter(|p| !p.subset.is_empty()) {
        assert!(p.diagnostics.pi_norm < 1e-8, "{:?}", p.subset);
    }
}

#[test]
fn unitary_times_strict_contraction() {
    // T1 unitary, T2 = 0.5 T1: only G = {2} contributes.
    let u = diag(&[cis(0.3), cis(1.9)]);
    let t = QTuple::new(vec![u.clone(), u * c(0.5, 0.0)], PhaseMatrix::zeros(2)).unwrap();
    let dil = brehmer_dilation(&t, None, &cfg()).unwrap();
    assert!(dil.report.passed, "{:?}", dil.report.checks());
    let norms: Vec<(Vec<usize>, f64)> = dil
        .parts
        .iter()
        .map(|p| (p.subset.clone(), p.diagnostics.pi_norm))
        .collect();
    for (g, n) in &norms {
        if g == &vec![1] {
            assert!((n * n - 2.0).abs() < 1e-8, "{norms:?}");
        } else {
            assert!(*n < 1e-8, "{norms:?}");
        }
    }
}
