mod common;

use common::*;
use macroent::linalg::*;
use macroent::quantum::{pauli_x, pauli_y, pauli_z, rme_state, spin1_x, spin1_y};
use proptest::prelude::*;

fn reconstruct(es: &EigenSystem) -> CMatrix {
    es.map(|v| v)
}

#[test]
fn sx_sy_expectation_matches_quadruple_loop() {
    let s = rme_state();
    let psi = s.pure_state().unwrap();
    let (sx, sy) = (pauli_x(), pauli_y());
    let op = tensor(&sx, &sy);
    let via_tensor = expect(&s.sigma, &op).unwrap();
    let d = 2;
    let mut brute = c(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    brute += psi.amp(i, j).conj() * sx[(i, k)] * sy[(j, l)] * psi.amp(k, l);
                }
            }
        }
    }
    assert!((via_tensor - brute).norm() < 1e-14);
}

#[test]
fn tensor_of_identities_is_identity() {
    let i = tensor(&CMatrix::identity(2), &CMatrix::identity(3));
    assert_eq!(i.max_abs_diff(&CMatrix::identity(6)), 0.0);
}

#[test]
fn partial_trace_recovers_reduced_state_of_rme() {
    let s = rme_state();
    let rho_a = partial_trace(&s.sigma, &[2, 2], &[0]).unwrap();
    let c2 = (std::f64::consts::PI / 8.0).cos().powi(2);
    assert!((rho_a[(0, 0)].re - c2).abs() < 1e-14);
    assert!((rho_a[(1, 1)].re - (1.0 - c2)).abs() < 1e-14);
    assert!(rho_a[(0, 1)].norm() < 1e-14);
}

#[test]
fn partial_trace_rejects_bad_arguments() {
    let m = CMatrix::identity(4);
    assert!(partial_trace(&m, &[2, 3], &[0]).is_err());
    assert!(partial_trace(&m, &[2, 2], &[1, 0]).is_err());
    assert!(partial_trace(&m, &[2, 2], &[2]).is_err());
}

#[test]
fn operator_norms_of_spin_operators() {
    assert!((operator_norm(&pauli_z()) - 1.0).abs() < 1e-12);
    assert!((operator_norm(&spin1_x()) - 1.0).abs() < 1e-12);
    assert!((operator_norm(&spin1_y()) - 1.0).abs() < 1e-12);
    let k = commutator(&pauli_x(), &pauli_y());
    assert!((operator_norm(&k) - 2.0).abs() < 1e-12);
}

#[test]
fn eigen_decomposition_handles_threefold_degeneracy() {
    let es = eig_hermitian(&CMatrix::identity(3).scale_real(0.5)).unwrap();
    let spaces = es.eigenspaces();
    assert_eq!(spaces.len(), 1);
    assert!(spaces[0].1.max_abs_diff(&CMatrix::identity(3)) < 1e-12);
}

#[test]
fn non_hermitian_input_is_rejected() {
    let m = CMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    assert!(eig_hermitian(&m).is_err());
    assert!(min_eigenvalue(&m).is_err());
}

proptest! {
    #[test]
    fn eigen_reconstruction(h in (2usize..=9).prop_flat_map(hermitian_strategy)) {
        let es = eig_hermitian(&h).unwrap();
        prop_assert!(reconstruct(&es).max_abs_diff(&h) < 1e-10);
        prop_assert!(es.values.windows(2).all(|w| w[0] >= w[1]));
        let n = h.rows();
        for i in 0..n {
            for j in 0..n {
                let ip = inner(&es.vectors[i], &es.vectors[j]);
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ip - c(expected, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn eigenspace_projectors_resolve_identity(h in (2usize..=4).prop_flat_map(hermitian_strategy)) {
        let es = eig_hermitian(&h).unwrap();
        let mut sum = CMatrix::zeros(h.rows(), h.rows());
        for (_, p) in es.eigenspaces() {
            prop_assert!((&p * &p).max_abs_diff(&p) < 1e-10);
            sum = &sum + &p;
        }
        prop_assert!(sum.max_abs_diff(&CMatrix::identity(h.rows())) < 1e-10);
    }

    #[test]
    fn tensor_mixed_product(a in complex_matrix_strategy(2, 2), b in complex_matrix_strategy(3, 3),
                            c2 in complex_matrix_strategy(2, 2), d in complex_matrix_strategy(3, 3)) {
        let lhs = &tensor(&a, &b) * &tensor(&c2, &d);
        let rhs = tensor(&(&a * &c2), &(&b * &d));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn tensor_trace_factorizes(a in complex_matrix_strategy(3, 3), b in complex_matrix_strategy(2, 2)) {
        prop_assert!((tensor(&a, &b).trace() - a.trace() * b.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product(a in hermitian_strategy(2), b in hermitian_strategy(3)) {
        let m = tensor(&a, &b);
        let ta = partial_trace(&m, &[2, 3], &[0]).unwrap();
        let tb = partial_trace(&m, &[2, 3], &[1]).unwrap();
        prop_assert!(ta.max_abs_diff(&a.scale(b.trace())) < 1e-12);
        prop_assert!(tb.max_abs_diff(&b.scale(a.trace())) < 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace(m in complex_matrix_strategy(8, 8), keep in 0usize..3) {
        let t = partial_trace(&m, &[2, 2, 2], &[keep]).unwrap();
        prop_assert!((t.trace() - m.trace()).norm() < 1e-12);
        let full = partial_trace(&m, &[2, 2, 2], &[0, 1, 2]).unwrap();
        prop_assert_eq!(full.max_abs_diff(&m), 0.0);
    }

    #[test]
    fn apply_local_matches_embedded_operator(op in hermitian_strategy(2), site in 0usize..3,
                                             v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8)) {
        let state: Vec<_> = v.into_iter().map(|(a, b)| c(a, b)).collect();
        let id = CMatrix::identity(2);
        let factors: Vec<&CMatrix> = (0..3).map(|k| if k == site { &op } else { &id }).collect();
        let embedded = tensor_all(&factors);
        let direct = embedded.apply(&state);
        let local = apply_local(&state, 2, site, 3, &op);
        for (x, y) in direct.iter().zip(&local) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn hermitian_params_round_trip(p in prop::collection::vec(-2.0f64..2.0, 9)) {
        let h = hermitian_from_params(3, &p);
        prop_assert!(h.is_hermitian(0.0));
        let back = hermitian_to_params(&h);
        for (a, b) in p.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn commutator_is_antihermitian_for_hermitian_inputs(a in hermitian_strategy(3), b in hermitian_strategy(3)) {
        let k = commutator(&a, &b);
        prop_assert!(k.max_abs_diff(&k.adjoint().scale_real(-1.0)) < 1e-12);
        prop_assert!(k.trace().norm() < 1e-12);
    }

    #[test]
    fn operator_norm_bounds(m in complex_matrix_strategy(3, 3)) {
        let n = operator_norm(&m);
        let max_entry = m.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(n + 1e-12 >= max_entry);
        prop_assert!(n <= m.frobenius_norm() + 1e-12);
    }

    #[test]
    fn adjoint_reverses_products(a in complex_matrix_strategy(2, 3), b in complex_matrix_strategy(3, 2)) {
        let lhs = (&a * &b).adjoint();
        let rhs = &b.adjoint() * &a.adjoint();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }
}
