//! Property-based invariants across randomized inputs.

use frfsense::experiments::{add_noise, od_mae, ReconstructionMap};
use frfsense::frf::{normalize_columns, FrfMatrix};
use frfsense::gram::{gram, gram_modal_approx, gram_norms};
use frfsense::lasso::{default_mu, kkt_residual, LassoProblem};
use frfsense::modal::{build_chain, mof, solve_modes};
use frfsense::placement::greedy_select;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), rows * cols).prop_map(
        move |v| DMatrix::from_fn(rows, cols, |i, j| {
            let (re, im) = v[i * cols + j];
            Complex64::new(re, im)
        }),
    )
}

fn nondegenerate(values: &DMatrix<Complex64>) -> bool {
    values.column_iter().all(|c| c.norm() > 1e-6)
}

fn as_frf(values: DMatrix<Complex64>) -> FrfMatrix {
    FrfMatrix {
        omega: 100.0,
        rows: (0..values.nrows()).collect(),
        cols: (0..values.ncols()).collect(),
        values,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mof_is_linear_in_omega_and_zeta(
        n in 4usize..12,
        r in 0usize..3,
        omega in 1.0f64..1e4,
        s in 0.1f64..10.0,
        alpha in 1e-5f64..1e-2,
        beta in 1e-6f64..1e-3,
    ) {
        let modal = solve_modes(&build_chain(n, 2.0, 2e6, alpha, beta).unwrap()).unwrap();
        let base = mof(&modal, r, omega).unwrap();
        let scaled_w = mof(&modal, r, s * omega).unwrap();
        prop_assert!((scaled_w - s * base).abs() <= 1e-9 * (1.0 + (s * base).abs()));
        let mut scaled = modal.clone();
        scaled.damping_ratios[r] *= s;
        let scaled_z = mof(&scaled, r, omega).unwrap();
        prop_assert!((scaled_z - s * base).abs() <= 1e-9 * (1.0 + (s * base).abs()));
    }

    #[test]
    fn normalization_is_idempotent_and_scale_invariant(
        values in complex_matrix(5, 7),
        scale in 0.01f64..100.0,
    ) {
        prop_assume!(nondegenerate(&values));
        let h = as_frf(values.clone());
        let nf = normalize_columns(&h).unwrap();
        for j in 0..7 {
            prop_assert!((nf.h_bar.column(j).norm() - 1.0).abs() < 1e-12);
        }
        let fixed = normalize_columns(&as_frf(nf.h_bar.clone())).unwrap();
        prop_assert!((&fixed.h_bar - &nf.h_bar).norm() < 1e-12);
        let scaled = normalize_columns(&as_frf(values * Complex64::new(scale, 0.0))).unwrap();
        prop_assert!((&scaled.h_bar - &nf.h_bar).norm() < 1e-10);
    }

    #[test]
    fn gram_is_hermitian_psd_with_bounded_coherence(values in complex_matrix(6, 6)) {
        prop_assume!(nondegenerate(&values));
        let nf = normalize_columns(&as_frf(values)).unwrap();
        let g = gram(&nf);
        prop_assert!((&g.values - g.values.adjoint()).norm() < 1e-12);
        for i in 0..6 {
            prop_assert!((g.values[(i, i)].re - 1.0).abs() < 1e-12);
            for j in 0..6 {
                prop_assert!(g.values[(i, j)].norm() <= 1.0 + 1e-9);
            }
        }
        // PSD via the real symmetric embedding of the Hermitian matrix
        let emb = DMatrix::from_fn(12, 12, |i, j| {
            let z = g.values[(i % 6, j % 6)];
            match (i / 6, j / 6) {
                (0, 0) | (1, 1) => z.re,
                (0, 1) => -z.im,
                _ => z.im,
            }
        });
        let eig = nalgebra::linalg::SymmetricEigen::new(emb);
        prop_assert!(eig.eigenvalues.min() > -1e-10);
        let norms = gram_norms(&g);
        let expect = (norms.frobenius.powi(2) - 6.0).sqrt();
        prop_assert!((norms.offdiag_frobenius - expect).abs() < 1e-9);
    }

    #[test]
    fn modal_approx_is_additive_and_permutation_invariant(
        split in 1usize..9,
        alpha in 1e-5f64..1e-3,
    ) {
        let sys = build_chain(10, 2.0, 2e6, alpha, 1e-4).unwrap();
        let modal = solve_modes(&sys).unwrap();
        let omega = 0.9 * modal.natural_freqs[3];
        let all_nodes: Vec<usize> = (0..10).collect();
        let h = frfsense::frf::frf_direct(&sys, &all_nodes, &all_nodes, omega).unwrap();
        let nf = normalize_columns(&h).unwrap();
        let lo: Vec<usize> = (0..split).collect();
        let hi: Vec<usize> = (split..10).collect();
        let mut shuffled: Vec<usize> = hi.iter().rev().copied().collect();
        shuffled.extend(lo.iter().rev());
        let a = gram_modal_approx(&modal, &lo, omega, &nf.col_norms).unwrap();
        let b = gram_modal_approx(&modal, &hi, omega, &nf.col_norms).unwrap();
        let full = gram_modal_approx(&modal, &all_nodes, omega, &nf.col_norms).unwrap();
        let perm = gram_modal_approx(&modal, &shuffled, omega, &nf.col_norms).unwrap();
        prop_assert!((&a + &b - &full).norm() < 1e-12 * (1.0 + full.norm()));
        prop_assert!((&perm - &full).norm() < 1e-12 * (1.0 + full.norm()));
    }

    #[test]
    fn greedy_output_is_scale_invariant(
        values in complex_matrix(8, 8),
        scale in 0.01f64..100.0,
        budget in 1usize..8,
    ) {
        prop_assume!(nondegenerate(&values));
        let a = greedy_select(&normalize_columns(&as_frf(values.clone())).unwrap(), budget)
            .unwrap();
        let b = greedy_select(
            &normalize_columns(&as_frf(values * Complex64::new(scale, 0.0))).unwrap(),
            budget,
        )
        .unwrap();
        prop_assert_eq!(a.selected, b.selected);
    }

    #[test]
    fn noise_hits_requested_snr_exactly(
        snr in -10.0f64..60.0,
        seed in 0u64..1000,
        v in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 4..12),
    ) {
        let y = DVector::from_iterator(v.len(), v.iter().map(|&(re, im)| Complex64::new(re, im)));
        prop_assume!(y.norm() > 1e-6);
        let noisy = add_noise(&y, snr, seed).unwrap();
        let ratio = (&noisy - &y).norm() / y.norm();
        prop_assert!((ratio - 10f64.powf(-snr / 20.0)).abs() < 1e-12 * (1.0 + ratio));
        prop_assert_eq!(add_noise(&y, snr, seed).unwrap(), noisy);
    }

    #[test]
    fn od_mae_invariances(
        values in complex_matrix(5, 5),
        theta in 0.0f64..std::f64::consts::TAU,
        row in 0usize..5,
    ) {
        let base = ReconstructionMap {
            values: values.clone(),
            omega: 1.0,
            sensor_set: vec![0],
            snr_db: 20.0,
            seed: 0,
            n_nonconverged: 0,
        };
        let t = ReconstructionMap { values: values.transpose(), ..base.clone() };
        prop_assert!((od_mae(&base) - od_mae(&t)).abs() < 1e-12);
        let mut rotated = values;
        let phase = Complex64::from_polar(1.0, theta);
        for j in 0..5 {
            rotated[(row, j)] *= phase;
        }
        let r = ReconstructionMap { values: rotated, ..base.clone() };
        prop_assert!((od_mae(&base) - od_mae(&r)).abs() < 1e-12);
    }

    #[test]
    fn kkt_is_zero_at_origin_above_threshold(values in complex_matrix(4, 6)) {
        prop_assume!(nondegenerate(&values));
        let nf = normalize_columns(&as_frf(values)).unwrap();
        let mut y = DVector::from_fn(4, |i, _| Complex64::new(1.0 + i as f64, -0.5));
        y /= Complex64::new(y.norm(), 0.0);
        let mu = default_mu(&nf.h_bar, &y, 1.0).unwrap();
        let p = LassoProblem::new(nf.h_bar.clone(), y, mu, vec![1.0; 6], 1.0).unwrap();
        let zero = DVector::from_element(6, Complex64::new(0.0, 0.0));
        prop_assert!(kkt_residual(&p, &zero) < 1e-12);
    }
}
