//! Complex acceleration-over-force FRF synthesis and column normalization.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::modal::{MechanicalSystem, ModalData};
use crate::{Error, Result};

/// Complex FRF matrix at a single frequency, units (m/s^2)/N.
/// `rows` are sensor node indices, `cols` force node indices.
#[derive(Debug, Clone)]
pub struct FrfMatrix {
    pub omega: f64,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: DMatrix<Complex64>,
}

/// Column-normalized FRF: every column of `h_bar` has unit l2 norm and
/// `col_norms[n]` records the original norm (the diagonal of F^-1).
#[derive(Debug, Clone)]
pub struct NormalizedFrf {
    pub omega: f64,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub h_bar: DMatrix<Complex64>,
    pub col_norms: Vec<f64>,
}

impl FrfMatrix {
    /// Row sub-matrix keeping the given sensor node indices (which must all
    /// be present in `rows`), in the order given.
    pub fn select_rows(&self, nodes: &[usize]) -> Result<FrfMatrix> {
        let mut values = DMatrix::zeros(nodes.len(), self.values.ncols());
        for (a, &node) in nodes.iter().enumerate() {
            let pos = self
                .rows
                .iter()
                .position(|&r| r == node)
                .ok_or_else(|| Error::InvalidParameter(format!("node {node} not in rows")))?;
            values.set_row(a, &self.values.row(pos));
        }
        Ok(FrfMatrix {
            omega: self.omega,
            rows: nodes.to_vec(),
            cols: self.cols.clone(),
            values,
        })
    }
}

fn check_indices(idx: &[usize], n: usize, what: &str) -> Result<()> {
    if idx.is_empty() {
        return Err(Error::InvalidParameter(format!("empty {what} index list")));
    }
    let mut seen = vec![false; n];
    for &i in idx {
        if i >= n {
            return Err(Error::InvalidParameter(format!(
                "{what} index {i} out of range for {n} dof"
            )));
        }
        if seen[i] {
            return Err(Error::InvalidParameter(format!("duplicate {what} index {i}")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Modal-superposition FRF (acceleration over force):
/// h_mn = sum_r -omega^2 phi_mr phi_nr / (omega_r^2 - omega^2 + j 2 zeta_r omega_r omega).
pub fn frf_modal(
    modal: &ModalData,
    rows: &[usize],
    cols: &[usize],
    omega: f64,
    mode_subset: Option<&[usize]>,
) -> Result<FrfMatrix> {
    let n = modal.natural_freqs.len();
    check_indices(rows, n, "row")?;
    check_indices(cols, n, "col")?;
    if omega <= 0.0 {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    let all: Vec<usize>;
    let subset = match mode_subset {
        Some(s) => {
            if s.is_empty() {
                return Err(Error::InvalidParameter("empty mode subset".into()));
            }
            check_indices(s, n, "mode")?;
            s
        }
        None => {
            all = (0..n).collect();
            &all
        }
    };

    let mut values = DMatrix::zeros(rows.len(), cols.len());
    for &r in subset {
        let wr = modal.natural_freqs[r];
        let zr = modal.damping_ratios[r];
        let denom = Complex64::new(wr * wr - omega * omega, 2.0 * zr * wr * omega);
        let scale = Complex64::new(-omega * omega, 0.0) / denom;
        for (a, &m) in rows.iter().enumerate() {
            let pm = modal.mode_shapes[(m, r)];
            if pm == 0.0 {
                continue;
            }
            for (b, &nn) in cols.iter().enumerate() {
                values[(a, b)] += scale * (pm * modal.mode_shapes[(nn, r)]);
            }
        }
    }
    Ok(FrfMatrix { omega, rows: rows.to_vec(), cols: cols.to_vec(), values })
}

/// Exact dynamic-stiffness FRF: -omega^2 * (K - omega^2 M + j omega C)^-1,
/// row/column selected. Valid for non-proportional damping.
pub fn frf_direct(
    system: &MechanicalSystem,
    rows: &[usize],
    cols: &[usize],
    omega: f64,
) -> Result<FrfMatrix> {
    let n = system.n_dof();
    check_indices(rows, n, "row")?;
    check_indices(cols, n, "col")?;
    if omega <= 0.0 {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    let dynamic = DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(
            system.stiffness[(i, j)] - omega * omega * system.mass[(i, j)],
            omega * system.damping[(i, j)],
        )
    });
    let lu = nalgebra::linalg::LU::new(dynamic);
    let mut rhs = DMatrix::zeros(n, cols.len());
    for (b, &c) in cols.iter().enumerate() {
        rhs[(c, b)] = Complex64::new(1.0, 0.0);
    }
    let receptance = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    let scale = Complex64::new(-omega * omega, 0.0);
    let values = DMatrix::from_fn(rows.len(), cols.len(), |a, b| {
        scale * receptance[(rows[a], b)]
    });
    Ok(FrfMatrix { omega, rows: rows.to_vec(), cols: cols.to_vec(), values })
}

/// H_bar = H F with F = diag(1/||h_n||), recording the column norms.
pub fn normalize_columns(h: &FrfMatrix) -> Result<NormalizedFrf> {
    let norms: Vec<f64> = h.values.column_iter().map(|c| c.norm()).collect();
    let max_norm = norms.iter().cloned().fold(0.0f64, f64::max);
    let mut h_bar = h.values.clone();
    let mut col_norms = Vec::with_capacity(norms.len());
    for (j, &norm) in norms.iter().enumerate() {
        if norm <= 1e-300 * max_norm || norm == 0.0 {
            return Err(Error::DegenerateColumn { col: j });
        }
        let inv = Complex64::new(1.0 / norm, 0.0);
        h_bar.column_mut(j).scale_mut(inv.re);
        col_norms.push(norm);
    }
    Ok(NormalizedFrf {
        omega: h.omega,
        rows: h.rows.clone(),
        cols: h.cols.clone(),
        h_bar,
        col_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal::{build_chain, solve_modes};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chain50() -> (crate::modal::MechanicalSystem, ModalData) {
        let sys = build_chain(50, 2.0, 2e6, 1e-4, 1e-3).unwrap();
        let modal = solve_modes(&sys).unwrap();
        (sys, modal)
    }

    #[test]
    fn single_dof_direct_closed_form() {
        let (m, k, c) = (2.0, 2e6, 30.0);
        let sys = crate::modal::MechanicalSystem::new(
            DMatrix::from_element(1, 1, m),
            DMatrix::from_element(1, 1, k),
            DMatrix::from_element(1, 1, c),
        )
        .unwrap();
        let omega = 700.0;
        let h = frf_direct(&sys, &[0], &[0], omega).unwrap();
        let expect = Complex64::new(-omega * omega, 0.0)
            / Complex64::new(k - omega * omega * m, omega * c);
        assert_relative_eq!(h.values[(0, 0)].re, expect.re, max_relative = 1e-12);
        assert_relative_eq!(h.values[(0, 0)].im, expect.im, max_relative = 1e-12);
    }

    #[test]
    fn modal_matches_direct_at_random_frequencies() {
        let (sys, modal) = chain50();
        let all: Vec<usize> = (0..50).collect();
        let w10 = modal.natural_freqs[9];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let omega = rng.random_range(1.0..1.2 * w10);
            let hm = frf_modal(&modal, &all, &all, omega, None).unwrap();
            let hd = frf_direct(&sys, &all, &all, omega).unwrap();
            let err = (&hm.values - &hd.values).norm() / hd.values.norm();
            assert!(err < 1e-6, "paths disagree at omega {omega}: rel err {err:.3e}");
        }
    }

    #[test]
    fn reciprocity_both_paths() {
        let (sys, modal) = chain50();
        let all: Vec<usize> = (0..50).collect();
        let omega = 0.95 * modal.natural_freqs[4];
        for h in [
            frf_modal(&modal, &all, &all, omega, None).unwrap(),
            frf_direct(&sys, &all, &all, omega).unwrap(),
        ] {
            let asym = (&h.values - h.values.transpose()).norm() / h.values.norm();
            assert!(asym < 1e-10, "reciprocity violated: {asym:.3e}");
        }
    }

    #[test]
    fn low_frequency_frf_vanishes() {
        let (_, modal) = chain50();
        let h = frf_modal(&modal, &[0, 1], &[0, 1], 1e-6, None).unwrap();
        assert!(h.values.norm() < 1e-12);
    }

    #[test]
    fn mode_subset_sums_to_full() {
        let (_, modal) = chain50();
        let rows: Vec<usize> = (0..10).collect();
        let omega = 0.95 * modal.natural_freqs[4];
        let lo: Vec<usize> = (0..25).collect();
        let hi: Vec<usize> = (25..50).collect();
        let a = frf_modal(&modal, &rows, &rows, omega, Some(&lo)).unwrap();
        let b = frf_modal(&modal, &rows, &rows, omega, Some(&hi)).unwrap();
        let full = frf_modal(&modal, &rows, &rows, omega, None).unwrap();
        let err = (&a.values + &b.values - &full.values).norm() / full.values.norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn normalize_gives_unit_columns() {
        let (sys, modal) = chain50();
        let all: Vec<usize> = (0..50).collect();
        let h = frf_direct(&sys, &all, &all, 0.95 * modal.natural_freqs[4]).unwrap();
        let nf = normalize_columns(&h).unwrap();
        for j in 0..50 {
            assert_relative_eq!(nf.h_bar.column(j).norm(), 1.0, max_relative = 1e-12);
            assert!(nf.col_norms[j] > 0.0);
        }
    }

    #[test]
    fn normalize_is_idempotent_and_scale_invariant() {
        let (sys, modal) = chain50();
        let all: Vec<usize> = (0..50).collect();
        let h = frf_direct(&sys, &all, &all, 0.95 * modal.natural_freqs[4]).unwrap();
        let nf = normalize_columns(&h).unwrap();

        let again = normalize_columns(&FrfMatrix {
            omega: h.omega,
            rows: h.rows.clone(),
            cols: h.cols.clone(),
            values: nf.h_bar.clone(),
        })
        .unwrap();
        assert!((&again.h_bar - &nf.h_bar).norm() < 1e-12);
        for &n in &again.col_norms {
            assert_relative_eq!(n, 1.0, max_relative = 1e-12);
        }

        let scaled = FrfMatrix {
            omega: h.omega,
            rows: h.rows.clone(),
            cols: h.cols.clone(),
            values: &h.values * Complex64::new(5.0, 0.0),
        };
        let nf5 = normalize_columns(&scaled).unwrap();
        assert!((&nf5.h_bar - &nf.h_bar).norm() < 1e-12);
        for j in 0..50 {
            assert_relative_eq!(nf5.col_norms[j], 5.0 * nf.col_norms[j], max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_column_is_rejected() {
        let h = FrfMatrix {
            omega: 10.0,
            rows: vec![0, 1],
            cols: vec![0, 1],
            values: DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(1.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 1.0),
                    Complex64::new(0.0, 0.0),
                ],
            ),
        };
        match normalize_columns(&h) {
            Err(Error::DegenerateColumn { col: 1 }) => {}
            other => panic!("expected degenerate column 1, got {other:?}"),
        }
    }

    #[test]
    fn invalid_indices_are_rejected() {
        let (_, modal) = chain50();
        assert!(frf_modal(&modal, &[0, 0], &[1], 100.0, None).is_err());
        assert!(frf_modal(&modal, &[0], &[50], 100.0, None).is_err());
        assert!(frf_modal(&modal, &[0], &[1], 100.0, Some(&[])).is_err());
        assert!(frf_modal(&modal, &[0], &[1], -5.0, None).is_err());
    }
}
