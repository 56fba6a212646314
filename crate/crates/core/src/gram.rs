//! Gram (coherence) matrix of the normalized sensing matrix, its modal
//! decomposition, and norm diagnostics.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::frf::NormalizedFrf;
use crate::modal::ModalData;
use crate::{Error, Result};

/// Hermitian coherence matrix G = H_bar^H H_bar.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub values: DMatrix<Complex64>,
    pub omega: f64,
    pub sensor_rows: Vec<usize>,
}

/// Norm diagnostics of a Gram matrix (Frobenius, off-diagonal Frobenius,
/// and mutual coherence max |G_ij|, i != j).
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GramNorms {
    pub frobenius: f64,
    pub offdiag_frobenius: f64,
    pub max_offdiag: f64,
}

/// Exact Gram matrix of a normalized FRF (all rows).
pub fn gram(nf: &NormalizedFrf) -> GramMatrix {
    GramMatrix {
        values: nf.h_bar.adjoint() * &nf.h_bar,
        omega: nf.omega,
        sensor_rows: nf.rows.clone(),
    }
}

/// Gram matrix of a row sub-matrix of a normalized FRF. Column norms are
/// those of the full matrix (not recomputed for the subset), so the diagonal
/// is below one for partial measurements. `row_positions` index into
/// `nf.rows`.
pub fn gram_of_rows(nf: &NormalizedFrf, row_positions: &[usize]) -> Result<GramMatrix> {
    if row_positions.is_empty() {
        return Err(Error::InvalidParameter("empty row subset".into()));
    }
    let n = nf.h_bar.ncols();
    let mut values = DMatrix::zeros(n, n);
    for &p in row_positions {
        if p >= nf.h_bar.nrows() {
            return Err(Error::InvalidParameter(format!("row position {p} out of range")));
        }
        let row = nf.h_bar.row(p);
        for i in 0..n {
            let ci = row[i].conj();
            for j in 0..n {
                values[(i, j)] += ci * row[j];
            }
        }
    }
    Ok(GramMatrix {
        values,
        omega: nf.omega,
        sensor_rows: row_positions.iter().map(|&p| nf.rows[p]).collect(),
    })
}

/// Contribution of mode `p` to the full-measurement Gram matrix:
/// omega^4 * F [phi_p phi_p^T / (M_pp |d_p|^2)] F with
/// |d_p|^2 = (omega_p^2 - omega^2)^2 + (2 zeta_p omega_p omega)^2.
///
/// Defined only for the full measurement (col_norms over all N nodes), where
/// mass-orthonormality reduces the double mode sum to this rank-1 form.
pub fn gram_mode_contribution(
    modal: &ModalData,
    p: usize,
    omega: f64,
    col_norms: &[f64],
) -> Result<DMatrix<Complex64>> {
    let n = modal.natural_freqs.len();
    if p >= n {
        return Err(Error::InvalidParameter(format!("mode {p} out of range for {n} modes")));
    }
    if col_norms.len() != n {
        return Err(Error::Dimension(format!(
            "col_norms has length {}, full measurement requires {n}",
            col_norms.len()
        )));
    }
    let wp = modal.natural_freqs[p];
    let zp = modal.damping_ratios[p];
    let d2 = (wp * wp - omega * omega).powi(2) + (2.0 * zp * wp * omega).powi(2);
    let scale = omega.powi(4) / (modal.mass_diag[p] * d2);
    let phi = modal.mode_shapes.column(p);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(scale * phi[i] * phi[j] / (col_norms[i] * col_norms[j]), 0.0)
    }))
}

/// Sum of [`gram_mode_contribution`] over `mode_subset`.
pub fn gram_modal_approx(
    modal: &ModalData,
    mode_subset: &[usize],
    omega: f64,
    col_norms: &[f64],
) -> Result<DMatrix<Complex64>> {
    if mode_subset.is_empty() {
        return Err(Error::InvalidParameter("empty mode subset".into()));
    }
    let n = modal.natural_freqs.len();
    let mut sum = DMatrix::zeros(n, n);
    for &p in mode_subset {
        sum += gram_mode_contribution(modal, p, omega, col_norms)?;
    }
    Ok(sum)
}

/// Frobenius norm, off-diagonal Frobenius norm, and mutual coherence.
pub fn gram_norms(g: &GramMatrix) -> GramNorms {
    let mut total = 0.0;
    let mut offdiag = 0.0;
    let mut max_offdiag = 0.0f64;
    for i in 0..g.values.nrows() {
        for j in 0..g.values.ncols() {
            let sq = g.values[(i, j)].norm_sqr();
            total += sq;
            if i != j {
                offdiag += sq;
                max_offdiag = max_offdiag.max(sq.sqrt());
            }
        }
    }
    GramNorms {
        frobenius: total.sqrt(),
        offdiag_frobenius: offdiag.sqrt(),
        max_offdiag,
    }
}

/// Modes whose natural frequency lies within +-50% of `omega`, padded to at
/// least four modes by distance; ascending mode indices.
pub fn nearby_modes(modal: &ModalData, omega: f64) -> Vec<usize> {
    let n = modal.natural_freqs.len();
    let mut sel: Vec<usize> = (0..n)
        .filter(|&r| {
            let w = modal.natural_freqs[r];
            w >= 0.5 * omega && w <= 1.5 * omega
        })
        .collect();
    if sel.len() < 4.min(n) {
        let mut by_dist: Vec<usize> = (0..n).collect();
        by_dist.sort_by(|&a, &b| {
            (modal.natural_freqs[a] - omega)
                .abs()
                .total_cmp(&(modal.natural_freqs[b] - omega).abs())
        });
        sel = by_dist.into_iter().take(4.min(n)).collect();
        sel.sort_unstable();
    }
    sel
}
