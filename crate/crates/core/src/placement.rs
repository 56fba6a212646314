//! Sensor selection: greedy off-diagonal Gram minimization, exhaustive
//! oracle, and nodal/anti-nodal baselines.

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::exec;
use crate::frf::NormalizedFrf;
use crate::modal::ModalData;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionStep {
    pub index: usize,
    pub objective: f64,
}

/// Result of a selection run: node indices in selection order plus the
/// per-iteration objective history (empty for the mode-shape baseline,
/// which does not evaluate a Gram objective).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensorSet {
    pub selected: Vec<usize>,
    pub history: Vec<SelectionStep>,
    pub omega: Option<f64>,
    pub budget: usize,
}

/// Off-diagonal squared Frobenius increment of adding row `row` to the
/// accumulated Gram `g`.
fn offdiag_sq_with_row(
    g: &DMatrix<Complex64>,
    h_bar: &DMatrix<Complex64>,
    row: usize,
) -> f64 {
    let n = g.ncols();
    let r = h_bar.row(row);
    let mut sum = 0.0;
    for i in 0..n {
        let ci = r[i].conj();
        for j in 0..n {
            if i != j {
                sum += (g[(i, j)] + ci * r[j]).norm_sqr();
            }
        }
    }
    sum
}

/// Greedy selection (one sensor per iteration, minimizing the off-diagonal
/// Frobenius norm of the sub-row Gram built with full-matrix column norms).
/// Ties break to the smallest node index. Candidates within one iteration
/// are scored in parallel.
pub fn greedy_select(nf: &NormalizedFrf, budget: usize) -> Result<SensorSet> {
    let m_rows = nf.h_bar.nrows();
    if budget == 0 || budget > m_rows {
        return Err(Error::InvalidParameter(format!(
            "budget {budget} out of range 1..={m_rows}"
        )));
    }
    let n = nf.h_bar.ncols();
    let mut g: DMatrix<Complex64> = DMatrix::zeros(n, n);
    let mut remaining: Vec<usize> = (0..m_rows).collect();
    let mut selected = Vec::with_capacity(budget);
    let mut history = Vec::with_capacity(budget);

    for _ in 0..budget {
        let scores = exec::map_indexed(remaining.len(), |k| {
            offdiag_sq_with_row(&g, &nf.h_bar, remaining[k])
        });
        let mut best = 0;
        for k in 1..remaining.len() {
            if scores[k] < scores[best]
                || (scores[k] == scores[best] && nf.rows[remaining[k]] < nf.rows[remaining[best]])
            {
                best = k;
            }
        }
        let pos = remaining.remove(best);
        let r = nf.h_bar.row(pos);
        for i in 0..n {
            let ci = r[i].conj();
            for j in 0..n {
                g[(i, j)] += ci * r[j];
            }
        }
        selected.push(nf.rows[pos]);
        history.push(SelectionStep {
            index: nf.rows[pos],
            objective: scores[best].sqrt(),
        });
    }
    Ok(SensorSet { selected, history, omega: Some(nf.omega), budget })
}

/// Off-diagonal Frobenius norm of the Gram built from the given row
/// positions of a normalized FRF (full-matrix column norms).
pub fn subset_objective(nf: &NormalizedFrf, row_positions: &[usize]) -> Result<f64> {
    let g = crate::gram::gram_of_rows(nf, row_positions)?;
    Ok(crate::gram::gram_norms(&g).offdiag_frobenius)
}

fn binomial(n: usize, m: usize) -> f64 {
    let m = m.min(n - m);
    let mut c = 1.0f64;
    for i in 0..m {
        c *= (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Exhaustive oracle for the selection problem. Guarded at C(n, m) <= 1e6;
/// ties break to the lexicographically smallest index set (enumeration
/// order).
pub fn exhaustive_select(nf: &NormalizedFrf, budget: usize) -> Result<SensorSet> {
    let m_rows = nf.h_bar.nrows();
    if budget == 0 || budget > m_rows {
        return Err(Error::InvalidParameter(format!(
            "budget {budget} out of range 1..={m_rows}"
        )));
    }
    let combos = binomial(m_rows, budget);
    if combos > 1e6 {
        return Err(Error::CombinatorialGuard { combinations: combos, limit: 1e6 });
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for combo in (0..m_rows).combinations(budget) {
        let obj = subset_objective(nf, &combo)?;
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, combo));
        }
    }
    let (obj, positions) = best.expect("at least one combination");
    let selected: Vec<usize> = positions.iter().map(|&p| nf.rows[p]).collect();
    let history = vec![SelectionStep { index: *selected.last().unwrap(), objective: obj }];
    Ok(SensorSet { selected, history, omega: Some(nf.omega), budget })
}

/// Nodal indices of mode `p` (0-based): sign changes between adjacent chain
/// nodes, reporting the neighbor with smaller |phi|, plus boundary nodes
/// whose |phi| is below 10% of the mode-shape peak.
pub fn nodal_indices(modal: &ModalData, p: usize) -> Result<Vec<usize>> {
    let n = modal.natural_freqs.len();
    if p >= n {
        return Err(Error::InvalidParameter(format!("mode {p} out of range")));
    }
    let phi = modal.mode_shapes.column(p);
    let peak = phi.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let mut out = Vec::new();
    if phi[0].abs() < 0.1 * peak {
        out.push(0);
    }
    for i in 0..n - 1 {
        if phi[i] * phi[i + 1] < 0.0 {
            out.push(if phi[i].abs() <= phi[i + 1].abs() { i } else { i + 1 });
        }
    }
    if phi[n - 1].abs() < 0.1 * peak {
        out.push(n - 1);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn local_maxima_by_magnitude(modal: &ModalData, p: usize) -> Vec<usize> {
    let phi = modal.mode_shapes.column(p);
    let n = phi.len();
    let mut extrema: Vec<usize> = (0..n)
        .filter(|&i| {
            let v = phi[i].abs();
            (i == 0 || v >= phi[i - 1].abs()) && (i == n - 1 || v >= phi[i + 1].abs())
        })
        .collect();
    extrema.sort_by(|&a, &b| phi[b].abs().total_cmp(&phi[a].abs()).then(a.cmp(&b)));
    extrema
}

fn pick_spaced(candidates: &[usize], budget: usize, spacing: usize) -> Vec<usize> {
    let mut picked: Vec<usize> = Vec::with_capacity(budget);
    for &i in candidates {
        if picked.iter().all(|&s| s.abs_diff(i) >= spacing) {
            picked.push(i);
            if picked.len() == budget {
                break;
            }
        }
    }
    picked
}

/// Anti-nodal baseline: local maxima of |phi_p| in descending magnitude with
/// a minimum index spacing of floor(N / (2(p+1))). Errors when the budget
/// cannot be met under that spacing.
pub fn antinodal_select(modal: &ModalData, p: usize, budget: usize) -> Result<SensorSet> {
    let n = modal.natural_freqs.len();
    if p >= n {
        return Err(Error::InvalidParameter(format!("mode {p} out of range")));
    }
    if budget == 0 || budget > n {
        return Err(Error::InvalidParameter(format!("budget {budget} out of range 1..={n}")));
    }
    let spacing = (n / (2 * (p + 1))).max(1);
    let candidates = local_maxima_by_magnitude(modal, p);
    let picked = pick_spaced(&candidates, budget, spacing);
    if picked.len() < budget {
        return Err(Error::InsufficientExtrema { available: picked.len(), budget });
    }
    Ok(SensorSet { selected: picked, history: Vec::new(), omega: None, budget })
}

/// Relaxed anti-nodal baseline for experiment configurations that need more
/// sensors than the strict spacing admits: the spacing is halved until the
/// budget fits, any shortfall is filled by descending |phi_p| over the
/// remaining nodes.
pub fn antinodal_relaxed(modal: &ModalData, p: usize, budget: usize) -> Result<SensorSet> {
    match antinodal_select(modal, p, budget) {
        Ok(s) => return Ok(s),
        Err(Error::InsufficientExtrema { .. }) => {}
        Err(e) => return Err(e),
    }
    let n = modal.natural_freqs.len();
    let candidates = local_maxima_by_magnitude(modal, p);
    let mut spacing = (n / (2 * (p + 1))).max(1);
    let mut picked = Vec::new();
    while spacing > 1 {
        spacing /= 2;
        picked = pick_spaced(&candidates, budget, spacing);
        if picked.len() == budget {
            break;
        }
    }
    if picked.len() < budget {
        let phi = modal.mode_shapes.column(p);
        let mut rest: Vec<usize> = (0..n).filter(|i| !picked.contains(i)).collect();
        rest.sort_by(|&a, &b| phi[b].abs().total_cmp(&phi[a].abs()).then(a.cmp(&b)));
        picked.extend(rest.into_iter().take(budget - picked.len()));
    }
    Ok(SensorSet { selected: picked, history: Vec::new(), omega: None, budget })
}
