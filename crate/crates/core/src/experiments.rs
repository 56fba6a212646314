//! End-to-end simulation protocol: noise injection, reconstruction maps,
//! OD-MAE, frequency sweeps, and file-based reconstruction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::frf::{frf_direct, normalize_columns, FrfMatrix};
use crate::lasso::{solve, LassoProblem, LassoSolution, SolveOptions};
use crate::modal::{solve_modes, MechanicalSystem};
use crate::placement::{antinodal_relaxed, greedy_select};
use crate::{exec, gram, Error, Result};

/// Derives an independent per-task seed from a root seed (splitmix64 mix),
/// so parallel tasks are reproducible regardless of scheduling order.
pub fn derive_seed(root: u64, task: u64) -> u64 {
    let mut z = root ^ task.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Adds circularly-symmetric complex Gaussian noise, rescaled so the
/// realized norm ratio gives exactly the requested SNR:
/// ||n|| = ||y|| * 10^(-snr_db/20). `snr_db = +inf` returns y unchanged.
pub fn add_noise(y: &DVector<Complex64>, snr_db: f64, seed: u64) -> Result<DVector<Complex64>> {
    let y_norm = y.norm();
    if y_norm == 0.0 {
        return Err(Error::InvalidParameter("zero measurement vector".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok(y.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidParameter(format!("invalid SNR {snr_db}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DVector::from_fn(y.len(), |_, _| {
        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    let target = y_norm * 10f64.powf(-snr_db / 20.0);
    let scale = target / raw.norm();
    Ok(y + raw * Complex64::new(scale, 0.0))
}

/// Stacked force-estimate map: row i is the de-normalized estimate for a
/// unit force at node i.
#[derive(Debug, Clone)]
pub struct ReconstructionMap {
    pub values: DMatrix<Complex64>,
    pub omega: f64,
    pub sensor_set: Vec<usize>,
    pub snr_db: f64,
    pub seed: u64,
    pub n_nonconverged: usize,
}

/// Off-diagonal mean absolute estimate, (1/(N(N-1))) sum_{i!=j} |x_ij|.
pub fn od_mae(map: &ReconstructionMap) -> f64 {
    let n = map.values.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += map.values[(i, j)].norm();
            }
        }
    }
    sum / (n * (n - 1)) as f64
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReconOptions {
    pub snr_db: f64,
    pub mu_fraction: f64,
    pub seed: u64,
    pub solve: SolveOptions,
}

impl Default for ReconOptions {
    fn default() -> Self {
        Self { snr_db: 20.0, mu_fraction: 0.1, seed: 0, solve: SolveOptions::default() }
    }
}

/// Simulates a unit force at every node in turn through the measurement FRF
/// `h_meas` (rows = sensors, cols = all nodes), adds noise (redrawn per
/// force index), and reconstructs each force vector through `h_model`
/// re-normalized over the selected rows. Rows run in parallel.
pub fn reconstruction_map_with_model(
    h_meas: &FrfMatrix,
    h_model: &FrfMatrix,
    opts: &ReconOptions,
) -> Result<ReconstructionMap> {
    if h_meas.rows.is_empty() {
        return Err(Error::InvalidParameter("empty sensor set".into()));
    }
    if h_meas.values.shape() != h_model.values.shape() {
        return Err(Error::Dimension("measurement/model FRF shapes differ".into()));
    }
    let n = h_meas.values.ncols();
    let nf = normalize_columns(h_model)?;
    let rows: Vec<Result<(DVector<Complex64>, bool)>> = exec::map_indexed(n, |i| {
        let y = h_meas.values.column(i).clone_owned();
        let noisy = add_noise(&y, opts.snr_db, derive_seed(opts.seed, i as u64))
            .map_err(|e| Error::RowSolve { index: i, source: Box::new(e) })?;
        let problem = LassoProblem::from_measurement(&nf, &noisy, opts.mu_fraction)
            .map_err(|e| Error::RowSolve { index: i, source: Box::new(e) })?;
        let sol = solve(&problem, &opts.solve)
            .map_err(|e| Error::RowSolve { index: i, source: Box::new(e) })?;
        Ok((sol.x_hat, sol.converged))
    });
    let mut values = DMatrix::zeros(n, n);
    let mut n_nonconverged = 0;
    for (i, row) in rows.into_iter().enumerate() {
        let (x_hat, converged) = row?;
        if !converged {
            n_nonconverged += 1;
        }
        values.set_row(i, &x_hat.transpose());
    }
    Ok(ReconstructionMap {
        values,
        omega: h_meas.omega,
        sensor_set: h_meas.rows.clone(),
        snr_db: opts.snr_db,
        seed: opts.seed,
        n_nonconverged,
    })
}

/// [`reconstruction_map_with_model`] with the same FRF used for simulation
/// and inversion (the paper's protocol).
pub fn reconstruction_map(h_meas: &FrfMatrix, opts: &ReconOptions) -> Result<ReconstructionMap> {
    reconstruction_map_with_model(h_meas, h_meas, opts)
}

/// One sensor configuration evaluated at one sweep frequency.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub frobenius: f64,
    pub offdiag_frobenius: f64,
    pub od_mae: f64,
    pub selected: Vec<usize>,
    pub n_nonconverged: usize,
}

/// Per-frequency comparison of the three sensor configurations. Gram norms
/// are taken on the Gram of the re-normalized reduced FRF (unit diagonal),
/// so values are comparable across configurations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub frequencies_hz: Vec<f64>,
    pub budget: usize,
    pub full: Vec<SweepPoint>,
    pub optimal: Vec<SweepPoint>,
    pub antinodal: Vec<SweepPoint>,
}

fn sweep_point(
    h_full: &FrfMatrix,
    nodes: &[usize],
    opts: &ReconOptions,
) -> Result<SweepPoint> {
    let h_sub = h_full.select_rows(nodes)?;
    let norms = gram::gram_norms(&gram::gram(&normalize_columns(&h_sub)?));
    let map = reconstruction_map(&h_sub, opts)?;
    Ok(SweepPoint {
        frobenius: norms.frobenius,
        offdiag_frobenius: norms.offdiag_frobenius,
        od_mae: od_mae(&map),
        selected: nodes.to_vec(),
        n_nonconverged: map.n_nonconverged,
    })
}

/// Runs the placement-plus-reconstruction comparison at every grid frequency
/// (Hz): greedy selection, anti-nodal baseline on the nearest mode, and full
/// measurement. Grid points run in parallel.
pub fn frequency_sweep(
    system: &MechanicalSystem,
    freq_grid_hz: &[f64],
    budget: usize,
    opts: &ReconOptions,
) -> Result<SweepReport> {
    if freq_grid_hz.is_empty() || freq_grid_hz.iter().any(|&f| f <= 0.0) {
        return Err(Error::InvalidParameter("frequency grid must be nonempty, positive".into()));
    }
    let modal = solve_modes(system)?;
    let n = system.n_dof();
    let all: Vec<usize> = (0..n).collect();
    let points: Vec<Result<(SweepPoint, SweepPoint, SweepPoint)>> =
        exec::map_indexed(freq_grid_hz.len(), |k| {
            let omega = 2.0 * std::f64::consts::PI * freq_grid_hz[k];
            let h_full = frf_direct(system, &all, &all, omega)?;
            let nf = normalize_columns(&h_full)?;
            let greedy = greedy_select(&nf, budget)?;
            let nearest = (0..n)
                .min_by(|&a, &b| {
                    (modal.natural_freqs[a] - omega)
                        .abs()
                        .total_cmp(&(modal.natural_freqs[b] - omega).abs())
                })
                .unwrap();
            let anti = antinodal_relaxed(&modal, nearest, budget)?;
            let seed_at = |cfg: u64| ReconOptions {
                seed: derive_seed(opts.seed, 3 * k as u64 + cfg),
                ..*opts
            };
            Ok((
                sweep_point(&h_full, &all, &seed_at(0))?,
                sweep_point(&h_full, &greedy.selected, &seed_at(1))?,
                sweep_point(&h_full, &anti.selected, &seed_at(2))?,
            ))
        });
    let mut report = SweepReport {
        frequencies_hz: freq_grid_hz.to_vec(),
        budget,
        full: Vec::with_capacity(freq_grid_hz.len()),
        optimal: Vec::with_capacity(freq_grid_hz.len()),
        antinodal: Vec::with_capacity(freq_grid_hz.len()),
    };
    for p in points {
        let (f, o, a) = p?;
        report.full.push(f);
        report.optimal.push(o);
        report.antinodal.push(a);
    }
    Ok(report)
}

/// Loads an FRF matrix and a measurement vector from files (JSON or CSV by
/// extension), optionally keeps a row subset (positions into the file's
/// rows), and runs normalize -> solve -> de-normalize.
pub fn reconstruct_from_file(
    h_path: &std::path::Path,
    y_path: &std::path::Path,
    sensor_subset: Option<&[usize]>,
    mu_fraction: f64,
    options: &SolveOptions,
) -> Result<LassoSolution> {
    let h = crate::io::read_frf(h_path)?;
    let y = crate::io::read_cvector(y_path)?;
    reconstruct_in_memory(&h, &y, sensor_subset, mu_fraction, options)
}

/// In-memory twin of [`reconstruct_from_file`], used to verify file
/// round-trips bit-exactly.
pub fn reconstruct_in_memory(
    h: &FrfMatrix,
    y: &DVector<Complex64>,
    sensor_subset: Option<&[usize]>,
    mu_fraction: f64,
    options: &SolveOptions,
) -> Result<LassoSolution> {
    let (h, y) = match sensor_subset {
        Some(positions) => {
            let nodes: Vec<usize> = positions
                .iter()
                .map(|&p| {
                    h.rows.get(p).copied().ok_or_else(|| {
                        Error::InvalidParameter(format!("sensor position {p} out of range"))
                    })
                })
                .collect::<Result<_>>()?;
            let sub = h.select_rows(&nodes)?;
            let y_sub = DVector::from_fn(positions.len(), |a, _| y[positions[a]]);
            (sub, y_sub)
        }
        None => (h.clone(), y.clone()),
    };
    if y.len() != h.values.nrows() {
        return Err(Error::Dimension(format!(
            "y has {} entries, H has {} rows",
            y.len(),
            h.values.nrows()
        )));
    }
    let nf = normalize_columns(&h)?;
    let problem = LassoProblem::from_measurement(&nf, &y, mu_fraction)?;
    solve(&problem, options)
}
