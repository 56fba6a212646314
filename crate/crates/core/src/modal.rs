//! Discrete mechanical systems and modal analysis.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::{Error, Result};

/// An N-dof structure defined by mass, stiffness and damping matrices.
#[derive(Debug, Clone)]
pub struct MechanicalSystem {
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub damping: DMatrix<f64>,
}

/// Modal parameters of a [`MechanicalSystem`].
///
/// `mode_shapes` column r is the mass-normalized shape of mode r
/// (Phi^T M Phi = I); `mass_diag` keeps the diagonal of the mass matrix used
/// for normalization, needed by the modal Gram decomposition.
#[derive(Debug, Clone)]
pub struct ModalData {
    pub natural_freqs: Vec<f64>,
    pub damping_ratios: Vec<f64>,
    pub mode_shapes: DMatrix<f64>,
    pub mass_diag: Vec<f64>,
}

fn check_symmetric(m: &DMatrix<f64>, name: &str) -> Result<()> {
    let scale = 1.0 + m.amax();
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::InvalidParameter(format!(
                    "{name} matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

impl MechanicalSystem {
    /// Validates symmetry, positive-definiteness of M and K, and shapes.
    pub fn new(
        mass: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        damping: DMatrix<f64>,
    ) -> Result<Self> {
        let n = mass.nrows();
        if n == 0 {
            return Err(Error::InvalidParameter("empty system".into()));
        }
        for (m, name) in [(&mass, "mass"), (&stiffness, "stiffness"), (&damping, "damping")] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension(format!(
                    "{name} matrix is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            check_symmetric(m, name)?;
        }
        for (m, name) in [(&mass, "mass"), (&stiffness, "stiffness")] {
            if m.clone().cholesky().is_none() {
                return Err(Error::InvalidParameter(format!(
                    "{name} matrix is not positive-definite"
                )));
            }
        }
        Ok(Self { mass, stiffness, damping })
    }

    pub fn n_dof(&self) -> usize {
        self.mass.nrows()
    }
}

/// Fixed-fixed chain of `n` equal masses joined by `n + 1` equal springs and
/// dashpots, with proportional damping C = alpha*M + beta*K.
pub fn build_chain(
    n: usize,
    mass_each: f64,
    stiffness_each: f64,
    alpha: f64,
    beta: f64,
) -> Result<MechanicalSystem> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("chain needs n >= 2, got {n}")));
    }
    if mass_each <= 0.0 || stiffness_each <= 0.0 {
        return Err(Error::InvalidParameter(
            "mass_each and stiffness_each must be positive".into(),
        ));
    }
    if alpha < 0.0 || beta < 0.0 {
        return Err(Error::InvalidParameter("alpha and beta must be non-negative".into()));
    }
    let mass = DMatrix::from_diagonal_element(n, n, mass_each);
    let mut stiffness = DMatrix::zeros(n, n);
    for i in 0..n {
        stiffness[(i, i)] = 2.0 * stiffness_each;
        if i + 1 < n {
            stiffness[(i, i + 1)] = -stiffness_each;
            stiffness[(i + 1, i)] = -stiffness_each;
        }
    }
    let damping = alpha * &mass + beta * &stiffness;
    MechanicalSystem::new(mass, stiffness, damping)
}

fn gaussian_matrix(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng))
}

/// Randomized irregular system: M = (mean_mass/n) R^T R with R standard
/// Gaussian, K = Q Lambda Q^T with Lambda linearly spaced in
/// [lambda_min, lambda_max], and C resampled until every modal damping ratio
/// lands in [zeta_min, zeta_max] after a single scalar rescale that pins
/// max zeta = zeta_max.
///
/// C is drawn in modal coordinates: target ratios uniform inside the band
/// plus 10% relative symmetric off-diagonal coupling, then mapped back with
/// C = (M Phi) C_m (M Phi)^T, which keeps C symmetric and non-proportional.
#[allow(clippy::too_many_arguments)]
pub fn build_irregular(
    n: usize,
    seed: u64,
    lambda_min: f64,
    lambda_max: f64,
    zeta_min: f64,
    zeta_max: f64,
    max_retries: usize,
    mean_mass: f64,
) -> Result<MechanicalSystem> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2, got {n}")));
    }
    if !(0.0 < lambda_min && lambda_min < lambda_max) {
        return Err(Error::InvalidParameter("need 0 < lambda_min < lambda_max".into()));
    }
    if !(0.0 < zeta_min && zeta_min < zeta_max && zeta_max < 1.0) {
        return Err(Error::InvalidParameter("need 0 < zeta_min < zeta_max < 1".into()));
    }
    if mean_mass <= 0.0 {
        return Err(Error::InvalidParameter("mean_mass must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let r = gaussian_matrix(n, &mut rng);
    let mass = (mean_mass / n as f64) * r.transpose() * &r;

    let q = nalgebra::linalg::QR::new(gaussian_matrix(n, &mut rng)).q();
    let step = (lambda_max - lambda_min) / (n as f64 - 1.0);
    let lambda =
        DVector::from_fn(n, |i, _| lambda_min + step * i as f64);
    let mut stiffness = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    stiffness = (&stiffness + stiffness.transpose()) * 0.5;

    let undamped = MechanicalSystem::new(mass.clone(), stiffness.clone(), DMatrix::zeros(n, n))?;
    let modal = solve_modes(&undamped)?;
    let m_phi = &mass * &modal.mode_shapes;

    let zeta_band = Uniform::new(1.1 * zeta_min, 0.95 * zeta_max)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let coupling = 0.1;
    let mut achieved = (f64::NAN, f64::NAN);
    for _ in 0..max_retries.max(1) {
        let d: Vec<f64> = (0..n)
            .map(|r| 2.0 * zeta_band.sample(&mut rng) * modal.natural_freqs[r])
            .collect();
        let mut c_modal = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else if i < j {
                let e: f64 = StandardNormal.sample(&mut rng);
                coupling * (d[i] * d[j]).sqrt() * e
            } else {
                0.0
            }
        });
        c_modal = (&c_modal + c_modal.transpose())
            - DMatrix::from_diagonal(&DVector::from_vec(d.clone()));
        let mut damping = &m_phi * c_modal * m_phi.transpose();
        damping = (&damping + damping.transpose()) * 0.5;

        let zetas = modal_zetas(&modal, &damping);
        let z_max = zetas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if z_max <= 0.0 {
            achieved = (
                zetas.iter().cloned().fold(f64::INFINITY, f64::min),
                z_max,
            );
            continue;
        }
        damping *= zeta_max / z_max;
        let zetas = modal_zetas(&modal, &damping);
        let z_lo = zetas.iter().cloned().fold(f64::INFINITY, f64::min);
        let z_hi = zetas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        achieved = (z_lo, z_hi);
        if z_lo >= zeta_min && z_hi <= zeta_max {
            return MechanicalSystem::new(mass, stiffness, damping);
        }
    }
    Err(Error::ConstructionFailed {
        retries: max_retries,
        achieved_min: achieved.0,
        achieved_max: achieved.1,
    })
}

fn modal_zetas(modal: &ModalData, damping: &DMatrix<f64>) -> Vec<f64> {
    let c_modal = modal.mode_shapes.transpose() * damping * &modal.mode_shapes;
    (0..modal.natural_freqs.len())
        .map(|r| c_modal[(r, r)] / (2.0 * modal.natural_freqs[r]))
        .collect()
}

/// Solves K phi = omega^2 M phi via the Cholesky transform of M, returning
/// ascending mass-normalized modes. Damping ratios use the diagonal of
/// Phi^T C Phi (exact for proportional damping).
pub fn solve_modes(system: &MechanicalSystem) -> Result<ModalData> {
    let n = system.n_dof();
    let chol = system
        .mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Decomposition("mass matrix is not positive-definite".into()))?;
    let l = chol.l();
    let a = l
        .solve_lower_triangular(&system.stiffness)
        .ok_or_else(|| Error::Decomposition("singular Cholesky factor".into()))?;
    let a = l
        .solve_lower_triangular(&a.transpose())
        .ok_or_else(|| Error::Decomposition("singular Cholesky factor".into()))?;
    let a = (&a + a.transpose()) * 0.5;
    let eig = nalgebra::linalg::SymmetricEigen::new(a);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let lam_max = eig.eigenvalues.amax();
    let lt = l.transpose();
    let mut natural_freqs = Vec::with_capacity(n);
    let mut mode_shapes = DMatrix::zeros(n, n);
    for (r, &k) in order.iter().enumerate() {
        let lam = eig.eigenvalues[k];
        if lam <= lam_max * 1e-12 {
            return Err(Error::RigidBodyMode { mode: r });
        }
        natural_freqs.push(lam.sqrt());
        let phi = lt
            .solve_upper_triangular(&eig.eigenvectors.column(k).clone_owned())
            .ok_or_else(|| Error::Decomposition("singular Cholesky factor".into()))?;
        let pivot = phi.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        let sign = if phi.iter().find(|v| v.abs() == pivot).copied().unwrap_or(1.0) < 0.0 {
            -1.0
        } else {
            1.0
        };
        mode_shapes.set_column(r, &(phi * sign));
    }

    let c_modal = mode_shapes.transpose() * &system.damping * &mode_shapes;
    let damping_ratios = (0..n)
        .map(|r| c_modal[(r, r)] / (2.0 * natural_freqs[r]))
        .collect();

    Ok(ModalData {
        natural_freqs,
        damping_ratios,
        mode_shapes,
        mass_diag: system.mass.diagonal().iter().copied().collect(),
    })
}

/// Modal overlap factor 2*zeta_r*omega / (omega_{r+1} - omega_r) for the
/// 0-based mode index `r`. Repeated frequencies yield +infinity.
pub fn mof(modal: &ModalData, r: usize, omega: f64) -> Result<f64> {
    let n = modal.natural_freqs.len();
    if r + 1 >= n {
        return Err(Error::UndefinedMode { mode: r });
    }
    let gap = modal.natural_freqs[r + 1] - modal.natural_freqs[r];
    if gap == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * modal.damping_ratios[r] * omega / gap)
}

/// Closed-form spectrum of the uniform fixed-fixed chain,
/// omega_r = 2 sqrt(k/m) sin(r pi / (2(n+1))) with r = 1..n.
pub fn chain_spectrum(n: usize, mass_each: f64, stiffness_each: f64) -> Vec<f64> {
    let w0 = (stiffness_each / mass_each).sqrt();
    (1..=n)
        .map(|r| 2.0 * w0 * (r as f64 * std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin())
        .collect()
}
