//! JSON and CSV serialization for every pipeline artifact.
//!
//! JSON schemas use row-major `data` arrays; complex entries are `[re, im]`
//! pairs. FRF CSV files carry one row per sensor with the sensor node index,
//! the frequency, and interleaved real/imag columns per force node, so an
//! externally measured matrix can enter the pipeline bit-exactly.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::experiments::ReconstructionMap;
use crate::frf::FrfMatrix;
use crate::lasso::LassoSolution;
use crate::modal::{MechanicalSystem, ModalData};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CMatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Parse(format!(
                "matrix data length {} does not match {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_fn(self.rows, self.cols, |i, j| self.data[i * self.cols + j]))
    }
}

impl CMatrixJson {
    pub fn from_matrix(m: &DMatrix<Complex64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Parse(format!(
                "matrix data length {} does not match {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            Complex64::new(re, im)
        }))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemJson {
    pub n_dof: usize,
    pub mass: MatrixJson,
    pub stiffness: MatrixJson,
    pub damping: MatrixJson,
}

impl SystemJson {
    pub fn from_system(s: &MechanicalSystem) -> Self {
        Self {
            n_dof: s.n_dof(),
            mass: MatrixJson::from_matrix(&s.mass),
            stiffness: MatrixJson::from_matrix(&s.stiffness),
            damping: MatrixJson::from_matrix(&s.damping),
        }
    }

    pub fn to_system(&self) -> Result<MechanicalSystem> {
        MechanicalSystem::new(
            self.mass.to_matrix()?,
            self.stiffness.to_matrix()?,
            self.damping.to_matrix()?,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModalJson {
    pub natural_freqs: Vec<f64>,
    pub damping_ratios: Vec<f64>,
    pub mode_shapes: MatrixJson,
    pub mass_diag: Vec<f64>,
}

impl ModalJson {
    pub fn from_modal(m: &ModalData) -> Self {
        Self {
            natural_freqs: m.natural_freqs.clone(),
            damping_ratios: m.damping_ratios.clone(),
            mode_shapes: MatrixJson::from_matrix(&m.mode_shapes),
            mass_diag: m.mass_diag.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrfJson {
    pub omega: f64,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: CMatrixJson,
}

impl FrfJson {
    pub fn from_frf(h: &FrfMatrix) -> Self {
        Self {
            omega: h.omega,
            rows: h.rows.clone(),
            cols: h.cols.clone(),
            values: CMatrixJson::from_matrix(&h.values),
        }
    }

    pub fn to_frf(&self) -> Result<FrfMatrix> {
        let values = self.values.to_matrix()?;
        if self.rows.len() != values.nrows() || self.cols.len() != values.ncols() {
            return Err(Error::Parse("FRF index lists do not match matrix shape".into()));
        }
        Ok(FrfMatrix {
            omega: self.omega,
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            values,
        })
    }
}

/// JSON report for a solved reconstruction, with magnitudes and phases
/// alongside the raw complex estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionJson {
    pub magnitude: Vec<f64>,
    pub phase: Vec<f64>,
    pub x_hat: Vec<[f64; 2]>,
    pub x_bar_hat: Vec<[f64; 2]>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolutionJson {
    pub fn from_solution(s: &LassoSolution) -> Self {
        Self {
            magnitude: s.x_hat.iter().map(|z| z.norm()).collect(),
            phase: s.x_hat.iter().map(|z| z.arg()).collect(),
            x_hat: s.x_hat.iter().map(|z| [z.re, z.im]).collect(),
            x_bar_hat: s.x_bar_hat.iter().map(|z| [z.re, z.im]).collect(),
            objective: s.objective,
            kkt_residual: s.kkt_residual,
            iterations: s.iterations,
            converged: s.converged,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapJson {
    pub omega: f64,
    pub sensor_set: Vec<usize>,
    pub snr_db: f64,
    pub seed: u64,
    pub n_nonconverged: usize,
    pub od_mae: f64,
    pub values: CMatrixJson,
}

impl MapJson {
    pub fn from_map(m: &ReconstructionMap) -> Self {
        Self {
            omega: m.omega,
            sensor_set: m.sensor_set.clone(),
            snr_db: m.snr_db,
            seed: m.seed,
            n_nonconverged: m.n_nonconverged,
            od_mae: crate::experiments::od_mae(m),
            values: CMatrixJson::from_matrix(&m.values),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_system(path: &Path, s: &MechanicalSystem) -> Result<()> {
    write_json(path, &SystemJson::from_system(s))
}

pub fn read_system(path: &Path) -> Result<MechanicalSystem> {
    read_json::<SystemJson>(path)?.to_system()
}

pub fn write_modal(path: &Path, m: &ModalData) -> Result<()> {
    write_json(path, &ModalJson::from_modal(m))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Writes an FRF matrix as CSV: header `sensor_node,omega_rad_s,
/// f<node>_re,f<node>_im,...`, one row per sensor.
pub fn write_frf_csv(path: &Path, h: &FrfMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["sensor_node".to_string(), "omega_rad_s".to_string()];
    for &c in &h.cols {
        header.push(format!("f{c}_re"));
        header.push(format!("f{c}_im"));
    }
    w.write_record(&header)?;
    for (a, &node) in h.rows.iter().enumerate() {
        let mut rec = vec![node.to_string(), format!("{}", h.omega)];
        for b in 0..h.cols.len() {
            rec.push(format!("{}", h.values[(a, b)].re));
            rec.push(format!("{}", h.values[(a, b)].im));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(s: &str, path: &Path, line: u64, col: usize) -> Result<T> {
    s.trim().parse().map_err(|_| {
        Error::Parse(format!(
            "{}: line {line}, field {col}: cannot parse {s:?}",
            path.display()
        ))
    })
}

pub fn read_frf_csv(path: &Path) -> Result<FrfMatrix> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < 4 || header.len() % 2 != 0 {
        return Err(Error::Parse(format!(
            "{}: expected sensor_node, omega_rad_s and re/im column pairs",
            path.display()
        )));
    }
    let n_cols = (header.len() - 2) / 2;
    let cols: Vec<usize> = (0..n_cols)
        .map(|b| {
            let name = &header[2 + 2 * b];
            name.strip_prefix('f')
                .and_then(|s| s.strip_suffix("_re"))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| {
                    Error::Parse(format!("{}: bad column header {name:?}", path.display()))
                })
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut omega = 0.0;
    let mut data: Vec<Complex64> = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::Parse(format!(
                "{}: line {line}: expected {} fields, got {}",
                path.display(),
                header.len(),
                record.len()
            )));
        }
        rows.push(parse_field::<usize>(&record[0], path, line, 0)?);
        omega = parse_field::<f64>(&record[1], path, line, 1)?;
        for b in 0..n_cols {
            let re = parse_field::<f64>(&record[2 + 2 * b], path, line, 2 + 2 * b)?;
            let im = parse_field::<f64>(&record[3 + 2 * b], path, line, 3 + 2 * b)?;
            data.push(Complex64::new(re, im));
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{}: no data rows", path.display())));
    }
    let values = DMatrix::from_fn(rows.len(), n_cols, |i, j| data[i * n_cols + j]);
    Ok(FrfMatrix { omega, rows, cols, values })
}

/// Reads an FRF matrix from JSON or CSV, chosen by file extension.
pub fn read_frf(path: &Path) -> Result<FrfMatrix> {
    if is_json(path) {
        read_json::<FrfJson>(path)?.to_frf()
    } else {
        read_frf_csv(path)
    }
}

pub fn write_frf(path: &Path, h: &FrfMatrix) -> Result<()> {
    if is_json(path) {
        write_json(path, &FrfJson::from_frf(h))
    } else {
        write_frf_csv(path, h)
    }
}

/// Complex vector CSV: header `re,im`, one entry per line.
pub fn write_cvector_csv(path: &Path, v: &DVector<Complex64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["re", "im"])?;
    for z in v.iter() {
        w.write_record([format!("{}", z.re), format!("{}", z.im)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cvector_csv(path: &Path) -> Result<DVector<Complex64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::Parse(format!(
                "{}: line {line}: expected 2 fields, got {}",
                path.display(),
                record.len()
            )));
        }
        out.push(Complex64::new(
            parse_field(&record[0], path, line, 0)?,
            parse_field(&record[1], path, line, 1)?,
        ));
    }
    if out.is_empty() {
        return Err(Error::Parse(format!("{}: no data rows", path.display())));
    }
    Ok(DVector::from_vec(out))
}

pub fn read_cvector(path: &Path) -> Result<DVector<Complex64>> {
    if is_json(path) {
        let data: Vec<[f64; 2]> = read_json(path)?;
        if data.is_empty() {
            return Err(Error::Parse(format!("{}: empty vector", path.display())));
        }
        Ok(DVector::from_iterator(
            data.len(),
            data.iter().map(|&[re, im]| Complex64::new(re, im)),
        ))
    } else {
        read_cvector_csv(path)
    }
}

pub fn write_cvector(path: &Path, v: &DVector<Complex64>) -> Result<()> {
    if is_json(path) {
        let data: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        write_json(path, &data)
    } else {
        write_cvector_csv(path, v)
    }
}

/// Headerless CSV grid of element magnitudes (Gram matrices, reconstruction
/// maps).
pub fn write_magnitude_csv(path: &Path, m: &DMatrix<Complex64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..m.nrows() {
        let rec: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)].norm())).collect();
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Sweep series CSV: one row per (frequency, configuration) with the Gram
/// norms, OD-MAE, and the selected sensors joined by ';'.
pub fn write_sweep_csv(path: &Path, report: &crate::experiments::SweepReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "freq_hz",
        "config",
        "frobenius",
        "offdiag_frobenius",
        "od_mae",
        "n_nonconverged",
        "selected",
    ])?;
    for (k, &f) in report.frequencies_hz.iter().enumerate() {
        for (name, series) in [
            ("full", &report.full),
            ("optimal", &report.optimal),
            ("antinodal", &report.antinodal),
        ] {
            let p = &series[k];
            let selected: Vec<String> = p.selected.iter().map(|s| s.to_string()).collect();
            w.write_record([
                format!("{f}"),
                name.to_string(),
                format!("{}", p.frobenius),
                format!("{}", p.offdiag_frobenius),
                format!("{}", p.od_mae),
                format!("{}", p.n_nonconverged),
                selected.join(";"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
