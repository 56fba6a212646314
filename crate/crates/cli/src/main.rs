//! Command-line front end for the frfsense pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use frfsense::experiments::{
    add_noise, frequency_sweep, reconstruction_map, reconstruct_from_file,
    reconstruct_in_memory, ReconOptions,
};
use frfsense::frf::{frf_direct, normalize_columns, FrfMatrix};
use frfsense::gram::{gram_norms, gram_of_rows, nearby_modes};
use frfsense::io::{
    read_frf, read_json, read_system, write_frf, write_json, write_magnitude_csv, write_modal,
    write_sweep_csv, write_system, MapJson, SolutionJson,
};
use frfsense::lasso::SolveOptions;
use frfsense::modal::{build_chain, build_irregular, solve_modes, MechanicalSystem};
use frfsense::placement::{antinodal_relaxed, exhaustive_select, greedy_select, subset_objective};
use frfsense::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "frfsense", version, about = "Force reconstruction sensor placement toolkit")]
struct Cli {
    /// Exit with status 0 even if some solves did not reach the KKT tolerance
    #[arg(long, global = true)]
    allow_nonconverged: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a chain (mass-spring) system and write it to JSON
    SimulateChain(SimulateChain),
    /// Build a randomized irregular system and write it to JSON
    SimulateIrregular(SimulateIrregular),
    /// Select sensor rows that minimize the off-diagonal Gram energy
    Place(Place),
    /// Simulate a point force, add noise, and reconstruct it
    Reconstruct(Reconstruct),
    /// Compare sensor configurations over a frequency grid
    Sweep(Sweep),
    /// Reconstruct a force vector from FRF and measurement files
    ReconstructFromFile(ReconstructFromFile),
}

#[derive(Args)]
struct SimulateChain {
    /// Number of degrees of freedom
    #[arg(long)]
    n: usize,
    /// Mass per node [kg]
    #[arg(long, default_value_t = 2.0)]
    mass: f64,
    /// Spring stiffness [N/m]
    #[arg(long, default_value_t = 2e6)]
    stiffness: f64,
    /// Mass-proportional damping coefficient
    #[arg(long, default_value_t = 1e-4)]
    alpha: f64,
    /// Stiffness-proportional damping coefficient
    #[arg(long, default_value_t = 1e-3)]
    beta: f64,
    #[command(flatten)]
    out: SimOutputs,
}

#[derive(Args)]
struct SimulateIrregular {
    /// Number of degrees of freedom
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Smallest stiffness eigenvalue scale
    #[arg(long, default_value_t = 1e5)]
    lambda_min: f64,
    /// Largest stiffness eigenvalue scale
    #[arg(long, default_value_t = 1e6)]
    lambda_max: f64,
    #[arg(long, default_value_t = 0.01)]
    zeta_min: f64,
    #[arg(long, default_value_t = 0.1)]
    zeta_max: f64,
    /// Resampling attempts before giving up on the damping band
    #[arg(long, default_value_t = 50)]
    retries: usize,
    /// Total mass scale [kg]
    #[arg(long, default_value_t = 2.5)]
    mean_mass: f64,
    #[command(flatten)]
    out: SimOutputs,
}

#[derive(Args)]
struct SimOutputs {
    /// Output path for the system matrices (JSON)
    #[arg(long)]
    system: PathBuf,
    /// Optional output path for the modal data (JSON)
    #[arg(long)]
    modal: Option<PathBuf>,
    /// Optional output path for the full FRF matrix (.json or .csv)
    #[arg(long, requires = "omega")]
    frf: Option<PathBuf>,
    /// Excitation frequency [rad/s] for --frf
    #[arg(long)]
    omega: Option<f64>,
}

#[derive(Copy, Clone, ValueEnum)]
enum PlaceMethod {
    Greedy,
    Exhaustive,
    Antinodal,
}

#[derive(Args)]
struct Place {
    /// System matrices JSON (mutually exclusive with --frf)
    #[arg(long, conflicts_with = "frf", required_unless_present = "frf")]
    system: Option<PathBuf>,
    /// Excitation frequency [rad/s]; required with --system
    #[arg(long, required_unless_present = "frf")]
    omega: Option<f64>,
    /// Precomputed FRF matrix (.json or .csv)
    #[arg(long)]
    frf: Option<PathBuf>,
    /// Number of sensors to select
    #[arg(long)]
    budget: usize,
    #[arg(long, value_enum, default_value_t = PlaceMethod::Greedy)]
    method: PlaceMethod,
    /// Mode index (0-based) for the antinodal method; nearest mode if omitted
    #[arg(long)]
    mode: Option<usize>,
    /// Output path for the selection report (JSON)
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV of the selected-row Gram magnitudes
    #[arg(long)]
    gram_csv: Option<PathBuf>,
}

#[derive(Args)]
struct Reconstruct {
    /// System matrices JSON
    #[arg(long)]
    system: PathBuf,
    /// Excitation frequency [rad/s]
    #[arg(long)]
    omega: f64,
    /// Node (0-based) carrying the simulated unit force; omit for --map-out
    #[arg(long, required_unless_present = "map_out")]
    force_node: Option<usize>,
    /// Explicit sensor nodes (comma separated); greedy selection if omitted
    #[arg(long, value_delimiter = ',', conflicts_with = "budget")]
    sensors: Option<Vec<usize>>,
    /// Greedy selection budget; all nodes if neither this nor --sensors given
    #[arg(long)]
    budget: Option<usize>,
    /// Signal-to-noise ratio [dB]; "inf" for noiseless
    #[arg(long, default_value_t = 20.0)]
    snr_db: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Regularization as a fraction of the zero-solution threshold
    #[arg(long, default_value_t = 0.1)]
    mu_fraction: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    /// Output path for the solution (JSON)
    #[arg(long, required_unless_present = "map_out")]
    out: Option<PathBuf>,
    /// Optional full reconstruction map output (JSON)
    #[arg(long)]
    map_out: Option<PathBuf>,
    /// Optional headerless CSV of map magnitudes (requires --map-out)
    #[arg(long, requires = "map_out")]
    map_csv: Option<PathBuf>,
}

#[derive(Args)]
struct Sweep {
    /// Sweep configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output path for the sweep report (JSON)
    #[arg(long)]
    out_json: PathBuf,
    /// Output path for the per-point series (CSV)
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructFromFile {
    /// FRF matrix file (.json or .csv)
    #[arg(long)]
    frf: PathBuf,
    /// Measurement vector file (.json or .csv)
    #[arg(long)]
    y: PathBuf,
    /// Row positions into the FRF file to keep (comma separated)
    #[arg(long, value_delimiter = ',')]
    sensors: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.1)]
    mu_fraction: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    /// Output path for the solution (JSON)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct PlacementJson {
    method: String,
    omega: f64,
    budget: usize,
    selected: Vec<usize>,
    objective: f64,
    history: Vec<frfsense::placement::SelectionStep>,
    frobenius: f64,
    offdiag_frobenius: f64,
    max_offdiag: f64,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum SystemConfig {
    Chain { n: usize, mass: f64, stiffness: f64, alpha: f64, beta: f64 },
    Irregular {
        n: usize,
        seed: u64,
        lambda_min: f64,
        lambda_max: f64,
        zeta_min: f64,
        zeta_max: f64,
        retries: usize,
        mean_mass: f64,
    },
    File { path: PathBuf },
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum FrequencyConfig {
    /// Explicit list of grid frequencies [Hz]
    List(Vec<f64>),
    /// Linear grid over [start_hz, end_hz]
    Grid { start_hz: f64, end_hz: f64, points: usize },
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    50_000
}

#[derive(Deserialize)]
struct SweepConfig {
    system: SystemConfig,
    frequencies: FrequencyConfig,
    budget: usize,
    snr_db: f64,
    mu_fraction: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default = "default_max_iter")]
    max_iter: usize,
}

impl SystemConfig {
    fn build(&self) -> Result<MechanicalSystem> {
        match self {
            Self::Chain { n, mass, stiffness, alpha, beta } => {
                build_chain(*n, *mass, *stiffness, *alpha, *beta)
            }
            Self::Irregular {
                n,
                seed,
                lambda_min,
                lambda_max,
                zeta_min,
                zeta_max,
                retries,
                mean_mass,
            } => build_irregular(
                *n, *seed, *lambda_min, *lambda_max, *zeta_min, *zeta_max, *retries, *mean_mass,
            ),
            Self::File { path } => read_system(path),
        }
    }
}

impl FrequencyConfig {
    fn grid(&self) -> Result<Vec<f64>> {
        match self {
            Self::List(v) => Ok(v.clone()),
            Self::Grid { start_hz, end_hz, points } => {
                if *points < 2 || *end_hz <= *start_hz {
                    return Err(Error::InvalidParameter(
                        "grid needs points >= 2 and end_hz > start_hz".into(),
                    ));
                }
                let step = (end_hz - start_hz) / (*points as f64 - 1.0);
                Ok((0..*points).map(|k| start_hz + step * k as f64).collect())
            }
        }
    }
}

fn full_frf(system: &MechanicalSystem, omega: f64) -> Result<FrfMatrix> {
    let all: Vec<usize> = (0..system.n_dof()).collect();
    frf_direct(system, &all, &all, omega)
}

fn write_sim_outputs(system: &MechanicalSystem, out: &SimOutputs) -> Result<()> {
    write_system(&out.system, system)?;
    if out.modal.is_some() || out.frf.is_some() {
        let modal = solve_modes(system)?;
        if let Some(path) = &out.modal {
            write_modal(path, &modal)?;
        }
        if let Some(path) = &out.frf {
            let omega = out.omega.expect("clap enforces --omega with --frf");
            write_frf(path, &full_frf(system, omega)?)?;
        }
    }
    Ok(())
}

fn run_place(cmd: &Place) -> Result<()> {
    let h = match (&cmd.frf, &cmd.system) {
        (Some(path), _) => read_frf(path)?,
        (None, Some(path)) => {
            let system = read_system(path)?;
            full_frf(&system, cmd.omega.expect("clap enforces --omega with --system"))?
        }
        (None, None) => unreachable!("clap enforces --system or --frf"),
    };
    let nf = normalize_columns(&h)?;
    let (method, set) = match cmd.method {
        PlaceMethod::Greedy => ("greedy", greedy_select(&nf, cmd.budget)?),
        PlaceMethod::Exhaustive => ("exhaustive", exhaustive_select(&nf, cmd.budget)?),
        PlaceMethod::Antinodal => {
            let system = match &cmd.system {
                Some(path) => read_system(path)?,
                None => {
                    return Err(Error::InvalidParameter(
                        "antinodal placement needs --system (mode shapes)".into(),
                    ))
                }
            };
            let modal = solve_modes(&system)?;
            let mode = cmd.mode.unwrap_or_else(|| nearby_modes(&modal, h.omega)[0]);
            ("antinodal", antinodal_relaxed(&modal, mode, cmd.budget)?)
        }
    };
    // selected node indices double as row positions: the FRF covers all nodes
    let positions: Vec<usize> = set
        .selected
        .iter()
        .map(|&node| {
            h.rows.iter().position(|&r| r == node).ok_or_else(|| {
                Error::InvalidParameter(format!("selected node {node} not among FRF rows"))
            })
        })
        .collect::<Result<_>>()?;
    let objective = subset_objective(&nf, &positions)?;
    let g = gram_of_rows(&nf, &positions)?;
    let norms = gram_norms(&g);
    write_json(
        &cmd.out,
        &PlacementJson {
            method: method.to_string(),
            omega: h.omega,
            budget: cmd.budget,
            selected: set.selected,
            objective,
            history: set.history,
            frobenius: norms.frobenius,
            offdiag_frobenius: norms.offdiag_frobenius,
            max_offdiag: norms.max_offdiag,
        },
    )?;
    if let Some(path) = &cmd.gram_csv {
        write_magnitude_csv(path, &g.values)?;
    }
    Ok(())
}

/// Returns the number of non-converged solves.
fn run_reconstruct(cmd: &Reconstruct) -> Result<usize> {
    let system = read_system(&cmd.system)?;
    let h_full = full_frf(&system, cmd.omega)?;
    let h_sub = match (&cmd.sensors, cmd.budget) {
        (Some(nodes), _) => h_full.select_rows(nodes)?,
        (None, Some(budget)) => {
            let nf = normalize_columns(&h_full)?;
            h_full.select_rows(&greedy_select(&nf, budget)?.selected)?
        }
        (None, None) => h_full.clone(),
    };
    let solve_opts = SolveOptions { tol: cmd.tol, max_iter: cmd.max_iter };
    let mut nonconverged = 0;
    if let Some(k) = cmd.force_node {
        if k >= h_sub.values.ncols() {
            return Err(Error::InvalidParameter(format!("force node {k} out of range")));
        }
        let y = h_sub.values.column(k).clone_owned();
        let noisy = add_noise(&y, cmd.snr_db, cmd.seed)?;
        let sol = reconstruct_in_memory(&h_sub, &noisy, None, cmd.mu_fraction, &solve_opts)?;
        if !sol.converged {
            nonconverged += 1;
        }
        if let Some(path) = &cmd.out {
            write_json(path, &SolutionJson::from_solution(&sol))?;
        }
    }
    if let Some(path) = &cmd.map_out {
        let opts = ReconOptions {
            snr_db: cmd.snr_db,
            mu_fraction: cmd.mu_fraction,
            seed: cmd.seed,
            solve: solve_opts,
        };
        let map = reconstruction_map(&h_sub, &opts)?;
        nonconverged += map.n_nonconverged;
        write_json(path, &MapJson::from_map(&map))?;
        if let Some(csv_path) = &cmd.map_csv {
            write_magnitude_csv(csv_path, &map.values)?;
        }
    }
    Ok(nonconverged)
}

fn run_sweep(cmd: &Sweep) -> Result<usize> {
    let config: SweepConfig = read_json(&cmd.config)?;
    let system = config.system.build()?;
    let grid = config.frequencies.grid()?;
    let opts = ReconOptions {
        snr_db: config.snr_db,
        mu_fraction: config.mu_fraction,
        seed: config.seed,
        solve: SolveOptions { tol: config.tol, max_iter: config.max_iter },
    };
    let report = frequency_sweep(&system, &grid, config.budget, &opts)?;
    let nonconverged = report
        .full
        .iter()
        .chain(&report.optimal)
        .chain(&report.antinodal)
        .map(|p| p.n_nonconverged)
        .sum();
    write_json(&cmd.out_json, &report)?;
    if let Some(path) = &cmd.out_csv {
        write_sweep_csv(path, &report)?;
    }
    Ok(nonconverged)
}

fn run(cli: &Cli) -> Result<usize> {
    match &cli.command {
        Command::SimulateChain(cmd) => {
            let system = build_chain(cmd.n, cmd.mass, cmd.stiffness, cmd.alpha, cmd.beta)?;
            write_sim_outputs(&system, &cmd.out)?;
            Ok(0)
        }
        Command::SimulateIrregular(cmd) => {
            let system = build_irregular(
                cmd.n,
                cmd.seed,
                cmd.lambda_min,
                cmd.lambda_max,
                cmd.zeta_min,
                cmd.zeta_max,
                cmd.retries,
                cmd.mean_mass,
            )?;
            write_sim_outputs(&system, &cmd.out)?;
            Ok(0)
        }
        Command::Place(cmd) => {
            run_place(cmd)?;
            Ok(0)
        }
        Command::Reconstruct(cmd) => run_reconstruct(cmd),
        Command::Sweep(cmd) => run_sweep(cmd),
        Command::ReconstructFromFile(cmd) => {
            let sol = reconstruct_from_file(
                &cmd.frf,
                &cmd.y,
                cmd.sensors.as_deref(),
                cmd.mu_fraction,
                &SolveOptions { tol: cmd.tol, max_iter: cmd.max_iter },
            )?;
            write_json(&cmd.out, &SolutionJson::from_solution(&sol))?;
            Ok(usize::from(!sol.converged))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("warning: {n} solve(s) did not reach the KKT tolerance");
            if cli.allow_nonconverged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
