//! The `majorreach` command line.
//!
//! Exit codes: 0 success, 1 domain rejection (the error name is printed),
//! 2 I/O or parse failure, 3 internal inconsistency.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::controllability::{
    connectivity_graph, hamiltonian_generators, lie_closure_dim, LIE_TOL,
};
use crate::crange::{
    c_spectrum, collinear_hull_check, hull_hausdorff, k_c, k_c_bruteforce,
    sample_c_numerical_range, BRUTEFORCE_MAX_DIM, DEFAULT_MAX_PERMUTATIONS,
};
use crate::error::Error;
use crate::io::{
    self, CRangeFile, FileError, ProblemFile, ReportFile, ScheduleFile, WallTimes, FORMAT_VERSION,
};
use crate::linalg::{ComplexMatrix, C64};
use crate::lindblad::trotter_noise;
use crate::majorization::{majorizes, DEFAULT_TOL};
use crate::synthesis::{self, Mode};

#[derive(Debug, Parser)]
#[command(
    name = "majorreach",
    version,
    about = "Majorization reachability for switchable-noise Lindblad systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether the target is majorized by the initial state.
    Check { problem: PathBuf },
    /// Build a schedule and write it together with its verification report.
    Synthesize {
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        mode: Option<Mode>,
    },
    /// Run a schedule on the initial state of a problem.
    Execute {
        problem: PathBuf,
        schedule: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a schedule and compare with the target state.
    Verify {
        problem: PathBuf,
        schedule: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace-norm deviation of Trotterized noise against the exact semigroup.
    TrotterStudy {
        problem: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128,256,512")]
        slices: Vec<u64>,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a C-numerical range and compute its supremum.
    Crange {
        /// JSON object with square matrices `C` and `T`.
        input: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lie closure dimension and transition graph of the controls.
    LieRank {
        problem: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        threshold: f64,
    },
}

impl std::str::FromStr for Cli {
    type Err = clap::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Cli::try_parse_from(std::iter::once("majorreach").chain(s.split_whitespace()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {}", .0.name(), .0)]
    Domain(#[from] Error),
    #[error(transparent)]
    File(#[from] FileError),
    #[error("internal defect: {0}")]
    Defect(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::File(_) => 2,
            CliError::Defect(_) => 3,
        }
    }
}

/// Input of the `crange` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CRangeInput {
    #[serde(rename = "C", with = "io::matrix")]
    pub c: ComplexMatrix,
    #[serde(rename = "T", with = "io::matrix")]
    pub t: ComplexMatrix,
}

fn write_text(path: &Path, text: &str) -> Result<(), FileError> {
    fs::write(path, text).map_err(|source| FileError::Io {
        path: path.into(),
        source,
    })
}

fn report_path(out: &Path) -> PathBuf {
    out.with_extension("report.json")
}

fn point(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Serialize)]
struct StateFile<'a> {
    version: u32,
    #[serde(with = "io::matrix")]
    rho: &'a ComplexMatrix,
}

/// Runs one command and returns the text printed on success.
pub fn run(cli: Cli) -> Result<String, CliError> {
    let mut out = String::new();
    match cli.command {
        Command::Check { problem } => {
            let p = ProblemFile::load(&problem)?;
            let rho0 = p.rho0()?;
            let target = p.rho_target()?;
            let by_sums = majorizes(&target.spectrum(0.0), &rho0.spectrum(0.0), DEFAULT_TOL);
            let by_ando = crate::crange::ando_majorization_test(&target, &rho0, DEFAULT_TOL);
            writeln!(out, "partial sums: {by_sums}").unwrap();
            writeln!(out, "trace suprema: {by_ando}").unwrap();
            if by_sums != by_ando {
                return Err(CliError::Defect(format!(
                    "majorization tests disagree ({by_sums} vs {by_ando})"
                )));
            }
            if !by_sums {
                return Err(Error::NotMajorized(out.trim_end().replace('\n', ", ")).into());
            }
        }
        Command::Synthesize {
            problem,
            out: path,
            epsilon,
            mode,
        } => {
            let p = ProblemFile::load(&problem)?;
            let system = p.system()?;
            let (rho0, target) = (p.rho0()?, p.rho_target()?);
            let epsilon = epsilon.unwrap_or(p.epsilon);
            let started = Instant::now();
            let schedule =
                synthesis::synthesize(&rho0, &target, &system, epsilon, mode.unwrap_or(p.mode))?;
            let synthesize_seconds = started.elapsed().as_secs_f64();
            let started = Instant::now();
            let report = synthesis::verify(&schedule, &rho0, &target, &system)?;
            let execute_seconds = started.elapsed().as_secs_f64();
            io::write_json(&path, &ScheduleFile::new(schedule.clone()))?;
            let report_file = ReportFile::new(
                &schedule,
                report.clone(),
                WallTimes {
                    synthesize_seconds,
                    execute_seconds,
                },
            );
            io::write_json(&report_path(&path), &report_file)?;
            writeln!(out, "steps: {}", schedule.steps.len()).unwrap();
            writeln!(
                out,
                "block size: {}, alpha: {}, padded: {}",
                schedule.block_size, schedule.alpha, schedule.padded
            )
            .unwrap();
            writeln!(
                out,
                "achieved error: {:.3e} (epsilon {epsilon:.3e})",
                report.achieved_error
            )
            .unwrap();
            if !report.budget_satisfied {
                return Err(Error::BudgetExceeded(format!(
                    "achieved error {:.3e} is not below {epsilon:.3e}",
                    report.achieved_error
                ))
                .into());
            }
        }
        Command::Execute {
            problem,
            schedule,
            out: path,
        } => {
            let p = ProblemFile::load(&problem)?;
            let s = ScheduleFile::load(&schedule)?.schedule;
            let rho = synthesis::execute(&s, &p.rho0()?, &p.system()?)?;
            let text = io::to_canonical_string(&StateFile {
                version: FORMAT_VERSION,
                rho: rho.matrix(),
            });
            match path {
                Some(path) => write_text(&path, &text)?,
                None => out.push_str(&text),
            }
        }
        Command::Verify {
            problem,
            schedule,
            out: path,
        } => {
            let p = ProblemFile::load(&problem)?;
            let s = ScheduleFile::load(&schedule)?.schedule;
            let started = Instant::now();
            let report = synthesis::verify(&s, &p.rho0()?, &p.rho_target()?, &p.system()?)?;
            let wall = WallTimes {
                synthesize_seconds: 0.0,
                execute_seconds: started.elapsed().as_secs_f64(),
            };
            if let Some(path) = path {
                io::write_json(&path, &ReportFile::new(&s, report.clone(), wall))?;
            }
            writeln!(out, "achieved error: {:.3e}", report.achieved_error).unwrap();
            writeln!(out, "budget satisfied: {}", report.budget_satisfied).unwrap();
            writeln!(out, "majorization chain: {}", report.majorization_chain_ok).unwrap();
            if !report.budget_satisfied {
                return Err(Error::BudgetExceeded(format!(
                    "achieved error {:.3e}",
                    report.achieved_error
                ))
                .into());
            }
        }
        Command::TrotterStudy {
            problem,
            slices,
            time,
            out: path,
        } => {
            let p = ProblemFile::load(&problem)?;
            let system = p.system()?;
            let rho0 = p.rho0()?;
            let mut csv = String::from("slices,deviation\n");
            let mut points = Vec::new();
            for &s in &slices {
                let (_, deviation) = trotter_noise(&rho0, &system, time, s)?;
                writeln!(csv, "{s},{deviation:.16e}").unwrap();
                points.push(((s as f64).ln(), deviation.ln()));
            }
            write_text(&path, &csv)?;
            writeln!(out, "{} rows written", slices.len()).unwrap();
            if let Some(slope) = loglog_slope(&points) {
                writeln!(out, "log-log slope: {slope:.4}").unwrap();
            }
        }
        Command::Crange {
            input,
            samples,
            seed,
            out: path,
        } => {
            let inp: CRangeInput = io::read_json(&input)?;
            let k = k_c(&inp.c, &inp.t)?;
            let n = inp.c.nrows();
            let brute = if n <= BRUTEFORCE_MAX_DIM {
                Some(k_c_bruteforce(&inp.c, &inp.t)?)
            } else {
                None
            };
            let w = sample_c_numerical_range(&inp.c, &inp.t, samples, seed)?;
            let p = c_spectrum(&inp.c, &inp.t, DEFAULT_MAX_PERMUTATIONS, seed)?;
            let max_sample = w.values.max_real().ok_or(Error::EmptySet)?;
            let hull = collinear_hull_check(&inp.c, &inp.t, samples, 1e-8, seed).ok();
            let file = CRangeFile {
                version: FORMAT_VERSION,
                seed,
                k_c: k,
                k_c_bruteforce: brute,
                samples: w.values.points.iter().map(point).collect(),
                spectrum: p.values.points.iter().map(point).collect(),
                spectrum_exhaustive: p.exhaustive,
                max_sample,
                hausdorff_samples_to_spectrum: hull_hausdorff(&w.values.points, &p.values.points),
                hull,
            };
            writeln!(out, "K_C = {k:.12}").unwrap();
            if let Some(b) = brute {
                writeln!(out, "brute force = {b:.12}").unwrap();
                if (b - k).abs() > 1e-9 * k.abs().max(1.0) {
                    return Err(CliError::Defect(format!(
                        "closed form {k} differs from brute force {b}"
                    )));
                }
            }
            writeln!(
                out,
                "samples: {}, spectrum points: {}",
                w.sample_count,
                p.values.len()
            )
            .unwrap();
            if let Some(path) = path {
                io::write_json(&path, &file)?;
            }
        }
        Command::LieRank { problem, threshold } => {
            let p = ProblemFile::load(&problem)?;
            let system = p.system()?;
            let n = system.dim();
            let report = lie_closure_dim(
                &hamiltonian_generators(&system.h0, &system.controls),
                LIE_TOL,
                n * n,
            )?;
            let graph = connectivity_graph(&system.h0, &system.controls, threshold)?;
            writeln!(
                out,
                "lie dimension: {} of {}",
                report.dimension, report.target_dimension
            )
            .unwrap();
            writeln!(
                out,
                "graph edges: {:?}, connected: {}",
                graph.edges, graph.connected
            )
            .unwrap();
            for w in &graph.warnings {
                writeln!(out, "warning: {w}").unwrap();
            }
            if !report.controllable {
                return Err(Error::NotControllable {
                    dimension: report.dimension,
                    target: report.target_dimension,
                }
                .into());
            }
        }
    }
    Ok(out)
}

/// Least-squares slope of `(x, y)` pairs.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let len = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / len;
    let my = points.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
