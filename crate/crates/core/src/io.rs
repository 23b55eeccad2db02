//! JSON files for problems, schedules and reports.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested
//! arrays. Floats are written with 17 significant digits in exponent form,
//! so a file read and written again is byte-identical.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::crange::CollinearHullReport;
use crate::error::Result;
use crate::linalg::ComplexMatrix;
use crate::lindblad::{make_noise, ControlSystem};
use crate::majorization::DensityMatrix;
use crate::synthesis::{Mode, Provenance, Schedule, VerificationReport};

pub const FORMAT_VERSION: u32 = 1;

/// Serde adapter for a complex matrix as rows of `[re, im]` pairs.
pub mod matrix {
    use super::ComplexMatrix;
    use crate::linalg::C64;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub(crate) fn to_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| [m[(i, j)].re, m[(i, j)].im])
                    .collect()
            })
            .collect()
    }

    pub(crate) fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<ComplexMatrix, String> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err("matrix rows have different lengths".into());
        }
        Ok(ComplexMatrix::from_fn(rows.len(), ncols, |i, j| {
            C64::new(rows[i][j][0], rows[i][j][1])
        }))
    }

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ComplexMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }
}

/// Serde adapter for a list of complex matrices.
pub mod matrix_list {
    use super::matrix::{from_rows, to_rows};
    use super::ComplexMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(ms: &[ComplexMatrix], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<ComplexMatrix>, D::Error> {
        let all = Vec::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
        all.iter()
            .map(|rows| from_rows(rows).map_err(D::Error::custom))
            .collect()
    }
}

/// Compact JSON with every float in `{:.16e}` form.
#[derive(Debug, Clone, Copy, Default)]
pub struct CanonicalFormatter;

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0}")]
    Version(u32),
}

pub fn to_canonical_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFormatter);
    value
        .serialize(&mut ser)
        .expect("in-memory serialization does not fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FileError> {
    fs::write(path, to_canonical_string(value)).map_err(|source| FileError::Io {
        path: path.into(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FileError> {
    let text = fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.into(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| FileError::Parse {
        path: path.into(),
        source,
    })
}

/// Control system, initial and target state, and run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub version: u32,
    pub dimension: usize,
    #[serde(rename = "H0", with = "matrix")]
    pub h0: ComplexMatrix,
    #[serde(with = "matrix_list")]
    pub controls: Vec<ComplexMatrix>,
    #[serde(rename = "V", with = "matrix")]
    pub v: ComplexMatrix,
    #[serde(with = "matrix")]
    pub rho0: ComplexMatrix,
    #[serde(with = "matrix")]
    pub rho_target: ComplexMatrix,
    pub epsilon: f64,
    pub mode: Mode,
    pub seed: Option<u64>,
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self, FileError> {
        let p: ProblemFile = read_json(path)?;
        if p.version != FORMAT_VERSION {
            return Err(FileError::Version(p.version));
        }
        Ok(p)
    }

    pub fn system(&self) -> Result<ControlSystem> {
        ControlSystem::new(self.h0.clone(), self.controls.clone(), make_noise(&self.v)?)
    }

    pub fn rho0(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.rho0.clone())
    }

    pub fn rho_target(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.rho_target.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub version: u32,
    pub schedule: Schedule,
}

impl ScheduleFile {
    pub fn new(schedule: Schedule) -> Self {
        ScheduleFile {
            version: FORMAT_VERSION,
            schedule,
        }
    }

    pub fn load(path: &Path) -> Result<Self, FileError> {
        let s: ScheduleFile = read_json(path)?;
        if s.version != FORMAT_VERSION {
            return Err(FileError::Version(s.version));
        }
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self, FileError> {
        let s: ScheduleFile = serde_json::from_str(text)?;
        if s.version != FORMAT_VERSION {
            return Err(FileError::Version(s.version));
        }
        Ok(s)
    }
}

/// Machine-readable constants of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConstants {
    pub block_size: usize,
    pub relax_index: usize,
    pub alpha: usize,
    pub relax_times: Vec<f64>,
    pub in_place_time: f64,
    pub padded: bool,
    pub phi: Option<f64>,
    pub fill_count: Option<usize>,
    pub scale: Option<f64>,
}

impl ScheduleConstants {
    pub fn of(schedule: &Schedule) -> Self {
        let pad = schedule.provenance.padding.as_ref();
        ScheduleConstants {
            block_size: schedule.block_size,
            relax_index: schedule.relax_pair.1,
            alpha: schedule.alpha,
            relax_times: schedule.provenance.relax_times.clone(),
            in_place_time: schedule.provenance.in_place_time,
            padded: schedule.padded,
            phi: pad.map(|p| p.phi),
            fill_count: pad.map(|p| p.fill_count),
            scale: pad.map(|p| p.scale),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WallTimes {
    pub synthesize_seconds: f64,
    pub execute_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub version: u32,
    pub verification: VerificationReport,
    pub constants: ScheduleConstants,
    pub provenance: Provenance,
    pub wall_times: WallTimes,
}

impl ReportFile {
    pub fn new(
        schedule: &Schedule,
        verification: VerificationReport,
        wall_times: WallTimes,
    ) -> Self {
        ReportFile {
            version: FORMAT_VERSION,
            verification,
            constants: ScheduleConstants::of(schedule),
            provenance: schedule.provenance.clone(),
            wall_times,
        }
    }
}

/// Output of the `crange` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CRangeFile {
    pub version: u32,
    pub seed: u64,
    pub k_c: f64,
    pub k_c_bruteforce: Option<f64>,
    pub samples: Vec<[f64; 2]>,
    pub spectrum: Vec<[f64; 2]>,
    pub spectrum_exhaustive: bool,
    pub max_sample: f64,
    pub hausdorff_samples_to_spectrum: f64,
    pub hull: Option<CollinearHullReport>,
}
