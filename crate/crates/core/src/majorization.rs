//! Majorization of eigenvalue sequences and density matrices.
//!
//! Sequences of different lengths are compared after zero padding. The
//! Schur–Horn construction realizes `x ≺ y` as the diagonal of
//! `U diag(y) U†` through a chain of at most `n − 1` plane rotations, each
//! one a T-transform that pins one diagonal entry to its target.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, identity, trace, ComplexMatrix, HermitianEig, C64};
use crate::random;

/// Absolute tolerance on partial sums used by default.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Tolerance for density matrix validation.
pub const STATE_TOL: f64 = 1e-10;

/// Finite nonnegative sequence standing for a truncated ℓ¹₊ sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueSequence {
    entries: Vec<f64>,
    sorted: bool,
}

impl EigenvalueSequence {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sequence entry {bad} is not a nonnegative number"
            )));
        }
        let sorted = entries.windows(2).all(|w| w[0] >= w[1]);
        Ok(EigenvalueSequence { entries, sorted })
    }

    /// Builds a sequence from a computed spectrum, zeroing entries with
    /// magnitude below `floor` and rejecting anything more negative.
    pub fn from_spectrum(values: &[f64], floor: f64) -> Result<Self> {
        let mut out = Vec::with_capacity(values.len());
        for &v in values {
            if v < -floor {
                return Err(Error::InvalidState(format!(
                    "eigenvalue {v:.3e} below the PSD floor"
                )));
            }
            out.push(if v.abs() <= floor { 0.0 } else { v });
        }
        Self::new(out)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.sorted
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().sum()
    }

    /// Entries padded with zeros (or truncated) to `len`.
    pub fn padded(&self, len: usize) -> Vec<f64> {
        let mut v = self.entries.clone();
        v.resize(len, 0.0);
        v
    }
}

pub fn decreasing_rearrangement(x: &EigenvalueSequence) -> EigenvalueSequence {
    let mut entries = x.entries.clone();
    entries.sort_by(|a, b| b.total_cmp(a));
    EigenvalueSequence {
        entries,
        sorted: true,
    }
}

fn partial_sums(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

fn sorted_pair(x: &EigenvalueSequence, y: &EigenvalueSequence) -> (Vec<f64>, Vec<f64>) {
    let len = x.len().max(y.len());
    (
        decreasing_rearrangement(x).padded(len),
        decreasing_rearrangement(y).padded(len),
    )
}

/// `x ≺ y`: every partial sum of `x↓` is at most that of `y↓` and the totals
/// agree, all up to `tol`.
pub fn majorizes(x: &EigenvalueSequence, y: &EigenvalueSequence, tol: f64) -> bool {
    let (xs, ys) = sorted_pair(x, y);
    if (x.sum() - y.sum()).abs() > tol {
        return false;
    }
    weak_partial_sums_hold(&xs, &ys, tol)
}

/// Weak sub-majorization: partial-sum inequalities without the trace
/// condition.
pub fn weakly_submajorized(x: &EigenvalueSequence, y: &EigenvalueSequence, tol: f64) -> bool {
    let (xs, ys) = sorted_pair(x, y);
    weak_partial_sums_hold(&xs, &ys, tol)
}

fn weak_partial_sums_hold(xs: &[f64], ys: &[f64], tol: f64) -> bool {
    partial_sums(xs)
        .iter()
        .zip(partial_sums(ys))
        .all(|(a, b)| *a <= b + tol)
}

/// `Σ_j c_j x↓_j` for a non-increasing nonnegative weight vector `c`.
pub fn submajorization_functional(c: &EigenvalueSequence, x: &EigenvalueSequence) -> f64 {
    debug_assert!(c.is_sorted());
    let xs = decreasing_rearrangement(x).padded(c.len());
    c.entries.iter().zip(xs).map(|(a, b)| a * b).sum()
}

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, STATE_TOL)
    }

    /// Validates Hermiticity (relative), the PSD floor and the trace, each
    /// against `tol`.
    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        linalg::check_square(&matrix)?;
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > tol * linalg::operator_norm(&matrix).max(1.0) {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = trace(&matrix);
        if (tr - C64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let eig = hermitian_eig(&(&matrix + matrix.adjoint()).scale(0.5))?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -tol {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix {
            matrix: identity(n).unscale(n as f64),
        }
    }

    /// Diagonal state, entries must form a probability vector.
    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        Self::new(linalg::diag_real(p))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn eig(&self) -> HermitianEig {
        hermitian_eig(&(&self.matrix + self.matrix.adjoint()).scale(0.5))
            .expect("density matrices are Hermitian")
    }

    /// Sorted spectrum with round-off below `floor` set to zero.
    pub fn spectrum(&self, floor: f64) -> EigenvalueSequence {
        let values: Vec<f64> = self
            .eig()
            .values
            .iter()
            .map(|v| if v.abs() <= floor { 0.0 } else { v.max(0.0) })
            .collect();
        EigenvalueSequence::new(values).expect("clamped spectrum is nonnegative")
    }

    pub fn conjugate(&self, u: &ComplexMatrix) -> ComplexMatrix {
        u * &self.matrix * u.adjoint()
    }
}

/// `ρ ≺ ω` on spectra.
pub fn state_majorizes(rho: &DensityMatrix, omega: &DensityMatrix, tol: f64) -> bool {
    majorizes(&rho.spectrum(0.0), &omega.spectrum(0.0), tol)
}

/// Unitary `U` with `diag(U diag(y) U†) = x` for sorted `x ≺ y`.
pub fn schur_horn_unitary(x: &EigenvalueSequence, y: &EigenvalueSequence) -> Result<ComplexMatrix> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if !x.is_sorted() || !y.is_sorted() {
        return Err(Error::InvalidArgument(
            "Schur–Horn inputs must be sorted non-increasing".into(),
        ));
    }
    if !majorizes(x, y, DEFAULT_TOL) {
        return Err(Error::NotMajorized(
            "diagonal target is not majorized by the spectrum".into(),
        ));
    }
    let n = x.len();
    let target = &x.entries;
    let mut diag = y.entries.clone();
    let mut u = identity(n);
    let gap = 1e-15 * y.entries.first().copied().unwrap_or(0.0).max(1e-300);

    // Each pass pins d_j or d_k to its target; pinned indices never move again,
    // so at most n - 1 rotations are applied and every rotated 2x2 block is diagonal.
    for _ in 0..n {
        let Some(j) = (0..n).rev().find(|&j| diag[j] - target[j] > gap) else {
            break;
        };
        let Some(k) = (j + 1..n).find(|&k| target[k] - diag[k] > gap) else {
            break;
        };
        let delta = (diag[j] - target[j]).min(target[k] - diag[k]);
        let spread = diag[j] - diag[k];
        let t = ((diag[j] - delta - diag[k]) / spread).clamp(0.0, 1.0);
        let (cs, sn) = (t.sqrt(), (1.0 - t).sqrt());
        for col in 0..n {
            let (a, b) = (u[(j, col)], u[(k, col)]);
            u[(j, col)] = a * cs - b * sn;
            u[(k, col)] = a * sn + b * cs;
        }
        let (dj, dk) = (diag[j], diag[k]);
        diag[j] = t * dj + (1.0 - t) * dk;
        diag[k] = (1.0 - t) * dj + t * dk;
        if diag[j] - target[j] <= gap {
            diag[j] = target[j];
        } else {
            diag[k] = target[k];
        }
    }
    Ok(u)
}

/// Tail-padded pair `x̂ ≺ ŷ` built from the first `N` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedPair {
    pub x_hat: EigenvalueSequence,
    pub y_hat: EigenvalueSequence,
    /// `Σ_{j≤N} y↓_j`.
    pub scale: f64,
    /// Deficit `φ = Σ_{j≤N}(y↓_j − x↓_j)`.
    pub phi: f64,
    /// `φ / m`, zero when `m = 0`.
    pub fill_value: f64,
    pub fill_count: usize,
    /// Zero-based index of the smallest nonzero entry among the first `N` of `x↓`.
    pub k: usize,
}

/// Cuts `x↓`, `y↓` to their first `n_block` entries and refills the missing
/// weight of `x` with `m = ⌈φ / x↓_k⌉` copies of `φ / m`.
pub fn pad_and_match(
    x: &EigenvalueSequence,
    y: &EigenvalueSequence,
    n_block: usize,
) -> Result<PaddedPair> {
    if !majorizes(x, y, DEFAULT_TOL) {
        return Err(Error::NotMajorized("x is not majorized by y".into()));
    }
    let (xs, ys) = sorted_pair(x, y);
    if n_block == 0 || n_block > xs.len() {
        return Err(Error::BadRank {
            k: n_block,
            n: xs.len(),
        });
    }
    let k = (0..n_block)
        .rev()
        .find(|&j| xs[j] > 0.0)
        .ok_or(Error::DegenerateBlock)?;
    let y_block: f64 = ys[..n_block].iter().sum();
    let x_block: f64 = xs[..n_block].iter().sum();
    let mut phi = (y_block - x_block).max(0.0);
    if phi <= 1e-13 * y_block.max(1.0) {
        phi = 0.0;
    }
    let room = xs.len() - (k + 1);
    let fill_count = if phi > 0.0 {
        (((phi / xs[k]) - 1e-9).ceil().max(1.0) as usize).min(room.max(1))
    } else {
        0
    };
    let fill_value = if fill_count > 0 {
        phi / fill_count as f64
    } else {
        0.0
    };

    let mut x_hat: Vec<f64> = xs[..=k].to_vec();
    x_hat.extend(std::iter::repeat_n(fill_value, fill_count));
    if x_hat.len() < n_block {
        x_hat.resize(n_block, 0.0);
    }
    let y_hat = ys[..n_block].to_vec();
    Ok(PaddedPair {
        x_hat: EigenvalueSequence::new(x_hat)?,
        y_hat: EigenvalueSequence::new(y_hat)?,
        scale: y_block,
        phi,
        fill_value,
        fill_count,
        k,
    })
}

/// Applies `steps` random bistochastic maps `ρ ↦ w U₁ρU₁† + (1 − w) U₂ρU₂†`
/// to `omega`; the result is majorized by `omega`.
pub fn random_majorized_state(omega: &DensityMatrix, steps: usize, seed: u64) -> DensityMatrix {
    let mut rng = random::rng(seed);
    let n = omega.dim();
    let mut rho = omega.matrix().clone();
    for _ in 0..steps {
        let u1 = random::haar_unitary(n, &mut rng);
        let u2 = random::haar_unitary(n, &mut rng);
        let w: f64 = rng.random();
        rho = (&u1 * &rho * u1.adjoint()).scale(w) + (&u2 * &rho * u2.adjoint()).scale(1.0 - w);
        rho = (&rho + rho.adjoint()).scale(0.5);
    }
    DensityMatrix::with_tolerance(rho, 1e-9)
        .expect("mixtures of unitary conjugations preserve states")
}
