//! Dense complex linear algebra: norms, eigendecompositions, block
//! truncation, superoperator plumbing and the Hausdorff metric on finite
//! point sets.
//!
//! Vectorization is column stacking throughout the crate, so that
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`. nalgebra stores matrices column-major,
//! which makes `vec` a plain copy of the storage.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Relative tolerance for Hermiticity and unitarity checks.
pub const STRUCTURE_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Builds a square matrix from real rows.
pub fn from_real_rows(rows: &[&[f64]]) -> ComplexMatrix {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| real(rows[i][j]))
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    DMatrix::from_fn(n, n, |i, j| if i == j { real(values[i]) } else { ZERO })
}

pub fn diag_complex(values: &[C64]) -> ComplexMatrix {
    let n = values.len();
    DMatrix::from_fn(n, n, |i, j| if i == j { values[i] } else { ZERO })
}

pub fn identity(n: usize) -> ComplexMatrix {
    DMatrix::identity(n, n)
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Frobenius (Hilbert–Schmidt) norm.
pub fn hs_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Operator norm of `M − M†`.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    operator_norm(&(m - m.adjoint()))
}

pub fn check_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidArgument(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    Ok(m.nrows())
}

pub fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    check_square(m)?;
    let defect = hermiticity_defect(m);
    if defect > STRUCTURE_TOL * operator_norm(m).max(1.0) {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    operator_norm(&(u.adjoint() * u - identity(n)))
}

pub fn check_unitary(u: &ComplexMatrix) -> Result<()> {
    check_square(u)?;
    let defect = unitarity_defect(u);
    if defect > STRUCTURE_TOL {
        return Err(Error::NotUnitary { defect });
    }
    Ok(())
}

/// Operator norm of `[M†, M]`.
pub fn normality_defect(m: &ComplexMatrix) -> f64 {
    operator_norm(&commutator(&m.adjoint(), m))
}

/// Spectral decomposition of a Hermitian matrix with eigenvalues sorted
/// non-increasing.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector for `values[j]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn reconstruct(&self) -> ComplexMatrix {
        &self.vectors * diag_real(&self.values) * self.vectors.adjoint()
    }
}

/// Eigendecomposition of a Hermitian matrix. Zero eigenvalues are kept, so
/// the value list always has length `n`; ties keep the solver's order.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEig> {
    check_hermitian(m)?;
    let n = m.nrows();
    if m.iter().all(|z| *z == ZERO) {
        return Ok(HermitianEig {
            values: vec![0.0; n],
            vectors: identity(n),
        });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEig { values, vectors })
}

/// Eigendecomposition of a normal matrix. The Hermitian and anti-Hermitian
/// parts `A`, `B` of a normal matrix commute, so the eigenvectors of
/// `A + ξB` for a generic real `ξ` diagonalize both.
#[derive(Debug, Clone)]
pub struct NormalEig {
    pub values: Vec<C64>,
    pub vectors: ComplexMatrix,
}

const MIXING_WEIGHTS: [f64; 4] = [
    0.618_033_988_749_894_9,
    1.324_717_957_244_746,
    0.414_213_562_373_095,
    2.718_281_828_459_045,
];

pub fn normal_eig(m: &ComplexMatrix) -> Result<NormalEig> {
    let n = check_square(m)?;
    let scale = operator_norm(m);
    let defect = normality_defect(m);
    if defect > STRUCTURE_TOL * scale.max(1.0).powi(2) {
        return Err(Error::NotNormal { defect });
    }
    if n == 1 {
        return Ok(NormalEig {
            values: vec![m[(0, 0)]],
            vectors: identity(1),
        });
    }
    let a = (m + m.adjoint()).scale(0.5);
    let b = (m - m.adjoint()) * C64::new(0.0, -0.5);
    let mut worst = 0.0f64;
    for xi in MIXING_WEIGHTS {
        let q = hermitian_eig(&(&a + b.scale(xi)))?.vectors;
        let d = q.adjoint() * m * &q;
        let off = (0..n)
            .flat_map(|j| (0..n).map(move |k| (j, k)))
            .filter(|(j, k)| j != k)
            .map(|jk| d[jk].norm())
            .fold(0.0, f64::max);
        if off <= 1e-10 * scale.max(1.0) {
            return Ok(NormalEig {
                values: (0..n).map(|j| d[(j, j)]).collect(),
                vectors: q,
            });
        }
        worst = if worst == 0.0 { off } else { worst.min(off) };
    }
    Err(Error::NotNormal { defect: worst })
}

/// `(M⁺, M⁻)` with `M = M⁺ − M⁻`, both positive semidefinite with
/// orthogonal supports.
pub fn positive_parts(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let eig = hermitian_eig(m)?;
    let plus: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let minus: Vec<f64> = eig.values.iter().map(|&v| (-v).max(0.0)).collect();
    let q = &eig.vectors;
    Ok((
        q * diag_real(&plus) * q.adjoint(),
        q * diag_real(&minus) * q.adjoint(),
    ))
}

/// Orthogonal projection onto the first `k` columns of `basis`.
pub fn leading_projector(basis: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let cols = basis.columns(0, k);
    &cols * cols.adjoint()
}

/// `Π_k C Π_k` for the projection onto the first `k` basis columns.
pub fn block_truncate(c: &ComplexMatrix, k: usize, basis: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = check_square(c)?;
    if basis.nrows() != n || basis.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: basis.nrows(),
        });
    }
    if k == 0 || k > n {
        return Err(Error::BadRank { k, n });
    }
    check_unitary(basis)?;
    let p = leading_projector(basis, k);
    Ok(&p * c * &p)
}

/// Trace-norm error of the rank-`k` block approximation.
pub fn block_tail(c: &ComplexMatrix, k: usize, basis: &ComplexMatrix) -> Result<f64> {
    Ok(trace_norm(&(c - block_truncate(c, k, basis)?)))
}

/// `e^{-itH}` for Hermitian `H`.
pub fn unitary_propagator(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h)?;
    let phases: Vec<C64> = eig.values.iter().map(|&e| (-I * e * t).exp()).collect();
    Ok(&eig.vectors * diag_complex(&phases) * eig.vectors.adjoint())
}

/// Matrix exponential (Padé with scaling and squaring).
pub fn expm(m: &ComplexMatrix) -> ComplexMatrix {
    m.exp()
}

/// Permutation matrix `P` with `P e_a = e_{perm[a]}`, so that
/// `(P X P†)[perm[a], perm[b]] = X[a, b]`.
pub fn permutation_matrix(perm: &[usize]) -> ComplexMatrix {
    let n = perm.len();
    let mut p = DMatrix::zeros(n, n);
    for (a, &b) in perm.iter().enumerate() {
        p[(b, a)] = ONE;
    }
    p
}

pub fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (a, &b) in perm.iter().enumerate() {
        inv[b] = a;
    }
    inv
}

pub fn vectorize(m: &ComplexMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, n: usize) -> ComplexMatrix {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

/// Superoperator of `X ↦ A X B`.
pub fn sandwich_superop(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    b.transpose().kronecker(a)
}

/// Superoperator of the unitary channel `X ↦ U X U†`.
pub fn conjugation_superop(u: &ComplexMatrix) -> ComplexMatrix {
    sandwich_superop(u, &u.adjoint())
}

pub fn apply_superop(s: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
    unvectorize(&(s * vectorize(x)), x.nrows())
}

/// Finite set of points in the complex plane.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointSet2D {
    pub points: Vec<C64>,
}

impl PointSet2D {
    pub fn new(points: Vec<C64>) -> Self {
        PointSet2D { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest real part; the maximum for real point sets.
    pub fn max_real(&self) -> Option<f64> {
        self.points.iter().map(|z| z.re).reduce(f64::max)
    }
}

fn directed_hausdorff(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .map(|z| {
            b.iter()
                .map(|w| (z - w).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Hausdorff distance `max(sup_a d(a, B), sup_b d(b, A))`.
pub fn hausdorff_distance(a: &PointSet2D, b: &PointSet2D) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(directed_hausdorff(&a.points, &b.points).max(directed_hausdorff(&b.points, &a.points)))
}
