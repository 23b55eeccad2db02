//! C-numerical ranges `W_C(T) = {tr(C U†TU)}`, C-spectra and the trace
//! supremum `K_C(T)`.
//!
//! `W_C(T)` cannot be enumerated, so it is sampled with Haar unitaries and
//! augmented by the eigenvalue pairings, which always lie in it. Every
//! assertion about `W` is either one-sided or a Hausdorff diagnostic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, check_hermitian, hausdorff_distance, hermitian_eig, normal_eig, operator_norm, trace,
    trace_norm, ComplexMatrix, PointSet2D, C64,
};
use crate::majorization::DensityMatrix;
use crate::random;

/// Default cap on enumerated permutations (7!).
pub const DEFAULT_MAX_PERMUTATIONS: usize = 5040;

/// Largest dimension accepted by [`k_c_bruteforce`].
pub const BRUTEFORCE_MAX_DIM: usize = 8;

#[derive(Debug, Clone)]
pub struct CRangeSample {
    pub values: PointSet2D,
    pub sample_count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct CSpectrum {
    pub values: PointSet2D,
    /// True when all `n!` pairings were enumerated.
    pub exhaustive: bool,
}

/// All permutations of `0..n` by Heap's algorithm.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = vec![perm.clone()];
    let mut counters = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            out.push(perm.clone());
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    out
}

fn factorial_at_most(n: usize, cap: usize) -> Option<usize> {
    (1..=n).try_fold(1usize, |acc, k| acc.checked_mul(k).filter(|v| *v <= cap))
}

fn order_by_real_desc(values: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .re
            .total_cmp(&values[a].re)
            .then(values[b].im.total_cmp(&values[a].im))
    });
    idx
}

/// Pairings used for `P_C(T)`: every permutation when `n! ≤ cap`, otherwise
/// `cap` random ones plus the identity and the sorted / antisorted pairings.
fn pairings(c_vals: &[C64], t_vals: &[C64], cap: usize, seed: u64) -> (Vec<Vec<usize>>, bool) {
    let n = c_vals.len();
    if factorial_at_most(n, cap).is_some() {
        return (all_permutations(n), true);
    }
    let mut rng = random::rng(seed);
    let mut perms: Vec<Vec<usize>> = (0..cap).map(|_| random::permutation(n, &mut rng)).collect();
    perms.push((0..n).collect());
    let (oc, ot) = (order_by_real_desc(c_vals), order_by_real_desc(t_vals));
    let mut sorted = vec![0; n];
    let mut anti = vec![0; n];
    for r in 0..n {
        sorted[oc[r]] = ot[r];
        anti[oc[r]] = ot[n - 1 - r];
    }
    perms.push(sorted);
    perms.push(anti);
    (perms, false)
}

fn pairing_value(c_vals: &[C64], t_vals: &[C64], perm: &[usize]) -> C64 {
    c_vals.iter().zip(perm).map(|(c, &p)| c * t_vals[p]).sum()
}

/// Removes points closer than `tol` to an already kept point.
fn dedup_points(mut pts: Vec<C64>, tol: f64) -> Vec<C64> {
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut kept: Vec<C64> = Vec::new();
    for p in pts {
        let dup = kept
            .iter()
            .rev()
            .take_while(|q| p.re - q.re <= tol)
            .any(|q| (p - q).norm() <= tol);
        if !dup {
            kept.push(p);
        }
    }
    kept
}

fn check_same_dim(c: &ComplexMatrix, t: &ComplexMatrix) -> Result<usize> {
    let n = linalg::check_square(c)?;
    let m = linalg::check_square(t)?;
    if n != m {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m,
        });
    }
    Ok(n)
}

/// `P_C(T) = {Σ_j λ_j(C) λ_σ(j)(T)}` for normal `C`, `T`.
pub fn c_spectrum(
    c: &ComplexMatrix,
    t: &ComplexMatrix,
    max_permutations: usize,
    seed: u64,
) -> Result<CSpectrum> {
    check_same_dim(c, t)?;
    let ce = normal_eig(c)?;
    let te = normal_eig(t)?;
    let (perms, exhaustive) = pairings(&ce.values, &te.values, max_permutations, seed);
    let pts: Vec<C64> = perms
        .iter()
        .map(|p| pairing_value(&ce.values, &te.values, p))
        .collect();
    let tol = 1e-12 * (trace_norm(c) * operator_norm(t)).max(1e-3);
    Ok(CSpectrum {
        values: PointSet2D::new(dedup_points(pts, tol)),
        exhaustive,
    })
}

/// Samples `tr(C U†TU)` at `samples` Haar unitaries and at the unitaries that
/// realize the eigenvalue pairings (in the eigenbases when both inputs are
/// normal, otherwise plain permutation matrices).
pub fn sample_c_numerical_range(
    c: &ComplexMatrix,
    t: &ComplexMatrix,
    samples: usize,
    seed: u64,
) -> Result<CRangeSample> {
    let n = check_same_dim(c, t)?;
    let mut rng = random::rng(seed);
    let mut pts = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = random::haar_unitary(n, &mut rng);
        pts.push(trace(&(c * u.adjoint() * t * &u)));
    }
    let (qc, qt, cv, tv) = match (normal_eig(c), normal_eig(t)) {
        (Ok(ce), Ok(te)) => (ce.vectors, te.vectors, ce.values, te.values),
        _ => {
            let d: Vec<C64> = (0..n).map(|i| c[(i, i)]).collect();
            let e: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
            (linalg::identity(n), linalg::identity(n), d, e)
        }
    };
    let (perms, _) = pairings(&cv, &tv, DEFAULT_MAX_PERMUTATIONS, seed);
    for perm in &perms {
        let u = &qt * linalg::permutation_matrix(perm) * qc.adjoint();
        pts.push(trace(&(c * u.adjoint() * t * &u)));
    }
    let sample_count = pts.len();
    Ok(CRangeSample {
        values: PointSet2D::new(pts),
        sample_count,
        seed,
    })
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `K_C(T) = sup_U tr(C U†TU)` on the `n`-dimensional space, i.e. the sorted
/// pairing `Σ_j λ↓_j(C) λ↓_j(T)`.
///
/// When either operator has enough kernel, this coincides with the split
/// formula of [`k_c_kernel_padded`].
pub fn k_c(c: &ComplexMatrix, t: &ComplexMatrix) -> Result<f64> {
    check_same_dim(c, t)?;
    let cv = hermitian_eig(c)?.values;
    let tv = hermitian_eig(t)?.values;
    Ok(cv.iter().zip(&tv).map(|(a, b)| a * b).sum())
}

/// `Σ_j λ↓_j(C⁺)λ↓_j(T⁺) + Σ_j λ↓_j(C⁻)λ↓_j(T⁻)`: the supremum once the space
/// is enlarged by a kernel of dimension at least `n`, as for compact
/// operators on an infinite-dimensional space.
pub fn k_c_kernel_padded(c: &ComplexMatrix, t: &ComplexMatrix) -> Result<f64> {
    check_same_dim(c, t)?;
    let cv = hermitian_eig(c)?.values;
    let tv = hermitian_eig(t)?.values;
    let pos = |v: &[f64]| sorted_desc(v.iter().map(|x| x.max(0.0)).collect());
    let neg = |v: &[f64]| sorted_desc(v.iter().map(|x| (-x).max(0.0)).collect());
    let plus: f64 = pos(&cv).iter().zip(pos(&tv)).map(|(a, b)| a * b).sum();
    let minus: f64 = neg(&cv).iter().zip(neg(&tv)).map(|(a, b)| a * b).sum();
    Ok(plus + minus)
}

/// Maximum of `Σ_j λ_j(C) λ_σ(j)(T)` over all `n!` pairings.
pub fn k_c_bruteforce(c: &ComplexMatrix, t: &ComplexMatrix) -> Result<f64> {
    let n = check_same_dim(c, t)?;
    if n > BRUTEFORCE_MAX_DIM {
        return Err(Error::TooLarge {
            n,
            max: BRUTEFORCE_MAX_DIM,
        });
    }
    check_hermitian(c)?;
    check_hermitian(t)?;
    let cv = hermitian_eig(c)?.values;
    let tv = hermitian_eig(t)?.values;
    Ok(all_permutations(n)
        .iter()
        .map(|p| cv.iter().zip(p).map(|(a, &j)| a * tv[j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max))
}

fn embed(m: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(n, n);
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    out
}

/// Ando-type test: `K_ρ(Π_k) ≤ K_ω(Π_k) + tol` for every rank-`k` diagonal
/// projection and equal traces. States of different size are compared after
/// embedding into the larger space.
pub fn ando_majorization_test(rho: &DensityMatrix, omega: &DensityMatrix, tol: f64) -> bool {
    let n = rho.dim().max(omega.dim());
    let (r, w) = (embed(rho.matrix(), n), embed(omega.matrix(), n));
    if (trace(&r) - trace(&w)).norm() > tol {
        return false;
    }
    (1..=n).all(|k| {
        let proj = linalg::diag_real(
            &(0..n)
                .map(|j| if j < k { 1.0 } else { 0.0 })
                .collect::<Vec<_>>(),
        );
        let (kr, kw) = (k_c(&r, &proj), k_c(&w, &proj));
        matches!((kr, kw), (Ok(a), Ok(b)) if a <= b + tol)
    })
}

// Plane geometry on C.

fn cross(o: C64, a: C64, b: C64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Convex hull vertices in counter-clockwise order (monotone chain). Returns
/// one or two points for degenerate inputs.
pub fn convex_hull(points: &[C64]) -> Vec<C64> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup_by(|a, b| (*a - *b).norm() == 0.0);
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<C64> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<C64> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn distance_to_segment(p: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Distance from `p` to the convex polygon with counter-clockwise `hull`
/// vertices; zero inside.
pub fn distance_to_hull(p: C64, hull: &[C64]) -> f64 {
    match hull.len() {
        0 => f64::INFINITY,
        1 => (p - hull[0]).norm(),
        2 => distance_to_segment(p, hull[0], hull[1]),
        m => {
            let inside = (0..m).all(|i| cross(hull[i], hull[(i + 1) % m], p) >= 0.0);
            if inside {
                0.0
            } else {
                (0..m)
                    .map(|i| distance_to_segment(p, hull[i], hull[(i + 1) % m]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Hausdorff distance between the convex hulls of two point sets; attained
/// at hull vertices.
pub fn hull_hausdorff(a: &[C64], b: &[C64]) -> f64 {
    let (ha, hb) = (convex_hull(a), convex_hull(b));
    let d1 = ha
        .iter()
        .map(|&p| distance_to_hull(p, &hb))
        .fold(0.0, f64::max);
    let d2 = hb
        .iter()
        .map(|&p| distance_to_hull(p, &ha))
        .fold(0.0, f64::max);
    d1.max(d2)
}

/// Max perpendicular distance of `points` to their total-least-squares line.
pub fn collinearity_residual(points: &[C64]) -> f64 {
    if points.len() <= 2 {
        return 0.0;
    }
    let mean: C64 = points.iter().sum::<C64>() / points.len() as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = p - mean;
        sxx += d.re * d.re;
        syy += d.im * d.im;
        sxy += d.re * d.im;
    }
    // principal direction of the 2x2 scatter matrix
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let normal = C64::new(-angle.sin(), angle.cos());
    points
        .iter()
        .map(|p| ((p - mean) * normal.conj()).re.abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollinearHullReport {
    /// Largest distance from a sampled `W_C` point to `conv(P_C)`.
    pub max_outside_distance: f64,
    /// `tol · ‖C‖₁ ‖T‖_op`.
    pub bound: f64,
    pub inside: bool,
    /// Hausdorff distance between `conv(W_C samples)` and `conv(P_C)`.
    pub hull_hausdorff: f64,
    pub collinearity_residual: f64,
    pub sample_count: usize,
    pub spectrum_points: usize,
}

/// Checks the inclusion `W_C(T) ⊆ conv(P_C(T))` on samples for normal `C`
/// with collinear eigenvalues and normal `T`.
pub fn collinear_hull_check(
    c: &ComplexMatrix,
    t: &ComplexMatrix,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<CollinearHullReport> {
    check_same_dim(c, t)?;
    let ce = normal_eig(c)?;
    normal_eig(t)?;
    let scale = trace_norm(c);
    let residual = collinearity_residual(&ce.values);
    if residual > 1e-9 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotCollinear { residual });
    }
    let p = c_spectrum(c, t, DEFAULT_MAX_PERMUTATIONS, seed)?;
    let w = sample_c_numerical_range(c, t, samples, seed)?;
    let hull = convex_hull(&p.values.points);
    let max_outside = w
        .values
        .points
        .iter()
        .map(|&z| distance_to_hull(z, &hull))
        .fold(0.0, f64::max);
    let bound = tol * scale * operator_norm(t);
    Ok(CollinearHullReport {
        max_outside_distance: max_outside,
        bound,
        inside: max_outside <= bound,
        hull_hausdorff: hull_hausdorff(&w.values.points, &p.values.points),
        collinearity_residual: residual,
        sample_count: w.sample_count,
        spectrum_points: p.values.len(),
    })
}

/// Hausdorff distance between two sampled ranges (diagnostic).
pub fn sample_distance(a: &CRangeSample, b: &CRangeSample) -> Result<f64> {
    hausdorff_distance(&a.values, &b.values)
}
