//! Seeded random matrices: Haar unitaries, Ginibre draws, states and
//! normal operators. Every generator takes an explicit RNG.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, diag_complex, trace, ComplexMatrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    ginibre_rect(n, n, rng)
}

pub fn ginibre_rect<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let qr = ginibre(n, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, rng);
    (&g + g.adjoint()).scale(0.5)
}

pub fn traceless_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let h = hermitian(n, rng);
    let shift = trace(&h) / n as f64;
    &h - ComplexMatrix::identity(n, n) * shift
}

/// Full-rank density matrix `G G† / tr(G G†)`.
pub fn density_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    density_matrix_with_rank(n, n, rng)
}

pub fn density_matrix_with_rank<R: Rng + ?Sized>(
    n: usize,
    rank: usize,
    rng: &mut R,
) -> ComplexMatrix {
    let g = ginibre_rect(n, rank, rng);
    let p = &g * g.adjoint();
    let t = trace(&p).re;
    p.unscale(t)
}

/// Normal matrix `U diag(values) U†` for a Haar-random `U`.
pub fn normal_with_eigenvalues<R: Rng + ?Sized>(values: &[C64], rng: &mut R) -> ComplexMatrix {
    let u = haar_unitary(values.len(), rng);
    &u * diag_complex(values) * u.adjoint()
}

pub fn permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
