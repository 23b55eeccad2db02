//! Unital GKSL dynamics with one switchable normal noise operator.
//!
//! Density matrices are vectorized by stacking columns, so that
//! `vec(AXB) = (Bᵀ ⊗ A) vec(X)` and a superoperator is an `n² × n²` matrix.
//! The generator is
//!
//! ```text
//! L(ρ) = −i[H₀ + Σ u_j H_j, ρ] − γ (½{V†V, ρ} − VρV†),   γ ∈ {0, 1}.
//! ```
//!
//! The pure noise part is diagonal in the eigenbasis `f` of `V`: the matrix
//! unit `|f_j⟩⟨f_k|` decays with rate `μ_jk`, which gives an exact O(n³)
//! propagator ([`apply_noise`]) next to the dense exponential ([`propagate`]).

use log::warn;

use crate::error::{Error, Result};
use crate::linalg::{
    self, apply_superop, check_hermitian, check_square, conjugation_superop, expm, identity,
    normality_defect, operator_norm, sandwich_superop, trace_norm, ComplexMatrix, C64, I,
};
use crate::majorization::DensityMatrix;

/// Tolerance on the states returned by the dense propagators.
pub const PROPAGATION_TOL: f64 = 1e-8;

/// Normal noise operator `V` with its eigenbasis and decay table.
#[derive(Debug, Clone)]
pub struct NoiseOperator {
    v: ComplexMatrix,
    eigvecs: ComplexMatrix,
    eigvals: Vec<C64>,
    mu: ComplexMatrix,
}

impl NoiseOperator {
    pub fn v(&self) -> &ComplexMatrix {
        &self.v
    }

    /// Unitary whose columns are the eigenvectors `f_j`.
    pub fn eigvecs(&self) -> &ComplexMatrix {
        &self.eigvecs
    }

    pub fn eigvals(&self) -> &[C64] {
        &self.eigvals
    }

    /// `μ_jk = ½|v_j − v_k|² − i Im(v_j v̄_k)`.
    pub fn mu(&self) -> &ComplexMatrix {
        &self.mu
    }

    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    /// Relaxation rate `Re μ_jk = ½|v_j − v_k|²` of the matrix unit `(j, k)`.
    pub fn rate(&self, j: usize, k: usize) -> f64 {
        self.mu[(j, k)].re
    }

    /// `X` expressed in the eigenbasis, `f† X f`.
    pub fn to_eigenbasis(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.eigvecs.adjoint() * x * &self.eigvecs
    }

    pub fn from_eigenbasis(&self, y: &ComplexMatrix) -> ComplexMatrix {
        &self.eigvecs * y * self.eigvecs.adjoint()
    }
}

fn mu_table(v: &[C64]) -> ComplexMatrix {
    let n = v.len();
    ComplexMatrix::from_fn(n, n, |j, k| {
        C64::new(0.5 * (v[j] - v[k]).norm_sqr(), -(v[j] * v[k].conj()).im)
    })
}

/// Builds the noise operator, its eigenbasis and the `μ` table.
pub fn make_noise(v: &ComplexMatrix) -> Result<NoiseOperator> {
    let n = check_square(v)?;
    let scale = operator_norm(v);
    if scale == 0.0 {
        return Err(Error::ZeroNoise);
    }
    let defect = normality_defect(v);
    if defect > 1e-10 * scale * scale {
        return Err(Error::NotNormal { defect });
    }
    let (eigvecs, eigvals) = if n == 1 {
        (identity(1), vec![v[(0, 0)]])
    } else {
        let eig = linalg::normal_eig(v)?;
        (eig.vectors, eig.values)
    };
    let residual = (v * &eigvecs - &eigvecs * linalg::diag_complex(&eigvals)).norm();
    if residual > 1e-9 * scale.max(1.0) {
        return Err(Error::NotNormal { defect: residual });
    }
    let mu = mu_table(&eigvals);
    Ok(NoiseOperator {
        v: v.clone(),
        eigvecs,
        eigvals,
        mu,
    })
}

/// `e^{−tΓ_V}(X)`: entry `(j, k)` of `X` in the eigenbasis of `V` is
/// multiplied by `exp(−t μ_jk)`.
///
/// # Panics
/// If `t` is negative.
pub fn apply_noise(x: &ComplexMatrix, noise: &NoiseOperator, t: f64) -> ComplexMatrix {
    assert!(
        t >= 0.0,
        "noise semigroup is only defined for t ≥ 0, got {t}"
    );
    if t == 0.0 {
        return x.clone();
    }
    let mut y = noise.to_eigenbasis(x);
    for k in 0..y.ncols() {
        for j in 0..y.nrows() {
            y[(j, k)] *= (-noise.mu[(j, k)] * t).exp();
        }
    }
    noise.from_eigenbasis(&y)
}

/// Drift, control Hamiltonians and the switchable noise term.
#[derive(Debug, Clone)]
pub struct ControlSystem {
    pub h0: ComplexMatrix,
    pub controls: Vec<ComplexMatrix>,
    pub noise: NoiseOperator,
}

impl ControlSystem {
    pub fn new(
        h0: ComplexMatrix,
        controls: Vec<ComplexMatrix>,
        noise: NoiseOperator,
    ) -> Result<Self> {
        let n = check_square(&h0)?;
        check_hermitian(&h0)?;
        for h in &controls {
            if check_square(h)? != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: h.nrows(),
                });
            }
            check_hermitian(h)?;
        }
        if noise.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: noise.dim(),
            });
        }
        Ok(ControlSystem {
            h0,
            controls,
            noise,
        })
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    /// `H₀ + Σ u_j H_j`.
    pub fn hamiltonian(&self, u: &[f64]) -> Result<ComplexMatrix> {
        if u.len() != self.controls.len() {
            return Err(Error::DimensionMismatch {
                expected: self.controls.len(),
                found: u.len(),
            });
        }
        let mut h = self.h0.clone();
        for (uj, hj) in u.iter().zip(&self.controls) {
            h += hj.scale(*uj);
        }
        Ok(h)
    }
}

/// Linear map on column-stacked `n × n` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    pub dim: usize,
    pub matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn identity(dim: usize) -> Self {
        Superoperator {
            dim,
            matrix: identity(dim * dim),
        }
    }

    pub fn unitary(u: &ComplexMatrix) -> Self {
        Superoperator {
            dim: u.nrows(),
            matrix: conjugation_superop(u),
        }
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        apply_superop(&self.matrix, x)
    }

    /// `e^{tL}` for this generator.
    pub fn exp(&self, t: f64) -> Self {
        Superoperator {
            dim: self.dim,
            matrix: expm(&self.matrix.scale(t)),
        }
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &Superoperator) -> Self {
        Superoperator {
            dim: self.dim,
            matrix: &self.matrix * &first.matrix,
        }
    }

    /// `self^k` by repeated squaring.
    pub fn pow(&self, mut k: u64) -> Self {
        let mut result = identity(self.dim * self.dim);
        let mut base = self.matrix.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        Superoperator {
            dim: self.dim,
            matrix: result,
        }
    }
}

fn hamiltonian_part(h: &ComplexMatrix) -> ComplexMatrix {
    let id = identity(h.nrows());
    (sandwich_superop(h, &id) - sandwich_superop(&id, h)) * (-I)
}

fn noise_part(v: &ComplexMatrix) -> ComplexMatrix {
    let id = identity(v.nrows());
    let vv = v.adjoint() * v;
    sandwich_superop(v, &v.adjoint())
        - (sandwich_superop(&vv, &id) + sandwich_superop(&id, &vv)).scale(0.5)
}

/// Generator of `ρ ↦ −i[H(u), ρ] − γ Γ_V(ρ)`.
pub fn gksl_superop(system: &ControlSystem, u: &[f64], gamma: bool) -> Result<Superoperator> {
    let h = system.hamiltonian(u)?;
    let mut l = hamiltonian_part(&h);
    if gamma {
        l += noise_part(system.noise.v());
    }
    Ok(Superoperator {
        dim: system.dim(),
        matrix: l,
    })
}

/// Generator of pure noise, `−Γ_V`.
pub fn noise_generator(noise: &NoiseOperator) -> Superoperator {
    Superoperator {
        dim: noise.dim(),
        matrix: noise_part(noise.v()),
    }
}

fn check_state_dim(rho: &DensityMatrix, n: usize) -> Result<()> {
    if rho.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho.dim(),
        });
    }
    Ok(())
}

fn validated(out: ComplexMatrix) -> Result<DensityMatrix> {
    DensityMatrix::with_tolerance(out, PROPAGATION_TOL)
        .inspect_err(|e| warn!("propagated state failed validation: {e}"))
}

/// `e^{tL}(ρ)` by the dense superoperator exponential.
pub fn propagate(
    rho: &DensityMatrix,
    system: &ControlSystem,
    u: &[f64],
    gamma: bool,
    t: f64,
) -> Result<DensityMatrix> {
    check_state_dim(rho, system.dim())?;
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    let l = gksl_superop(system, u, gamma)?;
    validated(l.exp(t).apply(rho.matrix()))
}

/// One-slice map `e^{itH₀/n} ∘ e^{(−itH₀ − tΓ_V)/n}`, raised to the power
/// `slices`: free drift reversal after a noisy drift step.
pub fn trotter_superop(system: &ControlSystem, t: f64, slices: u64) -> Result<Superoperator> {
    if slices == 0 {
        return Err(Error::InvalidArgument("slices must be at least 1".into()));
    }
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    if t == 0.0 {
        return Ok(Superoperator::identity(system.dim()));
    }
    let dt = t / slices as f64;
    let noisy = gksl_superop(system, &vec![0.0; system.controls.len()], true)?.exp(dt);
    let reverse = Superoperator::unitary(&linalg::unitary_propagator(&system.h0, -dt)?);
    Ok(reverse.after(&noisy).pow(slices))
}

/// Trotterized pure noise for time `t` and its trace-norm deviation from
/// the exact noise semigroup.
pub fn trotter_noise(
    rho: &DensityMatrix,
    system: &ControlSystem,
    t: f64,
    slices: u64,
) -> Result<(DensityMatrix, f64)> {
    check_state_dim(rho, system.dim())?;
    let out = trotter_superop(system, t, slices)?.apply(rho.matrix());
    let exact = apply_noise(rho.matrix(), &system.noise, t);
    let deviation = trace_norm(&(&out - exact));
    Ok((validated(out)?, deviation))
}

/// `(‖Γ_V(1)‖₁ ≤ 1e−10 ‖V‖₁², ‖Γ_V(1)‖₁)` with `Γ_V(1) = V†V − VV†`.
pub fn verify_unitality(v: &ComplexMatrix) -> (bool, f64) {
    let defect = trace_norm(&(v.adjoint() * v - v * v.adjoint()));
    let scale = trace_norm(v);
    (defect <= 1e-10 * scale * scale, defect)
}

#[cfg(test)]
fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    linalg::hermitian_eig(&(m + m.adjoint()).scale(0.5))
        .unwrap()
        .values
        .last()
        .copied()
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag_complex, diag_real, from_real_rows, hs_norm, trace, vectorize};
    use crate::majorization::state_majorizes;
    use crate::random;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sigma_x() -> ComplexMatrix {
        from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn sigma_y() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    fn sigma_z() -> ComplexMatrix {
        diag_real(&[1.0, -1.0])
    }

    fn random_system(n: usize, seed: u64) -> ControlSystem {
        let mut rng = random::rng(seed);
        let vals: Vec<C64> = (0..n).map(|_| random::complex_gaussian(&mut rng)).collect();
        let v = random::normal_with_eigenvalues(&vals, &mut rng);
        let h0 = random::hermitian(n, &mut rng);
        let h1 = random::hermitian(n, &mut rng);
        ControlSystem::new(h0, vec![h1], make_noise(&v).unwrap()).unwrap()
    }

    #[test]
    fn make_noise_examples() {
        let noise = make_noise(&diag_complex(&[c(1.0, 0.0), c(0.0, 1.0)])).unwrap();
        let (j, k) = if noise.eigvals()[0].re > 0.5 {
            (0, 1)
        } else {
            (1, 0)
        };
        assert_abs_diff_eq!(noise.mu()[(j, k)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(noise.mu()[(j, k)].im, 1.0, epsilon = 1e-14);

        let noise = make_noise(&identity(2).scale(0.7)).unwrap();
        assert!(noise.mu().iter().all(|m| m.norm() < 1e-15));

        let lower = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(make_noise(&lower), Err(Error::NotNormal { .. })));
        assert!(matches!(
            make_noise(&ComplexMatrix::zeros(3, 3)),
            Err(Error::ZeroNoise)
        ));
    }

    #[test]
    fn noise_invariants_on_random_operators() {
        let mut rng = random::rng(3);
        for n in 1..=6 {
            let vals: Vec<C64> = (0..n).map(|_| random::complex_gaussian(&mut rng)).collect();
            let v = random::normal_with_eigenvalues(&vals, &mut rng);
            let noise = make_noise(&v).unwrap();
            assert!(linalg::unitarity_defect(noise.eigvecs()) < 1e-10);
            for j in 0..n {
                let f = noise.eigvecs().column(j);
                assert!((&v * f - f * noise.eigvals()[j]).norm() < 1e-9);
                assert_eq!(noise.mu()[(j, j)], c(0.0, 0.0));
                for k in 0..n {
                    assert!(noise.rate(j, k) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn apply_noise_examples() {
        let noise = make_noise(&diag_real(&[0.0, 2f64.sqrt()])).unwrap();
        let x = from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert_eq!(apply_noise(&x, &noise, 0.0), x);
        let out = apply_noise(&x, &noise, 1.0);
        let e = (-1f64).exp();
        let expected = from_real_rows(&[&[0.5, 0.5 * e], &[0.5 * e, 0.5]]);
        assert!((&out - &expected).norm() < 1e-12);
        let dense = noise_generator(&noise).exp(1.0).apply(&x);
        assert!((&out - dense).norm() < 1e-10);

        let mut rng = random::rng(5);
        let vals: Vec<C64> = (0..4).map(|_| random::complex_gaussian(&mut rng)).collect();
        let noise = make_noise(&random::normal_with_eigenvalues(&vals, &mut rng)).unwrap();
        let d = noise.from_eigenbasis(&diag_real(&[0.1, 0.2, 0.3, 0.4]));
        assert!((apply_noise(&d, &noise, 3.7) - &d).norm() < 1e-12);
    }

    #[test]
    fn gksl_examples() {
        let noise = make_noise(&sigma_z()).unwrap();
        let system = ControlSystem::new(sigma_z(), vec![sigma_x()], noise).unwrap();
        let l = gksl_superop(&system, &[0.0], false).unwrap();
        let diag_state = diag_real(&[0.3, 0.7]);
        assert!(l.apply(&diag_state).norm() < 1e-14);

        let rho = (sigma_x() + identity(2)).scale(0.5);
        let out = l.apply(&rho);
        assert!((&out - sigma_y()).norm() < 1e-14);

        let l = gksl_superop(&system, &[0.4], true).unwrap();
        assert!(l.apply(&identity(2)).norm() < 1e-14);
        assert!(matches!(
            gksl_superop(&system, &[], true),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gksl_preserves_hermiticity_and_trace() {
        let system = random_system(4, 7);
        let l = gksl_superop(&system, &[0.8], true).unwrap();
        let mut rng = random::rng(8);
        let h = random::hermitian(4, &mut rng);
        let out = l.apply(&h);
        assert!(linalg::hermiticity_defect(&out) < 1e-12);
        assert!(trace(&out).norm() < 1e-12);
        // trace functional is annihilated by the adjoint
        let row = vectorize(&identity(4)).adjoint() * &l.matrix;
        assert!(row.norm() < 1e-12);
    }

    #[test]
    fn propagate_examples() {
        let system = random_system(3, 11);
        let mut rng = random::rng(12);
        let rho = DensityMatrix::new(random::density_matrix(3, &mut rng)).unwrap();
        let same = propagate(&rho, &system, &[0.3], true, 0.0).unwrap();
        assert!((same.matrix() - rho.matrix()).norm() < 1e-14);

        let out = propagate(&rho, &system, &[0.3], false, 1.3).unwrap();
        let h = system.hamiltonian(&[0.3]).unwrap();
        let u = linalg::unitary_propagator(&h, 1.3).unwrap();
        assert!((out.matrix() - &u * rho.matrix() * u.adjoint()).norm() < 1e-9);

        let pure_noise =
            ControlSystem::new(ComplexMatrix::zeros(3, 3), vec![], system.noise.clone()).unwrap();
        let out = propagate(&rho, &pure_noise, &[], true, 0.9).unwrap();
        assert!((out.matrix() - apply_noise(rho.matrix(), &system.noise, 0.9)).norm() < 1e-9);
    }

    #[test]
    fn spectral_consistency() {
        for n in 1..=6 {
            let system = random_system(n, 20 + n as u64);
            let noise = &system.noise;
            let gen = noise_generator(noise);
            for j in 0..n {
                for k in 0..n {
                    let fj = noise.eigvecs().column(j);
                    let fk = noise.eigvecs().column(k);
                    let e = fj * fk.adjoint();
                    let lhs = gen.apply(&e);
                    let rhs = e.map(|z| -z * noise.mu()[(j, k)]);
                    assert!((lhs - rhs).norm() < 1e-10, "n={n} j={j} k={k}");
                }
            }
        }
    }

    #[test]
    fn trotter_commuting_case_is_exact() {
        let mut rng = random::rng(30);
        let u = random::haar_unitary(3, &mut rng);
        let h0 = &u * diag_real(&[0.3, -1.0, 2.0]) * u.adjoint();
        let v = &u * diag_complex(&[c(1.0, 0.5), c(-0.2, 0.0), c(0.0, 2.0)]) * u.adjoint();
        let system = ControlSystem::new(h0, vec![], make_noise(&v).unwrap()).unwrap();
        let rho = DensityMatrix::new(random::density_matrix(3, &mut rng)).unwrap();
        for slices in [1, 3, 17] {
            let (_, dev) = trotter_noise(&rho, &system, 1.5, slices).unwrap();
            assert!(dev <= 1e-9, "slices={slices} dev={dev}");
        }
        let (out, dev) = trotter_noise(&rho, &system, 0.0, 4).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-14);
        assert_eq!(dev, 0.0);
    }

    #[test]
    fn trotter_converges_at_first_order() {
        let system = random_system(3, 31);
        let mut rng = random::rng(32);
        let rho = DensityMatrix::new(random::density_matrix_with_rank(3, 1, &mut rng)).unwrap();
        let slices: Vec<u64> = (3..=9).map(|p| 1 << p).collect();
        let devs: Vec<f64> = slices
            .iter()
            .map(|&s| trotter_noise(&rho, &system, 1.0, s).unwrap().1)
            .collect();
        let xs: Vec<f64> = slices.iter().map(|&s| (s as f64).ln()).collect();
        let ys: Vec<f64> = devs.iter().map(|d| d.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / 7.0, ys.iter().sum::<f64>() / 7.0);
        let slope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!(
            (-1.3..=-0.7).contains(&slope),
            "slope {slope}, deviations {devs:?}"
        );
        for w in devs.windows(2) {
            assert!((w[1] / w[0] - 0.5).abs() < 0.1);
        }
    }

    #[test]
    fn unitality_examples() {
        let mut rng = random::rng(40);
        let vals: Vec<C64> = (0..4).map(|_| random::complex_gaussian(&mut rng)).collect();
        let (ok, defect) = verify_unitality(&random::normal_with_eigenvalues(&vals, &mut rng));
        assert!(ok && defect < 1e-12);
        let (ok, defect) = verify_unitality(&from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]));
        assert!(!ok);
        assert_abs_diff_eq!(defect, 2.0, epsilon = 1e-12);
        assert_eq!(verify_unitality(&ComplexMatrix::zeros(2, 2)), (true, 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn semigroup_law(seed in 0u64..10_000, n in 1usize..6, s in 0.0f64..3.0, t in 0.0f64..3.0) {
            let system = random_system(n, seed);
            let mut rng = random::rng(seed + 1);
            let x = random::ginibre(n, &mut rng);
            let two = apply_noise(&apply_noise(&x, &system.noise, s), &system.noise, t);
            let one = apply_noise(&x, &system.noise, s + t);
            prop_assert!((two - one).norm() < 1e-10);
        }

        #[test]
        fn off_diagonal_monotonicity(seed in 0u64..10_000, n in 1usize..6, t in 0.0f64..5.0) {
            let system = random_system(n, seed);
            let mut rng = random::rng(seed + 2);
            let x = random::ginibre(n, &mut rng);
            let before = system.noise.to_eigenbasis(&x);
            let after = system.noise.to_eigenbasis(&apply_noise(&x, &system.noise, t));
            for (a, b) in after.iter().zip(before.iter()) {
                prop_assert!(a.norm() <= b.norm() + 1e-12);
            }
        }

        #[test]
        fn channel_properties(seed in 0u64..10_000, n in 2usize..5, t in 0.0f64..2.0, gamma: bool, u in -2.0f64..2.0) {
            let system = random_system(n, seed);
            let mut rng = random::rng(seed + 3);
            let rho = DensityMatrix::new(random::density_matrix(n, &mut rng)).unwrap();
            let out = propagate(&rho, &system, &[u], gamma, t).unwrap();
            prop_assert!((trace(out.matrix()).re - 1.0).abs() < 1e-9);
            prop_assert!(min_eigenvalue(out.matrix()) >= -1e-8);
            prop_assert!(state_majorizes(&out, &rho, 1e-9));

            let a = random::ginibre(n, &mut rng);
            let channel = gksl_superop(&system, &[u], gamma).unwrap().exp(t);
            prop_assert!(trace_norm(&channel.apply(&a)) <= trace_norm(&a) + 1e-9);
            prop_assert!(hs_norm(&(channel.apply(&identity(n)) - identity(n))) < 1e-9);
        }
    }
}
