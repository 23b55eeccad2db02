//! Controllability certificates at finite truncation: the dimension of the
//! Lie algebra generated by `iH₀, iH₁, …` and the transition graph of the
//! controls in the eigenbasis of the drift.

use std::collections::VecDeque;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    check_hermitian, check_square, commutator, hermitian_eig, hs_norm, operator_norm, trace,
    ComplexMatrix, I,
};

/// Default rank tolerance for [`lie_closure_dim`].
pub const LIE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieClosureReport {
    pub dimension: usize,
    /// `n² − 1` when every generator is traceless, `n²` otherwise.
    pub target_dimension: usize,
    /// Norm of each accepted element after orthogonalization, in order.
    pub basis_residuals: Vec<f64>,
    /// Number of commutators evaluated.
    pub iterations: usize,
    pub controllable: bool,
}

fn real_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

struct Basis {
    elements: Vec<ComplexMatrix>,
    residuals: Vec<f64>,
    tol: f64,
}

impl Basis {
    /// Adds the normalized residual of `candidate` if it exceeds `tol`.
    fn try_add(&mut self, candidate: ComplexMatrix) -> bool {
        if hs_norm(&candidate) <= self.tol {
            return false;
        }
        let mut r = candidate;
        for _ in 0..2 {
            for b in &self.elements {
                let coef = real_inner(b, &r);
                r -= b.scale(coef);
            }
        }
        let norm = hs_norm(&r);
        if norm <= self.tol {
            return false;
        }
        self.elements.push(r.unscale(norm));
        self.residuals.push(norm);
        true
    }
}

/// Dimension of the real Lie algebra generated by anti-Hermitian matrices,
/// by commutator generation and two-pass Gram–Schmidt in the real
/// Hilbert–Schmidt inner product `Re tr(A†B)`.
pub fn lie_closure_dim(
    generators: &[ComplexMatrix],
    tol: f64,
    max_elements: usize,
) -> Result<LieClosureReport> {
    let first = generators
        .first()
        .ok_or_else(|| Error::InvalidArgument("no generators".into()))?;
    let n = check_square(first)?;
    if max_elements < n * n {
        return Err(Error::InvalidArgument(format!(
            "max_elements {max_elements} is below n² = {}",
            n * n
        )));
    }
    let mut traceless = true;
    let mut normalized = Vec::with_capacity(generators.len());
    for (index, g) in generators.iter().enumerate() {
        if check_square(g)? != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: g.nrows(),
            });
        }
        let scale = operator_norm(g).max(1.0);
        let defect = (g + g.adjoint()).norm();
        if defect > 1e-10 * scale {
            return Err(Error::NotAntiHermitian { index, defect });
        }
        let norm = hs_norm(g);
        if trace(g).norm() > 1e-10 * scale {
            traceless = false;
        }
        if norm > 0.0 {
            normalized.push(g.unscale(norm));
        }
    }
    let target_dimension = if traceless { n * n - 1 } else { n * n };

    let mut basis = Basis {
        elements: Vec::new(),
        residuals: Vec::new(),
        tol,
    };
    let mut queue = VecDeque::new();
    for g in &normalized {
        if basis.try_add(g.clone()) {
            queue.push_back(basis.elements.len() - 1);
        }
    }
    let mut iterations = 0;
    while let Some(i) = queue.pop_front() {
        for g in &normalized {
            iterations += 1;
            let c = commutator(g, &basis.elements[i]);
            if basis.try_add(c) {
                if basis.elements.len() > max_elements {
                    return Err(Error::BudgetExceeded(format!(
                        "Lie basis still growing at {} elements",
                        basis.elements.len()
                    )));
                }
                queue.push_back(basis.elements.len() - 1);
            }
        }
    }
    let dimension = basis.elements.len();
    Ok(LieClosureReport {
        dimension,
        target_dimension,
        basis_residuals: basis.residuals,
        iterations,
        controllable: dimension == target_dimension,
    })
}

/// `i·H` for each Hamiltonian: drift first, then the controls.
pub fn hamiltonian_generators(
    h0: &ComplexMatrix,
    controls: &[ComplexMatrix],
) -> Vec<ComplexMatrix> {
    std::iter::once(h0).chain(controls).map(|h| h * I).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionGraph {
    /// Indices of the eigenvectors of `H₀`, eigenvalues in descending order.
    pub nodes: Vec<usize>,
    /// Pairs `(k, l)` with `k < l` coupled by some control.
    pub edges: Vec<(usize, usize)>,
    pub connected: bool,
    /// Degenerate levels or degenerate gaps of `H₀`.
    pub warnings: Vec<String>,
}

fn spectrum_warnings(values: &[f64]) -> Vec<String> {
    let n = values.len();
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;
    let mut out = Vec::new();
    for k in 0..n {
        for l in k + 1..n {
            if (values[k] - values[l]).abs() <= tol {
                out.push(format!("levels {k} and {l} are degenerate"));
            }
        }
    }
    let mut gaps = Vec::new();
    for k in 0..n {
        for l in k + 1..n {
            gaps.push((values[k] - values[l], k, l));
        }
    }
    for a in 0..gaps.len() {
        for b in a + 1..gaps.len() {
            if (gaps[a].0 - gaps[b].0).abs() <= tol {
                out.push(format!(
                    "gaps ({},{}) and ({},{}) coincide",
                    gaps[a].1, gaps[a].2, gaps[b].1, gaps[b].2
                ));
            }
        }
    }
    out
}

/// Graph on the eigenvectors `φ_k` of `H₀` with an edge wherever
/// `|⟨φ_k, H_j φ_l⟩| > threshold` for some control.
pub fn connectivity_graph(
    h0: &ComplexMatrix,
    controls: &[ComplexMatrix],
    threshold: f64,
) -> Result<TransitionGraph> {
    let n = check_square(h0)?;
    let eig = hermitian_eig(h0)?;
    let warnings = spectrum_warnings(&eig.values);
    for w in &warnings {
        warn!("drift spectrum: {w}");
    }
    let q = &eig.vectors;
    let mut adjacency = vec![vec![false; n]; n];
    for h in controls {
        if check_square(h)? != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: h.nrows(),
            });
        }
        check_hermitian(h)?;
        let m = q.adjoint() * h * q;
        for k in 0..n {
            for l in k + 1..n {
                if m[(k, l)].norm() > threshold {
                    adjacency[k][l] = true;
                    adjacency[l][k] = true;
                }
            }
        }
    }
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|k| (k + 1..n).map(move |l| (k, l)))
        .filter(|&(k, l)| adjacency[k][l])
        .collect();

    let mut seen = vec![false; n];
    let mut stack = Vec::new();
    if n > 0 {
        seen[0] = true;
        stack.push(0);
    }
    while let Some(k) = stack.pop() {
        for l in 0..n {
            if adjacency[k][l] && !seen[l] {
                seen[l] = true;
                stack.push(l);
            }
        }
    }
    Ok(TransitionGraph {
        nodes: (0..n).collect(),
        edges,
        connected: seen.iter().all(|s| *s),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag_real, from_real_rows, identity};
    use crate::random;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn sx() -> ComplexMatrix {
        from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn sz() -> ComplexMatrix {
        diag_real(&[1.0, -1.0])
    }

    /// Independent oracle: rank of the real span of all right-nested
    /// commutator words up to `depth`, by singular values.
    fn oracle_dimension(gens: &[ComplexMatrix], depth: usize) -> usize {
        let n = gens[0].nrows();
        let mut words: Vec<ComplexMatrix> = gens.to_vec();
        let mut layer = gens.to_vec();
        for _ in 1..depth {
            let mut next = Vec::new();
            for w in &layer {
                for g in gens {
                    let c = commutator(g, w);
                    let nrm = hs_norm(&c);
                    if nrm > 1e-12 {
                        next.push(c.unscale(nrm));
                    }
                }
            }
            words.extend(next.iter().cloned());
            layer = next;
        }
        let rows = 2 * n * n;
        let m = DMatrix::<f64>::from_fn(rows, words.len(), |r, col| {
            let z = words[col][r / 2];
            if r % 2 == 0 {
                z.re
            } else {
                z.im
            }
        });
        let sv = m.svd(false, false).singular_values;
        let top = sv.max();
        sv.iter().filter(|s| **s > 1e-8 * top).count()
    }

    #[test]
    fn lie_examples() {
        let r = lie_closure_dim(&[sz() * I], LIE_TOL, 16).unwrap();
        assert_eq!((r.dimension, r.controllable), (1, false));
        let r = lie_closure_dim(&[sz() * I, sx() * I], LIE_TOL, 16).unwrap();
        assert_eq!(
            (r.dimension, r.target_dimension, r.controllable),
            (3, 3, true)
        );
        let r = lie_closure_dim(&[identity(2) * I, sx() * I, sz() * I], LIE_TOL, 16).unwrap();
        assert_eq!(
            (r.dimension, r.target_dimension, r.controllable),
            (4, 4, true)
        );
    }

    #[test]
    fn lie_errors() {
        assert!(matches!(
            lie_closure_dim(&[sz() * I, sx()], LIE_TOL, 16),
            Err(Error::NotAntiHermitian { index: 1, .. })
        ));
        assert!(matches!(
            lie_closure_dim(&[sz() * I], LIE_TOL, 3),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn random_pairs_generate_su_n() {
        let mut rng = random::rng(1);
        for n in 2..=4 {
            let gens: Vec<ComplexMatrix> = (0..2)
                .map(|_| random::traceless_hermitian(n, &mut rng) * I)
                .collect();
            let r = lie_closure_dim(&gens, LIE_TOL, n * n).unwrap();
            assert_eq!(r.dimension, n * n - 1);
            assert_eq!(oracle_dimension(&gens, 6), n * n - 1);
            assert!(r.controllable);
        }
    }

    #[test]
    fn matches_oracle_on_structured_algebras() {
        // block-diagonal generators close in a proper subalgebra
        let a = from_real_rows(&[&[1.0, 0.5, 0.0], &[0.5, -1.0, 0.0], &[0.0, 0.0, 0.0]]) * I;
        let b = from_real_rows(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0]]) * I;
        let cc = from_real_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]) * I;
        let gens = vec![a, b, cc];
        let r = lie_closure_dim(&gens, LIE_TOL, 9).unwrap();
        assert_eq!(r.dimension, oracle_dimension(&gens, 6));
        assert_eq!(r.dimension, 4);
        assert!(!r.controllable);
    }

    #[test]
    fn graph_examples() {
        let h0 = diag_real(&[3.0, 1.0, 0.0]);
        let h1 = from_real_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]);
        let g = connectivity_graph(&h0, &[h1], 1e-9).unwrap();
        assert!(g.connected);
        assert_eq!(g.edges, vec![(0, 1), (1, 2)]);

        let g = connectivity_graph(&h0, &[diag_real(&[1.0, 2.0, 3.0])], 1e-9).unwrap();
        assert!(g.edges.is_empty() && !g.connected);

        let g = connectivity_graph(&diag_real(&[2.0]), &[], 1e-9).unwrap();
        assert!(g.connected);

        let not_h = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        );
        assert!(matches!(
            connectivity_graph(&not_h, &[], 1e-9),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn degenerate_drift_warns() {
        let g = connectivity_graph(&diag_real(&[1.0, 1.0, 0.0]), &[sx_embedded()], 1e-9).unwrap();
        assert!(!g.warnings.is_empty());
        let g = connectivity_graph(&diag_real(&[0.0, 1.0, 2.0]), &[], 1e-9).unwrap();
        assert!(g.warnings.iter().any(|w| w.contains("gaps")));
    }

    fn sx_embedded() -> ComplexMatrix {
        from_real_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn dimension_is_basis_independent(seed in 0u64..10_000, n in 2usize..5, diagonal in any::<bool>()) {
            let mut rng = random::rng(seed);
            let mut gens: Vec<ComplexMatrix> = (0..2)
                .map(|_| {
                    let h = random::hermitian(n, &mut rng);
                    if diagonal { ComplexMatrix::from_diagonal(&h.diagonal()) } else { h }
                })
                .map(|h| h * I)
                .collect();
            let base = lie_closure_dim(&gens, LIE_TOL, n * n).unwrap().dimension;
            gens.reverse();
            prop_assert_eq!(lie_closure_dim(&gens, LIE_TOL, n * n).unwrap().dimension, base);
            let u = random::haar_unitary(n, &mut rng);
            let conj: Vec<ComplexMatrix> = gens.iter().map(|g| &u * g * u.adjoint()).collect();
            prop_assert_eq!(lie_closure_dim(&conj, LIE_TOL, n * n).unwrap().dimension, base);
            let mut more = gens.clone();
            more.push(random::hermitian(n, &mut rng) * I);
            prop_assert!(lie_closure_dim(&more, LIE_TOL, n * n).unwrap().dimension >= base);
        }
    }
}
