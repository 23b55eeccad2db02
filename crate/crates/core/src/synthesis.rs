//! Schedules that steer `ρ₀` to any `ρ ≺ ρ₀` within a trace-norm budget.
//!
//! All work happens in the eigenbasis `f` of the noise operator `V`.
//!
//! 1. A unitary turns `ρ₀` into a state whose `f`-basis diagonal is the
//!    spectrum `x` of the target (Schur–Horn).
//! 2. Noise removes the off-diagonal entries of the leading `N × N` block.
//!    An entry `(j, k)` with `v_j ≠ v_k` decays in place. An entry with
//!    `v_j = v_k` is invisible to the noise, so a permutation first moves it
//!    to the relaxation spot `(0, m)` where `v_0 ≠ v_m`, and the inverse
//!    permutation brings it back afterwards.
//! 3. A unitary rotates the diagonal state onto the eigenvectors of the target.
//!
//! When the zero patterns of the two spectra differ, the leading block is
//! matched by [`pad_and_match`] first and the scheme runs on the padded pair.

use std::str::FromStr;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::controllability::{hamiltonian_generators, lie_closure_dim, LIE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    block_tail, diag_real, hermitian_eig, identity, permutation_matrix, trace_norm, ComplexMatrix,
    C64,
};
use crate::lindblad::{
    apply_noise, trotter_superop, verify_unitality, ControlSystem, NoiseOperator, PROPAGATION_TOL,
};
use crate::majorization::{
    majorizes, pad_and_match, schur_horn_unitary, DensityMatrix, EigenvalueSequence, DEFAULT_TOL,
};

/// Relative threshold below which two noise eigenvalues count as equal.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Largest slice count tried when realizing noise by Trotter splitting.
pub const SLICE_CAP: u64 = 1 << 16;

/// Spectral entries at or below this value count as zeros.
pub const ZERO_TOL: f64 = 1e-12;

/// Unitary steps closer than this (Frobenius) to the identity are dropped.
const IDENTITY_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Trotter,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "trotter" => Ok(Mode::Trotter),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

/// How a noise step is realized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RelaxMode {
    /// Closed-form noise semigroup.
    Exact,
    /// Alternating noisy drift and reversed free drift, starting from
    /// `slices` and doubling until the deviation is within `budget`.
    Trotter { slices: u64, budget: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StepKind {
    Unitary {
        #[serde(with = "crate::io::matrix")]
        u: ComplexMatrix,
    },
    /// Relabels the noise eigenvectors: `f_a ↦ f_{sigma[a]}`.
    Permutation {
        sigma: Vec<usize>,
    },
    NoiseRelax {
        duration: f64,
        mode: RelaxMode,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub label: String,
    pub kind: StepKind,
    /// Trace-norm error allotted to this step.
    pub budget_share: f64,
}

impl ScheduleStep {
    fn unitary(label: &str, u: ComplexMatrix, budget_share: f64) -> Self {
        ScheduleStep {
            label: label.into(),
            kind: StepKind::Unitary { u },
            budget_share,
        }
    }
}

/// Constants derived while building a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Sorted spectrum of the target.
    pub x: Vec<f64>,
    /// Sorted spectrum of the initial state.
    pub y: Vec<f64>,
    /// Smallest block meeting the tail bound, before enlarging to reach `m`.
    pub n1: usize,
    /// Precision handed to the damping stage.
    pub step2_epsilon: f64,
    /// `step2_epsilon / (12 N²)`.
    pub certificate_bound: f64,
    /// Durations of the transport rounds.
    pub relax_times: Vec<f64>,
    /// Duration of the final in-place relaxation.
    pub in_place_time: f64,
    pub degenerate_pairs: Vec<(usize, usize)>,
    /// Share reserved for approximating permutations, unused because they
    /// execute exactly.
    pub permutation_slack: f64,
    pub padding: Option<PaddingRecord>,
    pub lie_dimension: usize,
    pub lie_target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaddingRecord {
    pub block: usize,
    pub x_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
    pub scale: f64,
    pub phi: f64,
    pub fill_value: f64,
    pub fill_count: usize,
    pub k: usize,
    pub tail_x: f64,
    pub tail_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub epsilon: f64,
    pub mode: Mode,
    pub steps: Vec<ScheduleStep>,
    /// Size `N` of the block whose off-diagonals are removed.
    pub block_size: usize,
    /// Relaxation spot `(0, m)`.
    pub relax_pair: (usize, usize),
    /// Number of transport rounds.
    pub alpha: usize,
    pub padded: bool,
    /// Half-open step range of the damping stage, absent when the state was
    /// already diagonal.
    pub step2: Option<(usize, usize)>,
    /// Budget of stages that needed no step.
    pub reserved_budget: f64,
    pub provenance: Provenance,
}

impl Schedule {
    pub fn budget_total(&self) -> f64 {
        self.steps.iter().map(|s| s.budget_share).sum::<f64>() + self.reserved_budget
    }

    pub fn total_noise_time(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| match s.kind {
                StepKind::NoiseRelax { duration, .. } => duration,
                _ => 0.0,
            })
            .sum()
    }
}

fn spectral_scale(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn degenerate(a: C64, b: C64, scale: f64) -> bool {
    (a - b).norm() <= DEGENERACY_TOL * scale
}

/// Smallest `s ≥ 0` with `exp(−s|v_a − v_b|²/2) ≤ ε/(12N²)`.
pub fn relaxation_time(v_a: C64, v_b: C64, n_block: usize, epsilon: f64) -> Result<f64> {
    let gap = (v_a - v_b).norm();
    if degenerate(v_a, v_b, v_a.norm().max(v_b.norm())) {
        return Err(Error::DegeneratePair { gap });
    }
    let ratio = 12.0 * (n_block * n_block) as f64 / epsilon;
    Ok((2.0 * ratio.ln() / (gap * gap)).max(0.0))
}

/// First index `m` with `v_m ≠ v_0`.
pub fn relaxation_index(noise: &NoiseOperator) -> Result<usize> {
    let v = noise.eigvals();
    let scale = spectral_scale(v);
    (1..v.len())
        .find(|&m| !degenerate(v[0], v[m], scale))
        .ok_or(Error::NoDistinctPair)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockChoice {
    /// Block size `N = max(n1, m + 1)`.
    pub n: usize,
    /// Smallest block whose tail, and every larger block's tail, is below `ε/24`.
    pub n1: usize,
    pub m: usize,
}

/// Smallest `k` with `‖Y − Π_j Y Π_j‖₁ < tol` for all `j ≥ k`, where the
/// projections are onto leading coordinates.
pub fn minimal_block(y: &ComplexMatrix, tol: f64) -> Result<usize> {
    let n = y.nrows();
    let basis = identity(n);
    let mut n1 = n;
    for k in (1..n).rev() {
        if block_tail(y, k, &basis)? >= tol {
            break;
        }
        n1 = k;
    }
    Ok(n1)
}

fn choose_block_f(y_f: &ComplexMatrix, noise: &NoiseOperator, epsilon: f64) -> Result<BlockChoice> {
    let m = relaxation_index(noise)?;
    let n1 = minimal_block(y_f, epsilon / 24.0)?;
    Ok(BlockChoice {
        n: n1.max(m + 1),
        n1,
        m,
    })
}

/// Block size for damping `state`, whose tails are measured in the noise
/// eigenbasis, together with the relaxation index.
pub fn choose_block(
    state: &DensityMatrix,
    noise: &NoiseOperator,
    epsilon: f64,
) -> Result<BlockChoice> {
    if state.dim() != noise.dim() {
        return Err(Error::DimensionMismatch {
            expected: noise.dim(),
            found: state.dim(),
        });
    }
    choose_block_f(&noise.to_eigenbasis(state.matrix()), noise, epsilon)
}

/// Transport rounds and in-place relaxation for one damping stage.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxPlan {
    /// `(σ_l, s_l)`: conjugate by `σ_l`, relax for `s_l`, conjugate back.
    pub rounds: Vec<(Vec<usize>, f64)>,
    pub degenerate_pairs: Vec<(usize, usize)>,
    /// Longest in-place relaxation time over non-degenerate pairs.
    pub in_place: f64,
}

/// Permutation of `0..n` sending `j ↦ 0` and `k ↦ m`, for `j < k`.
fn transport_permutation(j: usize, k: usize, m: usize, n: usize) -> Vec<usize> {
    let mut sigma: Vec<usize> = (0..n).collect();
    // (j 0) followed by (k m); k is neither 0 nor j, so the first swap leaves it.
    let swap = |s: &mut Vec<usize>, a: usize, b: usize| {
        for e in s.iter_mut() {
            if *e == a {
                *e = b;
            } else if *e == b {
                *e = a;
            }
        }
    };
    swap(&mut sigma, j, 0);
    swap(&mut sigma, k, m);
    sigma
}

/// Relaxation plan for the leading `n_block` eigenvectors of `V` with the
/// relaxation spot `(0, m)`. Degenerate pairs are visited in lexicographic order.
pub fn permutation_plan(
    noise: &NoiseOperator,
    n_block: usize,
    m: usize,
    epsilon: f64,
) -> Result<RelaxPlan> {
    let v = noise.eigvals();
    let n = v.len();
    if n_block > n {
        return Err(Error::BadRank { k: n_block, n });
    }
    let mut plan = RelaxPlan {
        rounds: Vec::new(),
        degenerate_pairs: Vec::new(),
        in_place: 0.0,
    };
    if n_block <= 1 {
        return Ok(plan);
    }
    if m == 0 || m >= n_block {
        return Err(Error::InvalidArgument(format!(
            "relaxation index {m} outside the block of size {n_block}"
        )));
    }
    let scale = spectral_scale(v);
    if degenerate(v[0], v[m], scale) {
        return Err(Error::DegeneratePair {
            gap: (v[0] - v[m]).norm(),
        });
    }
    let spot_time = relaxation_time(v[0], v[m], n_block, epsilon)?;
    for j in 0..n_block {
        for k in j + 1..n_block {
            if degenerate(v[j], v[k], scale) {
                plan.degenerate_pairs.push((j, k));
                plan.rounds
                    .push((transport_permutation(j, k, m, n), spot_time));
            } else {
                plan.in_place = plan
                    .in_place
                    .max(relaxation_time(v[j], v[k], n_block, epsilon)?);
            }
        }
    }
    Ok(plan)
}

/// Largest `|Y_jk|`, `j ≠ k < n_block`.
pub fn max_off_diagonal(y: &ComplexMatrix, n_block: usize) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..n_block {
        for k in 0..n_block {
            if j != k {
                worst = worst.max(y[(j, k)].norm());
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Before,
    Damping,
    After,
}

struct Damping {
    steps: Vec<ScheduleStep>,
    block: BlockChoice,
    plan: RelaxPlan,
    epsilon: f64,
}

/// Damping stage for the `f`-basis state `y_f` at precision `epsilon`, or
/// `None` when `y_f` is already diagonal.
fn damping_stage(
    y_f: &ComplexMatrix,
    noise: &NoiseOperator,
    epsilon: f64,
    mode: Mode,
) -> Result<Option<Damping>> {
    let block = choose_block_f(y_f, noise, epsilon)?;
    if max_off_diagonal(y_f, y_f.nrows()) <= ZERO_TOL {
        return Ok(None);
    }
    let plan = permutation_plan(noise, block.n, block.m, epsilon)?;
    let relax_count = plan.rounds.len() + usize::from(plan.in_place > 0.0);
    let relax_count = relax_count.max(1);
    let damping_share = epsilon / 6.0 / relax_count as f64;
    let trotter_share = epsilon / 12.0 / relax_count as f64;
    let relax = |duration: f64| {
        let (mode, share) = match mode {
            Mode::Exact => (RelaxMode::Exact, damping_share),
            Mode::Trotter => (
                RelaxMode::Trotter {
                    slices: 1,
                    budget: trotter_share,
                },
                damping_share + trotter_share,
            ),
        };
        ScheduleStep {
            label: String::new(),
            kind: StepKind::NoiseRelax { duration, mode },
            budget_share: share,
        }
    };
    let mut steps = Vec::new();
    for (l, (sigma, s)) in plan.rounds.iter().enumerate() {
        let (j, k) = plan.degenerate_pairs[l];
        let inverse = crate::linalg::invert_permutation(sigma);
        steps.push(ScheduleStep {
            label: format!("transport ({j},{k})"),
            kind: StepKind::Permutation {
                sigma: sigma.clone(),
            },
            budget_share: 0.0,
        });
        let mut r = relax(*s);
        r.label = format!("relax ({j},{k})");
        steps.push(r);
        steps.push(ScheduleStep {
            label: format!("restore ({j},{k})"),
            kind: StepKind::Permutation { sigma: inverse },
            budget_share: 0.0,
        });
    }
    if plan.in_place > 0.0 {
        let mut r = relax(plan.in_place);
        r.label = "relax in place".into();
        steps.push(r);
    }
    Ok(Some(Damping {
        steps,
        block,
        plan,
        epsilon,
    }))
}

fn is_identity(u: &ComplexMatrix) -> bool {
    (u - identity(u.nrows())).norm() <= IDENTITY_TOL
}

/// Merges adjacent unitaries and drops those equal to the identity.
fn compact(
    sections: Vec<(ScheduleStep, Section)>,
) -> (Vec<ScheduleStep>, Option<(usize, usize)>, f64) {
    let mut merged: Vec<(ScheduleStep, Section)> = Vec::new();
    for (step, section) in sections {
        if let (Some((last, last_section)), StepKind::Unitary { u }) =
            (merged.last_mut(), &step.kind)
        {
            if let StepKind::Unitary { u: prev } = &mut last.kind {
                if *last_section == section
                    || section != Section::Damping && *last_section != Section::Damping
                {
                    *prev = u * &*prev;
                    last.budget_share += step.budget_share;
                    last.label = format!("{}+{}", last.label, step.label);
                    continue;
                }
            }
        }
        merged.push((step, section));
    }
    let mut reserved = 0.0;
    let mut out = Vec::new();
    let mut range: Option<(usize, usize)> = None;
    for (step, section) in merged {
        if let StepKind::Unitary { u } = &step.kind {
            if is_identity(u) {
                reserved += step.budget_share;
                continue;
            }
        }
        if section == Section::Damping {
            let idx = out.len();
            range = Some(range.map_or((idx, idx + 1), |(a, _)| (a, idx + 1)));
        }
        out.push(step);
    }
    (out, range, reserved)
}

fn zero_count(v: &[f64]) -> usize {
    v.iter().filter(|&&e| e <= ZERO_TOL).count()
}

fn tail(v: &[f64], from: usize) -> f64 {
    v[from..].iter().sum()
}

fn embed_unitary(u: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let mut out = identity(n);
    out.view_mut((0, 0), (u.nrows(), u.ncols())).copy_from(u);
    out
}

fn schur_horn_or_identity(x: &[f64], y: &[f64]) -> Result<ComplexMatrix> {
    if x.iter().zip(y).all(|(a, b)| (a - b).abs() <= ZERO_TOL) {
        return Ok(identity(x.len()));
    }
    schur_horn_unitary(
        &EigenvalueSequence::new(x.to_vec())?,
        &EigenvalueSequence::new(y.to_vec())?,
    )
}

/// Builds a schedule steering `rho0` to within `epsilon` of `rho_target`.
pub fn synthesize(
    rho0: &DensityMatrix,
    rho_target: &DensityMatrix,
    system: &ControlSystem,
    epsilon: f64,
    mode: Mode,
) -> Result<Schedule> {
    let n = system.dim();
    for d in [rho0.dim(), rho_target.dim()] {
        if d != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: d,
            });
        }
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let e0 = rho0.eig();
    let et = rho_target.eig();
    let y: Vec<f64> = e0.values.iter().map(|v| v.max(0.0)).collect();
    let x: Vec<f64> = et.values.iter().map(|v| v.max(0.0)).collect();
    if !majorizes(
        &EigenvalueSequence::new(x.clone())?,
        &EigenvalueSequence::new(y.clone())?,
        DEFAULT_TOL,
    ) {
        return Err(Error::NotMajorized(
            "target spectrum is not majorized by the initial spectrum".into(),
        ));
    }
    let (unital, defect) = verify_unitality(system.noise.v());
    if !unital {
        return Err(Error::NoiseNotUnital { defect });
    }
    let lie = lie_closure_dim(
        &hamiltonian_generators(&system.h0, &system.controls),
        LIE_TOL,
        n * n,
    )?;
    if !lie.controllable {
        return Err(Error::NotControllable {
            dimension: lie.dimension,
            target: lie.target_dimension,
        });
    }
    relaxation_index(&system.noise)?;

    let noise = &system.noise;
    let f = noise.eigvecs();
    let (q0, qt) = (&e0.vectors, &et.vectors);
    let padded = zero_count(&x) != zero_count(&y);
    let mut sections: Vec<(ScheduleStep, Section)> = Vec::new();
    let (damping, padding) = if !padded {
        let u_f = schur_horn_or_identity(&x, &y)?;
        let y_f = &u_f * diag_real(&y) * u_f.adjoint();
        let damping = damping_stage(&y_f, noise, epsilon, mode)?;
        sections.push((
            ScheduleStep::unitary("rotate", f * &u_f * q0.adjoint(), epsilon / 3.0),
            Section::Before,
        ));
        if let Some(d) = &damping {
            sections.extend(d.steps.iter().cloned().map(|s| (s, Section::Damping)));
        }
        sections.push((
            ScheduleStep::unitary("align", qt * f.adjoint(), epsilon / 3.0),
            Section::After,
        ));
        (damping, None)
    } else {
        let block = (1..=n)
            .find(|&k| tail(&x, k) < epsilon / 12.0 && tail(&y, k) < epsilon / 12.0)
            .unwrap_or(n);
        let pair = pad_and_match(
            &EigenvalueSequence::new(x.clone())?,
            &EigenvalueSequence::new(y.clone())?,
            block,
        )?;
        let len = pair.x_hat.len();
        let x_hat = pair.x_hat.entries().to_vec();
        let y_hat = pair.y_hat.padded(len);
        let eps_in = epsilon / 6.0;
        let u_f = embed_unitary(&schur_horn_or_identity(&x_hat, &y_hat)?, n);
        let y_f = &u_f * diag_real(&y) * u_f.adjoint();
        let damping = damping_stage(&y_f, noise, eps_in, mode)?;
        sections.push((
            ScheduleStep::unitary("pad in", f * q0.adjoint(), epsilon / 4.0),
            Section::Before,
        ));
        sections.push((
            ScheduleStep::unitary("rotate", f * &u_f * f.adjoint(), eps_in / 3.0),
            Section::Before,
        ));
        if let Some(d) = &damping {
            sections.extend(d.steps.iter().cloned().map(|s| (s, Section::Damping)));
        }
        sections.push((
            ScheduleStep::unitary("pad out", qt * f.adjoint(), epsilon / 4.0),
            Section::After,
        ));
        let record = PaddingRecord {
            block,
            x_hat,
            y_hat,
            scale: pair.scale,
            phi: pair.phi,
            fill_value: pair.fill_value,
            fill_count: pair.fill_count,
            k: pair.k,
            tail_x: tail(&x, block),
            tail_y: tail(&y, block),
        };
        debug!("padded pair {record:?}");
        (damping, Some(record))
    };

    let (steps, step2, reserved_budget) = compact(sections);
    let m = relaxation_index(noise)?;
    let (block, plan, eps2) = match damping {
        Some(d) => (d.block, d.plan, d.epsilon),
        None => {
            let eps2 = if padded { epsilon / 6.0 } else { epsilon };
            let block = BlockChoice { n: m + 1, n1: 1, m };
            (
                block,
                RelaxPlan {
                    rounds: vec![],
                    degenerate_pairs: vec![],
                    in_place: 0.0,
                },
                eps2,
            )
        }
    };
    let provenance = Provenance {
        x,
        y,
        n1: block.n1,
        step2_epsilon: eps2,
        certificate_bound: eps2 / (12.0 * (block.n * block.n) as f64),
        relax_times: plan.rounds.iter().map(|r| r.1).collect(),
        in_place_time: plan.in_place,
        degenerate_pairs: plan.degenerate_pairs.clone(),
        permutation_slack: eps2 / 12.0,
        padding,
        lie_dimension: lie.dimension,
        lie_target: lie.target_dimension,
    };
    info!(
        "schedule: {} steps, N = {}, m = {}, alpha = {}, padded = {padded}",
        steps.len(),
        block.n,
        block.m,
        plan.rounds.len()
    );
    Ok(Schedule {
        epsilon,
        mode,
        steps,
        block_size: block.n,
        relax_pair: (0, block.m),
        alpha: plan.rounds.len(),
        padded,
        step2,
        reserved_budget,
        provenance,
    })
}

/// States along an execution and the measured realization error of each step.
#[derive(Debug, Clone)]
pub struct ExecutionTrace {
    /// `states[0]` is the input, `states[i + 1]` the state after step `i`.
    pub states: Vec<ComplexMatrix>,
    pub realization_errors: Vec<f64>,
    pub slices_used: Vec<Option<u64>>,
}

fn trotter_relax(
    x: &ComplexMatrix,
    system: &ControlSystem,
    t: f64,
    start: u64,
    budget: f64,
) -> Result<(ComplexMatrix, f64, u64)> {
    let exact = apply_noise(x, &system.noise, t);
    let mut slices = start.max(1);
    loop {
        let out = trotter_superop(system, t, slices)?.apply(x);
        let deviation = trace_norm(&(&out - &exact));
        if deviation <= budget {
            return Ok((out, deviation, slices));
        }
        if slices >= SLICE_CAP {
            return Err(Error::BudgetExceeded(format!(
                "Trotter deviation {deviation:.3e} above {budget:.3e} at {slices} slices"
            )));
        }
        slices *= 2;
    }
}

/// Runs `schedule` from `rho0`, keeping every intermediate state.
pub fn execute_traced(
    schedule: &Schedule,
    rho0: &DensityMatrix,
    system: &ControlSystem,
) -> Result<ExecutionTrace> {
    let n = system.dim();
    if rho0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho0.dim(),
        });
    }
    let f = system.noise.eigvecs();
    let mut current = rho0.matrix().clone();
    let mut trace = ExecutionTrace {
        states: vec![current.clone()],
        realization_errors: vec![],
        slices_used: vec![],
    };
    for step in &schedule.steps {
        let (next, err, slices) = match &step.kind {
            StepKind::Unitary { u } => {
                if u.nrows() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: u.nrows(),
                    });
                }
                (u * &current * u.adjoint(), 0.0, None)
            }
            StepKind::Permutation { sigma } => {
                if sigma.len() != n || !crate::linalg::is_permutation(sigma) {
                    return Err(Error::InvalidArgument(format!(
                        "invalid permutation {sigma:?}"
                    )));
                }
                let u = f * permutation_matrix(sigma) * f.adjoint();
                (&u * &current * u.adjoint(), 0.0, None)
            }
            StepKind::NoiseRelax { duration, mode } => {
                if *duration < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "negative duration {duration}"
                    )));
                }
                match mode {
                    RelaxMode::Exact => {
                        (apply_noise(&current, &system.noise, *duration), 0.0, None)
                    }
                    RelaxMode::Trotter { slices, budget } => {
                        let (out, dev, used) =
                            trotter_relax(&current, system, *duration, *slices, *budget)?;
                        (out, dev, Some(used))
                    }
                }
            }
        };
        current = next;
        trace.states.push(current.clone());
        trace.realization_errors.push(err);
        trace.slices_used.push(slices);
    }
    Ok(trace)
}

/// Final state of `schedule` applied to `rho0`.
pub fn execute(
    schedule: &Schedule,
    rho0: &DensityMatrix,
    system: &ControlSystem,
) -> Result<DensityMatrix> {
    let trace = execute_traced(schedule, rho0, system)?;
    let last = trace
        .states
        .into_iter()
        .next_back()
        .expect("trace holds the input state");
    DensityMatrix::with_tolerance(last, PROPAGATION_TOL)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// `‖ρ_target − ρ_F‖₁`.
    pub achieved_error: f64,
    /// Measured realization error per step.
    pub per_step_errors: Vec<f64>,
    pub budget_satisfied: bool,
    pub majorization_chain_ok: bool,
    /// Sum of all budget shares, including reserved ones.
    pub budget_total: f64,
    /// Largest off-diagonal entry of the damped block after the damping stage.
    pub off_diagonal_max: Option<f64>,
    pub certificate_bound: Option<f64>,
    pub slices_used: Vec<Option<u64>>,
}

fn clamped_spectrum(m: &ComplexMatrix) -> Result<EigenvalueSequence> {
    let eig = hermitian_eig(&(m + m.adjoint()).scale(0.5))?;
    EigenvalueSequence::new(eig.values.iter().map(|v| v.max(0.0)).collect())
}

/// Executes `schedule` and measures how well it reaches `rho_target`.
pub fn verify(
    schedule: &Schedule,
    rho0: &DensityMatrix,
    rho_target: &DensityMatrix,
    system: &ControlSystem,
) -> Result<VerificationReport> {
    if rho_target.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: rho_target.dim(),
        });
    }
    let trace = execute_traced(schedule, rho0, system)?;
    let last = trace.states.last().expect("trace holds the input state");
    let achieved_error = trace_norm(&(rho_target.matrix() - last));
    let mut chain_ok = true;
    for w in trace.states.windows(2) {
        chain_ok &= majorizes(&clamped_spectrum(&w[1])?, &clamped_spectrum(&w[0])?, 1e-8);
    }
    let (off_diagonal_max, certificate_bound) = match schedule.step2 {
        Some((_, end)) if end < trace.states.len() => {
            let y = system.noise.to_eigenbasis(&trace.states[end]);
            (
                Some(max_off_diagonal(&y, schedule.block_size)),
                Some(schedule.provenance.certificate_bound),
            )
        }
        _ => (None, None),
    };
    Ok(VerificationReport {
        achieved_error,
        per_step_errors: trace.realization_errors,
        budget_satisfied: achieved_error < schedule.epsilon,
        majorization_chain_ok: chain_ok,
        budget_total: schedule.budget_total(),
        off_diagonal_max,
        certificate_bound,
        slices_used: trace.slices_used,
    })
}
