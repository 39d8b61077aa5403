//! Anchor-correspondence solver.
//!
//! Anchors learned independently per view carry no shared column order, so
//! two anchor graphs `Z₁`, `Z₂` over the same samples cannot be fused
//! directly. This module recovers the correspondence as a relaxed quadratic
//! assignment problem
//!
//! ```text
//! max_P  Tr(K·P + λ·S₁ᵀ·Pᵀ·S₂·P)      K = Z₁ᵀZ₂, Sᵢ = ZᵢᵀZᵢ
//! s.t.   P·1 = 1, Pᵀ·1 = 1, P ≥ 0
//! ```
//!
//! solved by a projected fixed-point iteration
//! `P ← (1−α)·P + α·Γ(Kᵀ + 2λ·S₂·P·S₁ᵀ)`, where `Γ` projects onto the
//! doubly-stochastic polytope by alternating a closed-form affine
//! projection (unit row/column sums) with entrywise clipping at zero.
//! The relaxed plan is rounded to a hard permutation by optimal linear
//! assignment.
//!
//! Entry `P[j][i] = 1` means: anchor `j` of the second view corresponds to
//! anchor slot `i` of the first view, so `Z₂·P` is column-aligned with
//! `Z₁`.
//!
//! `λ = +∞` (the structure-only setting) is implemented by dropping the
//! feature term and giving the structure term unit weight, since the
//! projection is not scale-invariant.

use crate::anchor_graph::AnchorGraph;
use crate::numerics::{linear_assignment_max, AssignmentResult, DenseMatrix};
use crate::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_FP_TOL: f64 = 1e-7;
pub const DEFAULT_FP_MAX_ITER: usize = 500;
pub const DEFAULT_DS_TOL: f64 = 1e-9;
pub const DEFAULT_DS_MAX_ITER: usize = 1000;

/// Cross-view anchor similarity `K = Z₁ᵀ·Z₂` (m×m); entries lie in `[0, n]`
/// because anchor-graph entries are nonnegative with unit row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureKernel {
    kernel: DenseMatrix,
}

impl FeatureKernel {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.kernel
    }
}

/// Within-view anchor structure `S = ZᵀZ` (m×m): symmetric positive
/// semidefinite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureGraph {
    structure: DenseMatrix,
}

impl StructureGraph {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.structure
    }
}

/// Result of one view-pair alignment: the relaxed doubly-stochastic plan,
/// its rounding to a hard permutation, the QAP objective at the rounded
/// solution, and fixed-point iteration diagnostics.
#[derive(Debug, Clone)]
pub struct CorrespondencePlan {
    pub relaxed: DenseMatrix,
    pub hard: AssignmentResult,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl CorrespondencePlan {
    /// The hard permutation as a matrix `P` with `P[j][assignment[j]] = 1`,
    /// ready to right-multiply onto the second view's anchor graph.
    pub fn permutation_matrix(&self) -> DenseMatrix {
        self.hard.to_permutation_matrix()
    }
}

/// Fixed-point step norms `‖P⁽ᵗ⁺¹⁾ − P⁽ᵗ⁾‖_F`, one per iteration; exposed
/// for convergence-rate diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignTrace {
    pub step_norms: Vec<f64>,
}

/// Parameters of the relaxed QAP solver. `..Default::default()` fills the
/// documented defaults (λ = 1, α = 0.5, fp_tol = 1e-7, fp_max_iter = 500,
/// ds_tol = 1e-9, ds_max_iter = 1000).
#[derive(Debug, Clone, PartialEq)]
pub struct AlignConfig {
    /// Structure weight λ ≥ 0; `f64::INFINITY` selects the structure-only
    /// objective.
    pub lambda: f64,
    /// Fixed-point step size α in [0, 1].
    pub alpha: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub ds_tol: f64,
    pub ds_max_iter: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            alpha: DEFAULT_ALPHA,
            fp_tol: DEFAULT_FP_TOL,
            fp_max_iter: DEFAULT_FP_MAX_ITER,
            ds_tol: DEFAULT_DS_TOL,
            ds_max_iter: DEFAULT_DS_MAX_ITER,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_nan() || self.lambda < 0.0 {
            return Err(Error::invalid(format!(
                "align: lambda must be >= 0 (or +inf), got {}",
                self.lambda
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!(
                "align: alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.fp_tol > 0.0) || !(self.ds_tol > 0.0) {
            return Err(Error::invalid("align: tolerances must be positive"));
        }
        if self.fp_max_iter == 0 || self.ds_max_iter == 0 {
            return Err(Error::invalid("align: iteration caps must be at least 1"));
        }
        Ok(())
    }
}

/// Weights of the feature and structure terms: `(1, λ)` normally,
/// `(0, 1)` for the structure-only `λ = +∞` setting.
fn effective_weights(lambda: f64) -> (f64, f64) {
    if lambda.is_infinite() {
        (0.0, 1.0)
    } else {
        (1.0, lambda)
    }
}

/// `K = Z₁ᵀ·Z₂`, the cross-view anchor similarity.
pub fn feature_kernel(z1: &AnchorGraph, z2: &AnchorGraph) -> Result<FeatureKernel> {
    check_same_shape(z1, z2)?;
    Ok(FeatureKernel {
        kernel: z1.matrix().transposed_matmul(z2.matrix())?,
    })
}

/// `S = Zᵀ·Z`, the within-view anchor structure.
pub fn structure_graph(z: &AnchorGraph) -> StructureGraph {
    StructureGraph {
        structure: z
            .matrix()
            .transposed_matmul(z.matrix())
            .expect("Z against itself always agrees"),
    }
}

/// Closed-form Euclidean projection of a square matrix onto the affine set
/// `{Q : Q·1 = 1, Qᵀ·1 = 1}`: with row sums `r`, column sums `c`, and total
/// `s`, the projection is
/// `Q + (1/m)(1−r)·1ᵀ + (1/m)·1·(1−c)ᵀ − ((m−s)/m²)·1·1ᵀ`.
pub fn ds_affine_project(q: &DenseMatrix) -> Result<DenseMatrix> {
    let m = q.rows();
    if q.cols() != m || m == 0 {
        return Err(Error::shape(
            "ds_affine_project",
            "non-empty square matrix",
            format!("{}x{}", q.rows(), q.cols()),
        ));
    }
    if !q.all_finite() {
        return Err(Error::NonFinite("ds_affine_project input"));
    }
    let r = q.row_sums();
    let c = q.col_sums();
    let s: f64 = r.iter().sum();
    let mf = m as f64;
    let shift = (mf - s) / (mf * mf);
    let mut out = q.clone();
    for i in 0..m {
        let row_adj = (1.0 - r[i]) / mf;
        for j in 0..m {
            let v = out.get(i, j) + row_adj + (1.0 - c[j]) / mf - shift;
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Outcome of the alternating doubly-stochastic projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionOutcome {
    pub matrix: DenseMatrix,
    pub converged: bool,
    pub iterations: usize,
}

/// Project onto the doubly-stochastic polytope by alternating the affine
/// projection with entrywise clipping at zero, stopping when one full
/// alternation moves the iterate by less than `tol` in Frobenius norm (or
/// at `max_iter`). Always ends on the clipping step, so the output is
/// exactly nonnegative; at convergence row and column sums are within
/// `tol·m` of 1.
pub fn ds_project(q: &DenseMatrix, tol: f64, max_iter: usize) -> Result<ProjectionOutcome> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::invalid(
            "ds_project: tol must be positive and max_iter at least 1",
        ));
    }
    let mut current = ds_affine_project(q)?;
    clip_nonnegative(&mut current);
    let mut converged = false;
    let mut iterations = 1;
    for _ in 1..max_iter {
        let mut next = ds_affine_project(&current)?;
        clip_nonnegative(&mut next);
        iterations += 1;
        let change = next.sub(&current)?.frobenius_norm();
        current = next;
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(ProjectionOutcome {
        matrix: current,
        converged,
        iterations,
    })
}

fn clip_nonnegative(q: &mut DenseMatrix) {
    for i in 0..q.rows() {
        for v in q.row_mut(i) {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
}

/// The Eq.-(8) objective `Tr(K·P) + λ·Tr(S₁ᵀ·Pᵀ·S₂·P)` for any feasible
/// plan `P` (relaxed or hard). `λ = +∞` scores the structure term alone.
pub fn qap_objective(
    z1: &AnchorGraph,
    z2: &AnchorGraph,
    plan: &DenseMatrix,
    lambda: f64,
) -> Result<f64> {
    check_same_shape(z1, z2)?;
    let m = z1.anchor_count();
    if plan.rows() != m || plan.cols() != m {
        return Err(Error::shape(
            "qap_objective",
            format!("{m}x{m} plan"),
            format!("{}x{}", plan.rows(), plan.cols()),
        ));
    }
    let (feature_w, structure_w) = effective_weights(lambda);
    let k = feature_kernel(z1, z2)?;
    let s1 = structure_graph(z1);
    let s2 = structure_graph(z2);
    let feature_term = k.matrix().matmul(plan)?.trace();
    let structure_term = s1
        .matrix()
        .transpose()
        .matmul(&plan.transpose())?
        .matmul(s2.matrix())?
        .matmul(plan)?
        .trace();
    Ok(feature_w * feature_term + structure_w * structure_term)
}

/// Solve the relaxed QAP for the correspondence between `z2`'s and `z1`'s
/// anchors and round it to a hard permutation.
pub fn align(z1: &AnchorGraph, z2: &AnchorGraph, config: &AlignConfig) -> Result<CorrespondencePlan> {
    Ok(align_with_trace(z1, z2, config)?.0)
}

/// [`align`], additionally returning the per-iteration step norms for
/// convergence-rate diagnostics.
pub fn align_with_trace(
    z1: &AnchorGraph,
    z2: &AnchorGraph,
    config: &AlignConfig,
) -> Result<(CorrespondencePlan, AlignTrace)> {
    check_same_shape(z1, z2)?;
    config.validate()?;
    let m = z1.anchor_count();
    let (feature_w, structure_w) = effective_weights(config.lambda);

    let kernel_t = feature_kernel(z1, z2)?.kernel.transpose().scale(feature_w);
    let s1 = structure_graph(z1).structure;
    let s2 = structure_graph(z2).structure;

    // Barycenter start: permutation-symmetric, no anchor-order bias.
    let mut plan = DenseMatrix::filled(m, m, 1.0 / m as f64);
    let mut step_norms = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..config.fp_max_iter {
        iterations += 1;
        // Gradient of the objective at the current plan.
        let gradient = kernel_t.add(
            &s2.matmul(&plan)?
                .matmul_transposed(&s1)?
                .scale(2.0 * structure_w),
        )?;
        let projected = ds_project(&gradient, config.ds_tol, config.ds_max_iter)?;
        if !projected.converged {
            log::debug!(
                "align: doubly-stochastic projection hit its iteration cap at \
                 fixed-point step {iterations}"
            );
        }
        let next = plan
            .scale(1.0 - config.alpha)
            .add(&projected.matrix.scale(config.alpha))?;
        let step = next.sub(&plan)?.frobenius_norm();
        step_norms.push(step);
        plan = next;
        if step < config.fp_tol {
            converged = true;
            break;
        }
    }

    let hard = round_permutation(&plan)?;
    let objective = qap_objective(z1, z2, &hard.to_permutation_matrix(), config.lambda)?;
    Ok((
        CorrespondencePlan {
            relaxed: plan,
            hard,
            objective,
            iterations,
            converged,
        },
        AlignTrace { step_norms },
    ))
}

/// Round a relaxed plan to the hard permutation with maximum total relaxed
/// mass (optimal linear assignment; ties broken lexicographically).
pub fn round_permutation(relaxed: &DenseMatrix) -> Result<AssignmentResult> {
    linear_assignment_max(relaxed)
}

/// Exhaustively maximize the QAP objective over all m! permutations.
/// Feasible only for small m; guarded at m ≤ 8.
pub fn brute_force_align(
    z1: &AnchorGraph,
    z2: &AnchorGraph,
    lambda: f64,
) -> Result<AssignmentResult> {
    check_same_shape(z1, z2)?;
    let m = z1.anchor_count();
    if m > 8 {
        return Err(Error::invalid(format!(
            "brute_force_align: m = {m} exceeds the m <= 8 guard"
        )));
    }
    let (feature_w, structure_w) = effective_weights(lambda);
    let k = feature_kernel(z1, z2)?.kernel;
    let s1 = structure_graph(z1).structure;
    let s2 = structure_graph(z2).structure;

    // For a permutation σ (anchor j of view 2 -> slot σ(j)):
    //   Tr(K·P)           = Σ_j K[σ(j), j]
    //   Tr(S₁ᵀ·Pᵀ·S₂·P)   = Σ_{i,j} S₁[σ(i), σ(j)] · S₂[i, j]
    let score_of = |sigma: &[usize]| -> f64 {
        let feature: f64 = sigma.iter().enumerate().map(|(j, &sj)| k.get(sj, j)).sum();
        let mut structure = 0.0;
        for (i, &si) in sigma.iter().enumerate() {
            for (j, &sj) in sigma.iter().enumerate() {
                structure += s1.get(si, sj) * s2.get(i, j);
            }
        }
        feature_w * feature + structure_w * structure
    };

    // Lexicographic enumeration; strict improvement keeps the first (and
    // thus lexicographically smallest) argmax on ties.
    let mut sigma: Vec<usize> = (0..m).collect();
    let mut best = sigma.clone();
    let mut best_score = score_of(&sigma);
    while next_permutation(&mut sigma) {
        let score = score_of(&sigma);
        if score > best_score {
            best_score = score;
            best = sigma.clone();
        }
    }
    Ok(AssignmentResult {
        assignment: best,
        total_score: best_score,
    })
}

/// Advance to the next lexicographic permutation; false once wrapped.
fn next_permutation(seq: &mut [usize]) -> bool {
    if seq.len() < 2 {
        return false;
    }
    let mut i = seq.len() - 1;
    while i > 0 && seq[i - 1] >= seq[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = seq.len() - 1;
    while seq[j] <= seq[i - 1] {
        j -= 1;
    }
    seq.swap(i - 1, j);
    seq[i..].reverse();
    true
}

fn check_same_shape(z1: &AnchorGraph, z2: &AnchorGraph) -> Result<()> {
    if z1.n() != z2.n() || z1.anchor_count() != z2.anchor_count() {
        return Err(Error::shape(
            "alignment",
            format!("two {}x{} anchor graphs", z1.n(), z1.anchor_count()),
            format!("{}x{}", z2.n(), z2.anchor_count()),
        ));
    }
    Ok(())
}
