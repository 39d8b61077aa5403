//! Per-view anchor and anchor-graph learning.
//!
//! For one view `X` (n×d), alternates two exact sub-steps to minimize
//! `‖X − Z·A‖_F² + β‖Z‖_F²` subject to `Z ≥ 0`, `Z·1 = 1`, and (when
//! m ≤ d) `A·Aᵀ = I`:
//!
//! 1. graph step: each row of `Z` is the simplex projection of
//!    `(X·Aᵀ)_{j,:} / (1+β)`, which is the row-wise global optimum when `A`
//!    has orthonormal rows;
//! 2. anchor step: `A = U·Vᵀ` from the SVD of `B = Zᵀ·X` (orthogonal
//!    Procrustes), or ridge least squares `(ZᵀZ + εI)⁻¹ZᵀX` when the
//!    orthogonality constraint is infeasible (m > d).
//!
//! Both sub-steps are global optima of their sub-problems in the orthogonal
//! regime, so the objective trace is monotone non-increasing there.

use crate::numerics::{
    complete_orthonormal_rows, kmeans_fit, project_simplex, truncated_svd, DenseMatrix,
};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Ridge regularizer for the unconstrained anchor update.
const RIDGE_EPS: f64 = 1e-8;
/// Row-sum tolerance for anchor-graph validation.
const ROW_SUM_TOL: f64 = 1e-9;

pub const DEFAULT_BETA: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 50;

/// One view's data matrix (n samples × d features).
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMatrix {
    data: DenseMatrix,
    view_index: usize,
}

impl ViewMatrix {
    pub fn new(data: DenseMatrix, view_index: usize) -> Result<Self> {
        if data.rows() == 0 || data.cols() == 0 {
            return Err(Error::invalid(format!(
                "view {view_index}: data must be non-empty, got {}x{}",
                data.rows(),
                data.cols()
            )));
        }
        if !data.all_finite() {
            return Err(Error::NonFinite("view data"));
        }
        Ok(Self { data, view_index })
    }

    pub fn data(&self) -> &DenseMatrix {
        &self.data
    }

    pub fn view_index(&self) -> usize {
        self.view_index
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.data.rows()
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.data.cols()
    }
}

/// A set of m anchor points in the view's feature space (m×d).
///
/// `orthogonal` records whether the rows are kept orthonormal; it is false
/// when orthogonality was requested but infeasible (m > d).
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    anchors: DenseMatrix,
    orthogonal: bool,
}

impl AnchorSet {
    pub fn new(anchors: DenseMatrix, orthogonal: bool) -> Result<Self> {
        if anchors.rows() == 0 || anchors.cols() == 0 {
            return Err(Error::invalid("anchor set must be non-empty"));
        }
        if !anchors.all_finite() {
            return Err(Error::NonFinite("anchors"));
        }
        let set = Self {
            anchors,
            orthogonal,
        };
        if orthogonal {
            let defect = set.orthogonality_defect();
            if defect > 1e-6 {
                return Err(Error::invalid(format!(
                    "anchors marked orthogonal but ‖A·Aᵀ − I‖_∞ = {defect:.3e}"
                )));
            }
        }
        Ok(set)
    }

    pub fn anchors(&self) -> &DenseMatrix {
        &self.anchors
    }

    pub fn orthogonal(&self) -> bool {
        self.orthogonal
    }

    pub fn count(&self) -> usize {
        self.anchors.rows()
    }

    pub fn dim(&self) -> usize {
        self.anchors.cols()
    }

    /// ‖A·Aᵀ − I‖_∞, the violation of the orthonormal-rows constraint.
    pub fn orthogonality_defect(&self) -> f64 {
        let gram = self
            .anchors
            .matmul_transposed(&self.anchors)
            .expect("A and A always share a column count");
        let mut worst = 0.0f64;
        for i in 0..gram.rows() {
            for j in 0..gram.cols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram.get(i, j) - target).abs());
            }
        }
        worst
    }
}

/// Row-stochastic sample-to-anchor similarity matrix (n×m): entries are
/// nonnegative and every row sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorGraph {
    graph: DenseMatrix,
}

impl AnchorGraph {
    pub fn new(graph: DenseMatrix) -> Result<Self> {
        if graph.rows() == 0 || graph.cols() == 0 {
            return Err(Error::invalid("anchor graph must be non-empty"));
        }
        for i in 0..graph.rows() {
            let mut sum = 0.0;
            for &z in graph.row(i) {
                if !z.is_finite() || z < 0.0 {
                    return Err(Error::invalid(format!(
                        "anchor graph row {i} has an invalid entry {z}"
                    )));
                }
                sum += z;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::invalid(format!(
                    "anchor graph row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { graph })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.graph
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.graph
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.graph.rows()
    }

    /// Number of anchors.
    pub fn anchor_count(&self) -> usize {
        self.graph.cols()
    }
}

/// Objective values recorded after every full alternating sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningTrace {
    pub objective_values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// How the initial anchors are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// m distinct rows of X, uniformly without replacement.
    Sample,
    /// Centroids of a k-means run with k = m.
    Kmeans,
}

/// Parameters for [`learn`]. `..Default::default()` fills the documented
/// defaults (β = 1, tol = 1e-6, max_iter = 50, orthogonal, sampled init).
#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    pub m: usize,
    pub beta: f64,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub orthogonal: bool,
    pub strategy: InitStrategy,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            m: 1,
            beta: DEFAULT_BETA,
            seed: 0,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            orthogonal: true,
            strategy: InitStrategy::Sample,
        }
    }
}

/// Initial anchors for a view: sampled rows or k-means centers, then
/// row-orthonormalized (Gram–Schmidt, completed from the standard basis if
/// dependent) whenever m ≤ d so the orthogonality constraint holds from the
/// start. Requesting orthogonality with m > d falls back to unconstrained
/// anchors with a warning.
pub fn init_anchors(
    x: &ViewMatrix,
    m: usize,
    seed: u64,
    strategy: InitStrategy,
    orthogonal: bool,
) -> Result<AnchorSet> {
    let n = x.n();
    let d = x.dim();
    if m == 0 || m > n {
        return Err(Error::invalid(format!(
            "init_anchors: m = {m} out of range 1..={n}"
        )));
    }
    let feasible = m <= d;
    if orthogonal && !feasible {
        log::warn!(
            "view {}: orthogonal anchors requested but m = {m} > d = {d}; \
             dropping the constraint",
            x.view_index()
        );
    }

    let mut rows: Vec<Vec<f64>> = match strategy {
        InitStrategy::Sample => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::index::sample(&mut rng, n, m)
                .into_iter()
                .map(|i| x.data().row(i).to_vec())
                .collect()
        }
        InitStrategy::Kmeans => {
            let fit = kmeans_fit(x.data(), m, seed, 100)?;
            (0..m).map(|c| fit.centroids.row(c).to_vec()).collect()
        }
    };

    if orthogonal && feasible {
        rows = orthonormalize_rows(rows, d, m);
    }
    AnchorSet::new(DenseMatrix::from_rows(&rows)?, orthogonal && feasible)
}

/// Gram–Schmidt on the given rows, dropping numerically dependent ones and
/// completing to `target` rows from the standard basis.
fn orthonormalize_rows(rows: Vec<Vec<f64>>, dim: usize, target: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(target);
    for mut v in rows {
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for x in &mut v {
                *x /= norm;
            }
            basis.push(v);
        }
        if basis.len() == target {
            break;
        }
    }
    complete_orthonormal_rows(&mut basis, dim, target);
    basis
}

/// Graph step: every row of the result is the simplex projection of the
/// matching row of `X·Aᵀ / (1+β)`.
pub fn update_graph(x: &ViewMatrix, a: &AnchorSet, beta: f64) -> Result<AnchorGraph> {
    if a.dim() != x.dim() {
        return Err(Error::shape(
            "update_graph",
            format!("anchors with {} columns", x.dim()),
            format!("{} columns", a.dim()),
        ));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::invalid(format!("update_graph: beta = {beta} < 0")));
    }
    let scale = 1.0 / (1.0 + beta);
    let scores = x.data().matmul_transposed(a.anchors())?;
    let mut graph = DenseMatrix::zeros(x.n(), a.count());
    let mut y = vec![0.0f64; a.count()];
    for j in 0..x.n() {
        for (t, &s) in y.iter_mut().zip(scores.row(j)) {
            *t = s * scale;
        }
        graph.row_mut(j).copy_from_slice(&project_simplex(&y)?);
    }
    AnchorGraph::new(graph)
}

/// Anchor step. Orthogonal and feasible (m ≤ d): the Procrustes optimum
/// `A = U·Vᵀ` from the truncated SVD of `B = Zᵀ·X`. Otherwise ridge least
/// squares `(ZᵀZ + εI)⁻¹ZᵀX`.
pub fn update_anchors(x: &ViewMatrix, z: &AnchorGraph, orthogonal: bool) -> Result<AnchorSet> {
    if z.n() != x.n() {
        return Err(Error::shape(
            "update_anchors",
            format!("graph with {} rows", x.n()),
            format!("{} rows", z.n()),
        ));
    }
    let m = z.anchor_count();
    let d = x.dim();
    for (idx, &mass) in z.matrix().col_sums().iter().enumerate() {
        if mass <= f64::EPSILON {
            log::warn!("anchor {idx} has no support in the graph; keeping it");
        }
    }
    if orthogonal && m <= d {
        let b = z.matrix().transposed_matmul(x.data())?;
        let svd = truncated_svd(&b, m)?;
        let a = svd.u.matmul_transposed(&svd.v)?;
        AnchorSet::new(a, true)
    } else {
        let mut gram = z.matrix().transposed_matmul(z.matrix())?;
        for i in 0..m {
            gram.set(i, i, gram.get(i, i) + RIDGE_EPS);
        }
        let rhs = z.matrix().transposed_matmul(x.data())?;
        let a = crate::numerics::cholesky_solve(&gram, &rhs)?;
        AnchorSet::new(a, false)
    }
}

/// Value of the learning objective `‖X − Z·A‖_F² + β‖Z‖_F²`.
pub fn objective(x: &ViewMatrix, z: &AnchorGraph, a: &AnchorSet, beta: f64) -> Result<f64> {
    if z.n() != x.n() || z.anchor_count() != a.count() || a.dim() != x.dim() {
        return Err(Error::shape(
            "objective",
            format!("X {}x{}, Z {}x{}, A {}x{}", x.n(), x.dim(), x.n(), a.count(), a.count(), x.dim()),
            format!(
                "X {}x{}, Z {}x{}, A {}x{}",
                x.n(),
                x.dim(),
                z.n(),
                z.anchor_count(),
                a.count(),
                a.dim()
            ),
        ));
    }
    let residual = x.data().sub(&z.matrix().matmul(a.anchors())?)?;
    let fit = residual.frobenius_norm().powi(2);
    let reg = z.matrix().frobenius_norm().powi(2);
    Ok(fit + beta * reg)
}

/// Alternating anchor / anchor-graph learning for one view.
///
/// Runs `update_graph` then `update_anchors` from `init_anchors` until the
/// relative objective change drops below `config.tol` or `config.max_iter`
/// sweeps elapse. The trace records the objective after every full sweep.
pub fn learn(
    x: &ViewMatrix,
    config: &LearnConfig,
) -> Result<(AnchorSet, AnchorGraph, LearningTrace)> {
    if config.max_iter == 0 {
        return Err(Error::invalid("learn: max_iter must be at least 1"));
    }
    let mut anchors = init_anchors(x, config.m, config.seed, config.strategy, config.orthogonal)?;
    let effective_orthogonal = anchors.orthogonal();

    let mut objective_values: Vec<f64> = Vec::with_capacity(config.max_iter);
    let mut graph = None;
    let mut converged = false;
    for _ in 0..config.max_iter {
        let z = update_graph(x, &anchors, config.beta)?;
        anchors = update_anchors(x, &z, effective_orthogonal)?;
        let value = objective(x, &z, &anchors, config.beta)?;
        graph = Some(z);
        if let Some(&prev) = objective_values.last() {
            let rel = (prev - value).abs() / f64::max(prev.abs(), f64::MIN_POSITIVE);
            objective_values.push(value);
            if rel < config.tol {
                converged = true;
                break;
            }
        } else {
            objective_values.push(value);
        }
    }

    let iterations = objective_values.len();
    let trace = LearningTrace {
        objective_values,
        iterations,
        converged,
    };
    Ok((anchors, graph.expect("max_iter >= 1"), trace))
}
