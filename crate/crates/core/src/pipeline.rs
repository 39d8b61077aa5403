//! End-to-end clustering: per-view learning, sequential alignment to view 1,
//! fusion, spectral embedding, and k-means.
//!
//! The stages mirror the method's main algorithm: anchors and anchor graphs
//! are learned per view, views 2..v are aligned to view 1 by the relaxed-QAP
//! solver, the aligned graphs are averaged into `Z_aligned = (Z₁ + Σ ZᵢPᵢ)/v`,
//! the top-k left singular vectors of the fused graph form the embedding
//! (computed through the m×m Gram matrix to keep the cost linear in n), and
//! k-means on the embedding yields the labels.

use crate::alignment::{align, AlignConfig, CorrespondencePlan};
use crate::anchor_graph::{
    init_anchors, learn, objective, update_graph, AnchorGraph, AnchorSet, InitStrategy,
    LearnConfig, LearningTrace, ViewMatrix,
};
use crate::data_io::MultiViewDataset;
use crate::numerics::{kmeans_fit, truncated_svd, DenseMatrix};
use crate::{Error, Result};
use rayon::prelude::*;
use std::time::Instant;

/// How per-view plans enter the fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignMode {
    /// Apply the rounded hard permutation (column reordering).
    Hard,
    /// Right-multiply by the relaxed doubly-stochastic plan.
    Relaxed,
    /// Skip alignment entirely (the unaligned ablation).
    None,
}

/// Which anchor-learning variant stage 1 runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorMode {
    /// Alternating learning with orthonormal anchors (the full method).
    Orthogonal,
    /// Anchors fixed at k-means centers, one graph solve (the baseline).
    Fixed,
    /// Alternating learning without the orthogonality constraint.
    Unconstrained,
}

/// Number of k-means restarts; best inertia wins.
const KMEANS_RESTARTS: usize = 10;

/// End-to-end configuration. Use [`PipelineConfig::new`] and override
/// fields as needed; tolerances default to the sub-module defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Anchors per view.
    pub m: usize,
    /// Clusters.
    pub k: usize,
    /// Anchor-graph regularizer β.
    pub beta: f64,
    /// Structure weight λ (`f64::INFINITY` = structure-only).
    pub lambda: f64,
    /// Fixed-point step size α.
    pub alpha: f64,
    pub seed: u64,
    pub align_mode: AlignMode,
    pub anchor_mode: AnchorMode,
    /// Initialization for the learned anchor modes.
    pub anchor_init: InitStrategy,
    /// Permute every view's anchors after learning with a seed-derived
    /// random permutation, inducing the anchor-unaligned problem on
    /// purpose (ablation support).
    pub scramble: bool,
    pub learn_tol: f64,
    pub learn_max_iter: usize,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub ds_tol: f64,
    pub ds_max_iter: usize,
}

impl PipelineConfig {
    pub fn new(m: usize, k: usize) -> Self {
        Self {
            m,
            k,
            beta: crate::anchor_graph::DEFAULT_BETA,
            lambda: crate::alignment::DEFAULT_LAMBDA,
            alpha: crate::alignment::DEFAULT_ALPHA,
            seed: 0,
            align_mode: AlignMode::Hard,
            anchor_mode: AnchorMode::Orthogonal,
            // k-means centers cover every cluster even at small m, where
            // uniform sampling routinely misses one; the end-to-end default
            // follows the k-means anchor lineage.
            anchor_init: InitStrategy::Kmeans,
            scramble: false,
            learn_tol: crate::anchor_graph::DEFAULT_TOL,
            learn_max_iter: crate::anchor_graph::DEFAULT_MAX_ITER,
            fp_tol: crate::alignment::DEFAULT_FP_TOL,
            fp_max_iter: crate::alignment::DEFAULT_FP_MAX_ITER,
            ds_tol: crate::alignment::DEFAULT_DS_TOL,
            ds_max_iter: crate::alignment::DEFAULT_DS_MAX_ITER,
        }
    }

    fn align_config(&self) -> AlignConfig {
        AlignConfig {
            lambda: self.lambda,
            alpha: self.alpha,
            fp_tol: self.fp_tol,
            fp_max_iter: self.fp_max_iter,
            ds_tol: self.ds_tol,
            ds_max_iter: self.ds_max_iter,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.m == 0 || self.m > n {
            return Err(Error::invalid(format!(
                "pipeline: m = {} out of range 1..={n}",
                self.m
            )));
        }
        if self.k == 0 || self.k > n {
            return Err(Error::invalid(format!(
                "pipeline: k = {} out of range 1..={n}",
                self.k
            )));
        }
        if self.m < self.k {
            log::warn!(
                "pipeline: m = {} is below k = {}; m >= k is recommended",
                self.m,
                self.k
            );
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::invalid(format!(
                "pipeline: beta must be finite and >= 0, got {}",
                self.beta
            )));
        }
        if !(self.learn_tol > 0.0) || self.learn_max_iter == 0 {
            return Err(Error::invalid(
                "pipeline: learn tolerance must be positive and max_iter at least 1",
            ));
        }
        self.align_config().validate()
    }
}

/// The fused aligned graph `(Z₁ + Σ ZᵢPᵢ)/v`: rows nonnegative with sums
/// within 1e-6 of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedGraph {
    graph: DenseMatrix,
}

impl FusedGraph {
    pub fn new(graph: DenseMatrix) -> Result<Self> {
        for (i, sum) in graph.row_sums().into_iter().enumerate() {
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!(
                    "fused graph row {i} sums to {sum}, expected 1 within 1e-6"
                )));
            }
        }
        if graph.min_entry() < -1e-12 {
            return Err(Error::invalid("fused graph has negative entries"));
        }
        Ok(Self { graph })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.rows()
    }

    pub fn anchor_count(&self) -> usize {
        self.graph.cols()
    }
}

/// Top-k left singular vectors of the fused graph, with the number of
/// columns that had to be padded from the orthogonal complement when the
/// graph's rank fell short of k.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    pub matrix: DenseMatrix,
    pub padded: usize,
}

/// Wall-clock seconds per pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimings {
    pub learn: f64,
    pub align: f64,
    pub fuse: f64,
    pub embed: f64,
    pub kmeans: f64,
    pub total: f64,
}

/// Everything a pipeline run produces.
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub embedding: DenseMatrix,
    /// Embedding columns padded due to rank deficiency (0 normally).
    pub embedding_padded: usize,
    /// One plan per non-reference view (empty when alignment is skipped).
    pub plans: Vec<CorrespondencePlan>,
    pub traces: Vec<LearningTrace>,
    pub timings: StageTimings,
    /// Learned (and possibly scrambled) per-view anchor graphs.
    pub graphs: Vec<AnchorGraph>,
    pub anchor_sets: Vec<AnchorSet>,
    pub fused: FusedGraph,
    pub kmeans_inertia: f64,
}

/// Average the aligned anchor graphs: view 1 as-is, views 2..v transported
/// by their plans (hard permutation, relaxed plan, or identity).
pub fn fuse(
    graphs: &[AnchorGraph],
    plans: &[CorrespondencePlan],
    mode: AlignMode,
) -> Result<FusedGraph> {
    if graphs.is_empty() {
        return Err(Error::invalid("fuse: need at least one anchor graph"));
    }
    let n = graphs[0].n();
    let m = graphs[0].anchor_count();
    for g in graphs {
        if g.n() != n || g.anchor_count() != m {
            return Err(Error::shape(
                "fuse",
                format!("{n}x{m} anchor graphs"),
                format!("{}x{}", g.n(), g.anchor_count()),
            ));
        }
    }
    if mode != AlignMode::None && plans.len() != graphs.len() - 1 {
        return Err(Error::shape(
            "fuse",
            format!("{} correspondence plans", graphs.len() - 1),
            format!("{}", plans.len()),
        ));
    }

    let mut sum = graphs[0].matrix().clone();
    for (i, g) in graphs.iter().enumerate().skip(1) {
        let aligned = match mode {
            AlignMode::Hard => g.matrix().permute_columns(&plans[i - 1].hard.assignment)?,
            AlignMode::Relaxed => g.matrix().matmul(&plans[i - 1].relaxed)?,
            AlignMode::None => g.matrix().clone(),
        };
        sum = sum.add(&aligned)?;
    }
    FusedGraph::new(sum.scale(1.0 / graphs.len() as f64))
}

/// Top-k left singular vectors of the fused graph, through the m×m Gram
/// matrix: eigendecompose `ZᵀZ`, back-project `u_j = Z·v_j/σ_j`, and
/// normalize. Rank deficiency below k pads the trailing columns with an
/// orthonormal completion and reports how many.
pub fn spectral_embed(fused: &FusedGraph, k: usize) -> Result<SpectralEmbedding> {
    let n = fused.n();
    let m = fused.anchor_count();
    if k == 0 || k > m {
        return Err(Error::invalid(format!(
            "spectral_embed: k = {k} out of range 1..={m}"
        )));
    }
    let z = fused.matrix();
    let gram = z.transposed_matmul(z)?;
    let eig = truncated_svd(&gram, k)?;

    // Numerical rank cut: Gram eigenvalues at relative 1e-12 are noise.
    let eig_max = eig.sigma.first().copied().unwrap_or(0.0);
    let cutoff = eig_max * 1e-12;

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (j, &eigval) in eig.sigma.iter().enumerate() {
        if eigval <= cutoff || eigval <= 0.0 {
            break;
        }
        let v = eig.u.column(j);
        let mut u = vec![0.0f64; n];
        for (i, target) in u.iter_mut().enumerate() {
            let row = z.row(i);
            *target = row.iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let norm: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 0.0 {
            break;
        }
        for x in &mut u {
            *x /= norm;
        }
        columns.push(u);
    }
    let padded = k - columns.len();
    if padded > 0 {
        log::warn!(
            "spectral_embed: fused graph rank {} below k = {k}; padding {padded} column(s)",
            columns.len()
        );
        crate::numerics::complete_orthonormal_rows(&mut columns, n, k);
    }

    let mut matrix = DenseMatrix::zeros(n, k);
    for (j, u) in columns.iter().enumerate() {
        for (i, &v) in u.iter().enumerate() {
            matrix.set(i, j, v);
        }
    }
    Ok(SpectralEmbedding { matrix, padded })
}

/// Permute an anchor graph's columns and the anchor set's rows by the same
/// permutation (`dest_of[j]` is the new position of anchor j), preserving
/// their consistency while destroying cross-view column alignment.
pub fn scramble_anchors(
    z: &AnchorGraph,
    a: &AnchorSet,
    dest_of: &[usize],
) -> Result<(AnchorGraph, AnchorSet)> {
    if a.count() != z.anchor_count() {
        return Err(Error::shape(
            "scramble_anchors",
            format!("{} anchors", z.anchor_count()),
            format!("{}", a.count()),
        ));
    }
    let graph = z.matrix().permute_columns(dest_of)?;
    let anchors = a.anchors().permute_rows(dest_of)?;
    Ok((
        AnchorGraph::new(graph)?,
        AnchorSet::new(anchors, a.orthogonal())?,
    ))
}

/// Uniformly random permutation of {0..m-1}, deterministic per seed.
pub fn seeded_permutation(m: usize, seed: u64) -> Vec<usize> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..m).collect();
    for i in (1..m).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

/// Stable per-stage seed derivation (SplitMix64 of base + stream index),
/// so stages and views stay independent and reproducible.
fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn learn_view(
    x: &ViewMatrix,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<(AnchorSet, AnchorGraph, LearningTrace)> {
    match cfg.anchor_mode {
        AnchorMode::Orthogonal | AnchorMode::Unconstrained => {
            let learn_cfg = LearnConfig {
                m: cfg.m,
                beta: cfg.beta,
                seed,
                tol: cfg.learn_tol,
                max_iter: cfg.learn_max_iter,
                orthogonal: cfg.anchor_mode == AnchorMode::Orthogonal,
                strategy: cfg.anchor_init,
            };
            learn(x, &learn_cfg)
        }
        AnchorMode::Fixed => {
            let anchors = init_anchors(x, cfg.m, seed, InitStrategy::Kmeans, false)?;
            let graph = update_graph(x, &anchors, cfg.beta)?;
            let value = objective(x, &graph, &anchors, cfg.beta)?;
            Ok((
                anchors,
                graph,
                LearningTrace {
                    objective_values: vec![value],
                    iterations: 1,
                    converged: true,
                },
            ))
        }
    }
}

/// Run the whole pipeline on a dataset. Deterministic for a fixed
/// `cfg.seed`; any stage failure aborts with a stage-tagged error.
pub fn run(dataset: &MultiViewDataset, cfg: &PipelineConfig) -> Result<ClusteringResult> {
    cfg.validate(dataset.n())?;
    let total_start = Instant::now();

    // Stage 1: per-view anchor learning (parallel across views).
    let stage = Instant::now();
    let learned: Vec<(AnchorSet, AnchorGraph, LearningTrace)> = dataset
        .views()
        .par_iter()
        .enumerate()
        .map(|(i, x)| learn_view(x, cfg, derive_seed(cfg.seed, i as u64)))
        .collect::<Result<_>>()
        .map_err(|e| e.in_stage("learn"))?;
    let mut anchor_sets = Vec::with_capacity(learned.len());
    let mut graphs = Vec::with_capacity(learned.len());
    let mut traces = Vec::with_capacity(learned.len());
    for (a, z, t) in learned {
        anchor_sets.push(a);
        graphs.push(z);
        traces.push(t);
    }
    let learn_secs = stage.elapsed().as_secs_f64();

    // Optional scramble of every view (ablation support). Permuting the
    // reference view too only relabels the fused columns; what matters is
    // that cross-view correspondence is destroyed.
    if cfg.scramble {
        for i in 0..graphs.len() {
            let perm = seeded_permutation(cfg.m, derive_seed(cfg.seed, 0x5C4A_0000 + i as u64));
            let (z, a) = scramble_anchors(&graphs[i], &anchor_sets[i], &perm)
                .map_err(|e| e.in_stage("scramble"))?;
            graphs[i] = z;
            anchor_sets[i] = a;
        }
    }

    // Stage 2: align views 2..v to view 1 (parallel across pairs).
    let stage = Instant::now();
    let plans: Vec<CorrespondencePlan> = if cfg.align_mode == AlignMode::None || graphs.len() < 2 {
        Vec::new()
    } else {
        let align_cfg = cfg.align_config();
        graphs[1..]
            .par_iter()
            .map(|z| align(&graphs[0], z, &align_cfg))
            .collect::<Result<_>>()
            .map_err(|e| e.in_stage("align"))?
    };
    let align_secs = stage.elapsed().as_secs_f64();

    // Stage 3: fuse.
    let stage = Instant::now();
    let fused = fuse(&graphs, &plans, cfg.align_mode).map_err(|e| e.in_stage("fuse"))?;
    let fuse_secs = stage.elapsed().as_secs_f64();

    // Stage 4: spectral embedding.
    let stage = Instant::now();
    let embedding = spectral_embed(&fused, cfg.k).map_err(|e| e.in_stage("embed"))?;
    let embed_secs = stage.elapsed().as_secs_f64();

    // Stage 5: k-means with restarts; best inertia wins, ties to the
    // earliest restart for determinism.
    let stage = Instant::now();
    let mut best: Option<crate::numerics::KMeansFit> = None;
    for r in 0..KMEANS_RESTARTS {
        let fit = kmeans_fit(
            &embedding.matrix,
            cfg.k,
            derive_seed(cfg.seed, 0xC0DE_0000 + r as u64),
            100,
        )
        .map_err(|e| e.in_stage("kmeans"))?;
        let better = best
            .as_ref()
            .map(|b| fit.inertia < b.inertia)
            .unwrap_or(true);
        if better {
            best = Some(fit);
        }
    }
    let best = best.expect("at least one restart ran");
    let kmeans_secs = stage.elapsed().as_secs_f64();

    Ok(ClusteringResult {
        labels: best.labels,
        embedding: embedding.matrix,
        embedding_padded: embedding.padded,
        plans,
        traces,
        timings: StageTimings {
            learn: learn_secs,
            align: align_secs,
            fuse: fuse_secs,
            embed: embed_secs,
            kmeans: kmeans_secs,
            total: total_start.elapsed().as_secs_f64(),
        },
        graphs,
        anchor_sets,
        fused,
        kmeans_inertia: best.inertia,
    })
}
