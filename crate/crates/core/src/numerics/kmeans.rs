//! Lloyd's k-means with distance-weighted (k-means++ style) seeding.

use super::matrix::DenseMatrix;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centroids: DenseMatrix,
    /// Sum of squared distances to assigned centroids.
    pub inertia: f64,
    pub iterations: usize,
}

/// Cluster labels for `points`, deterministic for a fixed `seed`.
pub fn kmeans(points: &DenseMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(kmeans_fit(points, k, seed, DEFAULT_MAX_ITER)?.labels)
}

/// Full k-means run: distance-weighted seeding, then Lloyd iterations until
/// the assignment stabilizes or `max_iter` is reached.
pub fn kmeans_fit(points: &DenseMatrix, k: usize, seed: u64, max_iter: usize) -> Result<KMeansFit> {
    let n = points.rows();
    let d = points.cols();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "kmeans: k = {k} out of range 1..={n}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);

    let mut labels = vec![0usize; n];
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let mut changed = false;
        for i in 0..n {
            let best = nearest_centroid(points.row(i), &centroids);
            if best != labels[i] {
                labels[i] = best;
                changed = true;
            }
        }
        if iterations > 1 && !changed {
            break;
        }

        // Mean update; an empty cluster keeps its previous centroid.
        let mut sums = vec![0.0f64; k * d];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = labels[i];
            counts[c] += 1;
            for (s, &x) in sums[c * d..(c + 1) * d].iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for j in 0..d {
                centroids.set(c, j, sums[c * d + j] / counts[c] as f64);
            }
        }
    }

    let inertia = (0..n)
        .map(|i| squared_distance(points.row(i), centroids.row(labels[i])))
        .sum();
    Ok(KMeansFit {
        labels,
        centroids,
        inertia,
        iterations,
    })
}

/// First centroid uniform over the rows; each following one sampled with
/// probability proportional to the squared distance to the nearest centroid
/// chosen so far. Falls back to uniform when all distances vanish.
fn seed_centroids(points: &DenseMatrix, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let n = points.rows();
    let d = points.cols();
    let mut centroids = DenseMatrix::zeros(k, d);

    let first = rng.gen_range(0..n);
    centroids.row_mut(0).copy_from_slice(points.row(first));

    let mut dist2: Vec<f64> = (0..n)
        .map(|i| squared_distance(points.row(i), centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in dist2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for i in 0..n {
            let d2 = squared_distance(points.row(i), centroids.row(c));
            if d2 < dist2[i] {
                dist2[i] = d2;
            }
        }
    }
    centroids
}

fn nearest_centroid(point: &[f64], centroids: &DenseMatrix) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for c in 0..centroids.rows() {
        let d2 = squared_distance(point, centroids.row(c));
        if d2 < best_d {
            best_d = d2;
            best = c;
        }
    }
    best
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
