//! Property-based invariants: facts that must hold for *every* input in a
//! domain, checked over randomized cases with shrinking on failure.

mod common;

use anchorcc::alignment::ds_project;
use anchorcc::data_io::{load_matrix, save_labels, save_matrix};
use anchorcc::metrics::{accuracy, nmi, pairwise_fscore};
use anchorcc::numerics::{project_simplex, DenseMatrix};
use proptest::prelude::*;

/// A strategy for short vectors of well-scaled finite floats.
fn float_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 1..=max_len)
}

/// A strategy for a square matrix of finite floats, as (m, flat entries).
fn square_matrix(max_m: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1..=max_m).prop_flat_map(|m| {
        prop::collection::vec(-10.0f64..10.0, m * m).prop_map(move |v| (m, v))
    })
}

/// A strategy for a pair of equal-length label vectors with small alphabets.
/// Pairwise metrics need at least two samples, so n starts at 2.
fn label_pair() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2usize..=60).prop_flat_map(|n| {
        (
            prop::collection::vec(0usize..5, n),
            prop::collection::vec(0usize..5, n),
        )
    })
}

proptest! {
    /// The simplex projection always lands on the simplex, and projecting a
    /// point already on the simplex is a no-op (idempotence).
    #[test]
    fn simplex_projection_is_feasible_and_idempotent(y in float_vec(12)) {
        let z = project_simplex(&y).unwrap();
        prop_assert!(z.iter().all(|&v| v >= 0.0));
        prop_assert!((z.iter().sum::<f64>() - 1.0).abs() <= 1e-9);

        let z2 = project_simplex(&z).unwrap();
        let drift = z
            .iter()
            .zip(&z2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        prop_assert!(drift <= 1e-9, "re-projection moved the point by {drift}");
    }

    /// The simplex projection preserves the ordering of coordinates: if
    /// y_i >= y_j then z_i >= z_j (the projection subtracts one common
    /// threshold and clips).
    #[test]
    fn simplex_projection_preserves_order(y in float_vec(12)) {
        let z = project_simplex(&y).unwrap();
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] >= y[j] {
                    prop_assert!(
                        z[i] >= z[j] - 1e-12,
                        "order violated: y[{i}]={} >= y[{j}]={} but z[{i}]={} < z[{j}]={}",
                        y[i], y[j], z[i], z[j]
                    );
                }
            }
        }
    }

    /// Doubly-stochastic projection produces a matrix with nonnegative
    /// entries whose row and column sums are all 1, and running the
    /// projection again does not move it materially.
    #[test]
    fn ds_projection_lands_on_birkhoff_polytope((m, flat) in square_matrix(6)) {
        let q = DenseMatrix::from_vec(m, m, flat).unwrap();
        let out = ds_project(&q, 1e-10, 5000).unwrap();
        let p = &out.matrix;
        prop_assert!(p.min_entry() >= -1e-12);
        for s in p.row_sums() {
            prop_assert!((s - 1.0).abs() <= 1e-6, "row sum {s}");
        }
        for s in p.col_sums() {
            prop_assert!((s - 1.0).abs() <= 1e-6, "col sum {s}");
        }

        let again = ds_project(p, 1e-10, 5000).unwrap();
        let drift = again.matrix.sub(p).unwrap().max_abs();
        prop_assert!(drift <= 1e-6, "projection not idempotent: drift {drift}");
    }

    /// Clustering metrics must not care what the cluster ids are called:
    /// renaming predicted labels through any injective map leaves ACC, NMI,
    /// and pairwise F-score unchanged.
    #[test]
    fn metrics_are_invariant_under_relabeling((pred, truth) in label_pair(), offset in 1usize..17) {
        // An injective relabeling: id -> id * step + offset.
        let renamed: Vec<usize> = pred.iter().map(|&c| c * 31 + offset).collect();

        let acc0 = accuracy(&pred, &truth).unwrap();
        let acc1 = accuracy(&renamed, &truth).unwrap();
        prop_assert!((acc0 - acc1).abs() <= 1e-12);

        let nmi0 = nmi(&pred, &truth).unwrap();
        let nmi1 = nmi(&renamed, &truth).unwrap();
        prop_assert!((nmi0 - nmi1).abs() <= 1e-12);

        let f0 = pairwise_fscore(&pred, &truth).unwrap();
        let f1 = pairwise_fscore(&renamed, &truth).unwrap();
        prop_assert!((f0 - f1).abs() <= 1e-12);
    }

    /// Metrics are symmetric in a specific sense: comparing a clustering to
    /// itself is perfect agreement.
    #[test]
    fn metrics_of_identical_clusterings_are_perfect(labels in prop::collection::vec(0usize..4, 2..40)) {
        prop_assert!((accuracy(&labels, &labels).unwrap() - 1.0).abs() <= 1e-12);

        // Pairwise F-score is 1 whenever at least one same-cluster pair
        // exists; an all-singletons partition has no positive pairs and
        // yields 0 by convention.
        let mut counts = std::collections::HashMap::new();
        for &c in &labels {
            *counts.entry(c).or_insert(0usize) += 1;
        }
        let has_pair = counts.values().any(|&c| c >= 2);
        let want_f = if has_pair { 1.0 } else { 0.0 };
        prop_assert!((pairwise_fscore(&labels, &labels).unwrap() - want_f).abs() <= 1e-12);
        let h = nmi(&labels, &labels).unwrap();
        // NMI of identical clusterings is 1, except a single-cluster
        // partition has zero entropy and yields 0 by convention.
        let distinct = {
            let mut s = labels.clone();
            s.sort_unstable();
            s.dedup();
            s.len()
        };
        let want = if distinct > 1 { 1.0 } else { 0.0 };
        prop_assert!((h - want).abs() <= 1e-9, "self-NMI {h}, expected {want}");
    }

    /// Matrices survive a CSV round trip: save then load reproduces every
    /// entry to full precision.
    #[test]
    fn matrix_csv_round_trip((m, flat) in square_matrix(5)) {
        let mat = DenseMatrix::from_vec(m, m, flat).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roundtrip.csv");
        save_matrix(&mat, &path).unwrap();
        let back = load_matrix(&path).unwrap();
        prop_assert_eq!(back.rows(), mat.rows());
        prop_assert_eq!(back.cols(), mat.cols());
        let diff = back.sub(&mat).unwrap().max_abs();
        prop_assert!(diff <= 1e-15, "round trip drift {diff}");
    }

    /// Label files survive the same round trip.
    #[test]
    fn labels_csv_round_trip(labels in prop::collection::vec(0usize..100, 1..50)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        save_labels(&labels, &path).unwrap();
        let back = anchorcc::data_io::load_labels(&path).unwrap();
        prop_assert_eq!(back, labels);
    }
}
