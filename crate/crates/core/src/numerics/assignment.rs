//! Optimal linear assignment (maximum-score bijection) on a square matrix.
//!
//! A shortest-augmenting-path Hungarian solve produces the optimal value
//! and dual potentials; a second pass finds the lexicographically smallest
//! assignment among the optima by walking the tight-edge graph. The
//! deterministic tie-break keeps rounding and label matching reproducible.

use super::matrix::DenseMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    /// `assignment[i]` is the column matched to row `i`; a bijection.
    pub assignment: Vec<usize>,
    /// Sum of the selected score entries.
    pub total_score: f64,
}

impl AssignmentResult {
    /// Permutation matrix with a 1 at `(i, assignment[i])`.
    pub fn to_permutation_matrix(&self) -> DenseMatrix {
        let m = self.assignment.len();
        let mut p = DenseMatrix::zeros(m, m);
        for (i, &j) in self.assignment.iter().enumerate() {
            p.set(i, j, 1.0);
        }
        p
    }
}

/// Returns the bijection rows -> columns maximizing the summed score.
/// Among optimal bijections, the lexicographically smallest assignment
/// vector is returned (ties detected within a 1e-9 relative tolerance).
pub fn linear_assignment_max(score: &DenseMatrix) -> Result<AssignmentResult> {
    let m = score.rows();
    if score.cols() != m {
        return Err(Error::shape(
            "linear_assignment_max",
            "square matrix",
            format!("{}x{}", m, score.cols()),
        ));
    }
    if m == 0 {
        return Err(Error::invalid("linear_assignment_max: empty matrix"));
    }
    if !score.all_finite() {
        return Err(Error::NonFinite("linear_assignment_max"));
    }

    // Minimize the negated score.
    let (row_pot, col_pot) = hungarian_duals(score);

    // Complementary slackness: optimal assignments use only tight edges
    // (u_i + v_j = s_ij up to rounding), and any perfect matching of tight
    // edges attains the optimal value. Walking rows in order and taking the
    // smallest tight column that still leaves the rest matchable yields the
    // lexicographically smallest optimum.
    let tol = 1e-9 * score.max_abs().max(1.0);
    let tight: Vec<Vec<usize>> = (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| row_pot[i] + col_pot[j] - score.get(i, j) <= tol)
                .collect()
        })
        .collect();

    let assignment = lexicographically_smallest_matching(&tight, m)
        .expect("tight-edge graph of an optimal assignment admits a perfect matching");

    let total_score = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| score.get(i, j))
        .sum();
    Ok(AssignmentResult {
        assignment,
        total_score,
    })
}

/// Hungarian algorithm (Jonker-Volgenant shortest augmenting paths) on the
/// min-cost problem `cost = -score`; returns max-problem potentials with
/// `u_i + v_j >= s_ij` and equality on some optimal matching.
fn hungarian_duals(score: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = score.rows();
    const UNMATCHED: usize = usize::MAX;
    let mut u = vec![0.0f64; n]; // row potentials (min problem)
    let mut v = vec![0.0f64; n + 1]; // column potentials, index n is virtual
    let mut row_of = vec![UNMATCHED; n + 1]; // row matched to each column

    for start_row in 0..n {
        row_of[n] = start_row;
        let mut j_cur = n;
        let mut min_slack = vec![f64::INFINITY; n];
        let mut prev_col = vec![n; n];
        let mut used = vec![false; n + 1];
        loop {
            used[j_cur] = true;
            let i_cur = row_of[j_cur];
            let mut delta = f64::INFINITY;
            let mut j_next = n;
            for j in 0..n {
                if used[j] {
                    continue;
                }
                let slack = -score.get(i_cur, j) - u[i_cur] - v[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    prev_col[j] = j_cur;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j_next = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    if row_of[j] != UNMATCHED {
                        u[row_of[j]] += delta;
                    }
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j_cur = j_next;
            if row_of[j_cur] == UNMATCHED {
                break;
            }
        }
        // Augment along the recorded path.
        while j_cur != n {
            let j_prev = prev_col[j_cur];
            row_of[j_cur] = row_of[j_prev];
            j_cur = j_prev;
        }
    }

    // Convert min-problem potentials to the max problem.
    let row_pot: Vec<f64> = u.iter().map(|x| -x).collect();
    let col_pot: Vec<f64> = v[..n].iter().map(|x| -x).collect();
    (row_pot, col_pot)
}

/// Lexicographically smallest perfect matching of a bipartite graph given
/// as sorted adjacency lists, or None if no perfect matching exists.
fn lexicographically_smallest_matching(adj: &[Vec<usize>], m: usize) -> Option<Vec<usize>> {
    let mut fixed: Vec<usize> = Vec::with_capacity(m);
    let mut col_taken = vec![false; m];
    for i in 0..m {
        let mut chosen = None;
        for &j in &adj[i] {
            if col_taken[j] {
                continue;
            }
            col_taken[j] = true;
            if remaining_rows_matchable(adj, i + 1, &col_taken, m) {
                chosen = Some(j);
                break;
            }
            col_taken[j] = false;
        }
        fixed.push(chosen?);
    }
    Some(fixed)
}

/// Kuhn's algorithm: do rows `first_row..m` admit a perfect matching into
/// the columns not yet taken?
fn remaining_rows_matchable(adj: &[Vec<usize>], first_row: usize, col_taken: &[bool], m: usize) -> bool {
    const FREE: usize = usize::MAX;
    let mut match_row = vec![FREE; m]; // column -> row
    for i in first_row..m {
        let mut visited = vec![false; m];
        if !augment(adj, i, col_taken, &mut visited, &mut match_row) {
            return false;
        }
    }
    true
}

fn augment(
    adj: &[Vec<usize>],
    row: usize,
    col_taken: &[bool],
    visited: &mut [bool],
    match_row: &mut [usize],
) -> bool {
    for &j in &adj[row] {
        if col_taken[j] || visited[j] {
            continue;
        }
        visited[j] = true;
        if match_row[j] == usize::MAX || augment(adj, match_row[j], col_taken, visited, match_row) {
            match_row[j] = row;
            return true;
        }
    }
    false
}
