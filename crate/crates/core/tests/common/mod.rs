//! Independent oracles for the integration and acceptance suites.
//!
//! Everything here is written for obviousness, not speed, and shares no
//! code with the library: exhaustive enumeration, explicit pair loops,
//! dense Gaussian elimination, and textbook Jacobi rotations. Matching
//! the library against these is the point, so keep them boring.

#![allow(dead_code)] // each integration target compiles its own copy
#![allow(clippy::needless_range_loop)] // explicit index loops are the point

use anchorcc::numerics::DenseMatrix;
use rand::Rng;

// ---------------------------------------------------------------------------
// Permutations and assignments
// ---------------------------------------------------------------------------

/// All permutations of {0..m-1} in lexicographic order.
pub fn all_permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..m).collect();
    let mut used = vec![false; m];
    fn recurse(
        m: usize,
        depth: usize,
        current: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if depth == m {
            out.push(current.clone());
            return;
        }
        for v in 0..m {
            if !used[v] {
                used[v] = true;
                current[depth] = v;
                recurse(m, depth + 1, current, used, out);
                used[v] = false;
            }
        }
    }
    recurse(m, 0, &mut current, &mut used, &mut out);
    out
}

/// Exhaustively maximize `Σ_i score[i][σ(i)]`; returns the lexicographically
/// smallest maximizer and its score.
pub fn exhaustive_best_assignment(score: &DenseMatrix) -> (Vec<usize>, f64) {
    assert_eq!(score.rows(), score.cols(), "oracle expects a square score");
    let m = score.rows();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for perm in all_permutations(m) {
        let total: f64 = (0..m).map(|i| score.get(i, perm[i])).sum();
        let better = match &best {
            None => true,
            Some((_, s)) => total > *s,
        };
        if better {
            best = Some((perm, total));
        }
    }
    best.expect("m >= 1")
}

/// Uniformly random permutation (Fisher–Yates).
pub fn random_permutation(m: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..m).collect();
    for i in (1..m).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

// ---------------------------------------------------------------------------
// QAP objective, the slow way
// ---------------------------------------------------------------------------

/// Four-loop QAP objective: `w_f·Tr(K·P) + w_s·Tr(S₁ᵀ·Pᵀ·S₂·P)` with
/// `K = Z₁ᵀZ₂`, `Sᵢ = ZᵢᵀZᵢ`, and `(w_f, w_s) = (1, λ)` for finite λ or
/// `(0, 1)` for λ = ∞. Every matrix product is spelled out.
pub fn naive_qap_objective(
    z1: &DenseMatrix,
    z2: &DenseMatrix,
    p: &DenseMatrix,
    lambda: f64,
) -> f64 {
    let n = z1.rows();
    let m = z1.cols();
    assert_eq!(z2.rows(), n);
    assert_eq!(z2.cols(), m);
    assert_eq!(p.rows(), m);
    assert_eq!(p.cols(), m);

    let (w_f, w_s) = if lambda.is_infinite() {
        (0.0, 1.0)
    } else {
        (1.0, lambda)
    };

    let mut k = vec![vec![0.0f64; m]; m];
    let mut s1 = vec![vec![0.0f64; m]; m];
    let mut s2 = vec![vec![0.0f64; m]; m];
    for a in 0..m {
        for b in 0..m {
            for r in 0..n {
                k[a][b] += z1.get(r, a) * z2.get(r, b);
                s1[a][b] += z1.get(r, a) * z1.get(r, b);
                s2[a][b] += z2.get(r, a) * z2.get(r, b);
            }
        }
    }

    let mut feature = 0.0;
    for a in 0..m {
        for b in 0..m {
            feature += k[a][b] * p.get(b, a);
        }
    }

    // Tr(S₁ᵀ Pᵀ S₂ P) = Σ_{i,j,a,b} S₁[a][b] P[i][a] S₂[i][j] P[j][b]
    let mut structure = 0.0;
    for i in 0..m {
        for j in 0..m {
            for a in 0..m {
                for b in 0..m {
                    structure += s1[a][b] * p.get(i, a) * s2[i][j] * p.get(j, b);
                }
            }
        }
    }

    w_f * feature + w_s * structure
}

/// Permutation vector as the matrix with `P[i][perm[i]] = 1`.
pub fn permutation_to_matrix(perm: &[usize]) -> DenseMatrix {
    let m = perm.len();
    let mut p = DenseMatrix::zeros(m, m);
    for (i, &j) in perm.iter().enumerate() {
        p.set(i, j, 1.0);
    }
    p
}

// ---------------------------------------------------------------------------
// Linear algebra oracles
// ---------------------------------------------------------------------------

/// Dense Gaussian elimination with partial pivoting; panics on a
/// numerically singular system (oracles should fail loudly).
pub fn gaussian_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = a.len();
    assert!(a.iter().all(|row| row.len() == n));
    assert_eq!(b.len(), n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        assert!(a[pivot][col].abs() > 1e-12, "singular system in oracle");
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in (row + 1)..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Euclidean projection of Q onto `{P : P·1 = 1, Pᵀ·1 = 1}` by solving the
/// KKT system directly: stack the 2m−1 independent sum constraints (the
/// last column-sum constraint is implied by the rest), solve
/// `(A·Aᵀ)·λ = A·vec(Q) − b`, and set `vec(P) = vec(Q) − Aᵀ·λ`.
pub fn kkt_affine_projection(q: &DenseMatrix) -> DenseMatrix {
    let m = q.rows();
    assert_eq!(q.cols(), m);
    let vars = m * m;
    let cons = 2 * m - 1;

    // Constraint matrix A (cons × vars): rows 0..m are row sums, rows
    // m..2m-1 are the first m-1 column sums.
    let mut a = vec![vec![0.0f64; vars]; cons];
    for i in 0..m {
        for j in 0..m {
            a[i][i * m + j] = 1.0;
        }
    }
    for j in 0..(m - 1) {
        for i in 0..m {
            a[m + j][i * m + j] = 1.0;
        }
    }

    let qv: Vec<f64> = (0..m)
        .flat_map(|i| (0..m).map(move |j| q.get(i, j)))
        .collect();

    // rhs = A·q − b with b = all-ones targets.
    let mut rhs = vec![0.0f64; cons];
    for (r, row) in a.iter().enumerate() {
        rhs[r] = row.iter().zip(&qv).map(|(c, v)| c * v).sum::<f64>() - 1.0;
    }

    let mut gram = vec![vec![0.0f64; cons]; cons];
    for r in 0..cons {
        for c in 0..cons {
            gram[r][c] = a[r].iter().zip(&a[c]).map(|(x, y)| x * y).sum();
        }
    }

    let lambda = gaussian_solve(gram, rhs);

    let mut pv = qv;
    for (r, row) in a.iter().enumerate() {
        for (v, coef) in pv.iter_mut().zip(row) {
            *v -= coef * lambda[r];
        }
    }

    let mut out = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            out.set(i, j, pv[i * m + j]);
        }
    }
    out
}

/// Classical two-sided Jacobi eigendecomposition of a symmetric matrix.
/// Returns eigenvalues in descending order with matching eigenvector
/// columns.
pub fn jacobi_eigen_sym(mat: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = mat.rows();
    assert_eq!(mat.cols(), n);
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| mat.row(i).to_vec()).collect();
    let mut v = vec![vec![0.0f64; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() < 1e-13 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, new_col, v[i][old_col]);
        }
    }
    (values, vectors)
}

// ---------------------------------------------------------------------------
// Metric oracles
// ---------------------------------------------------------------------------

fn compact(labels: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();
    labels
        .iter()
        .map(|l| seen.binary_search(l).unwrap())
        .collect()
}

/// Accuracy by exhaustive bijection enumeration over the padded label
/// alphabet (feasible for k ≤ ~8).
pub fn oracle_accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(pred.len(), truth.len());
    let p = compact(pred);
    let t = compact(truth);
    let kp = p.iter().max().map(|&m| m + 1).unwrap_or(0);
    let kt = t.iter().max().map(|&m| m + 1).unwrap_or(0);
    let k = kp.max(kt);
    let mut best = 0usize;
    for perm in all_permutations(k) {
        let matches = p
            .iter()
            .zip(&t)
            .filter(|&(&pi, &ti)| perm[pi] == ti)
            .count();
        best = best.max(matches);
    }
    best as f64 / pred.len() as f64
}

/// Pairwise F₁ by explicit double loop over all sample pairs.
pub fn oracle_fscore(pred: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(pred.len(), truth.len());
    let n = pred.len();
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for i in 0..n {
        for j in (i + 1)..n {
            let same_pred = pred[i] == pred[j];
            let same_true = truth[i] == truth[j];
            match (same_pred, same_true) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    if tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    2.0 * precision * recall / (precision + recall)
}

/// NMI with √(H·H) normalization via direct probability sums.
pub fn oracle_nmi(pred: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(pred.len(), truth.len());
    let n = pred.len() as f64;
    let p = compact(pred);
    let t = compact(truth);
    let kp = p.iter().max().map(|&m| m + 1).unwrap_or(0);
    let kt = t.iter().max().map(|&m| m + 1).unwrap_or(0);

    let mut joint = vec![vec![0.0f64; kt]; kp];
    let mut pc = vec![0.0f64; kp];
    let mut tc = vec![0.0f64; kt];
    for (&pi, &ti) in p.iter().zip(&t) {
        joint[pi][ti] += 1.0;
        pc[pi] += 1.0;
        tc[ti] += 1.0;
    }

    let mut mi = 0.0;
    for i in 0..kp {
        for j in 0..kt {
            if joint[i][j] > 0.0 {
                let pij = joint[i][j] / n;
                mi += pij * (pij / ((pc[i] / n) * (tc[j] / n))).ln();
            }
        }
    }
    let hp: f64 = pc
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| -(c / n) * (c / n).ln())
        .sum();
    let ht: f64 = tc
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| -(c / n) * (c / n).ln())
        .sum();
    if hp <= 0.0 || ht <= 0.0 {
        return 0.0;
    }
    (mi / (hp * ht).sqrt()).clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// Random test data
// ---------------------------------------------------------------------------

/// Random row-stochastic matrix with strictly positive entries.
pub fn random_stochastic(n: usize, m: usize, rng: &mut impl Rng) -> DenseMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / sum).collect()
        })
        .collect();
    DenseMatrix::from_rows(&rows).expect("well-formed rows")
}

/// Random matrix with entries in [-1, 1).
pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    let data: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    DenseMatrix::from_rows(&data).expect("well-formed rows")
}
