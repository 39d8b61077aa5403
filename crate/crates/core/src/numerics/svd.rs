//! Truncated singular value decomposition by one-sided Jacobi rotations.
//!
//! The matrices this crate decomposes are small on at least one side (the
//! anchor count), where Jacobi is simple, accurate, and fast enough. The
//! factors are always completed to full orthonormal column sets, so
//! rank-deficient inputs still yield usable orthogonal factors (needed by
//! the Procrustes anchor update and by spectral embedding).

use super::matrix::{complete_orthonormal_rows, DenseMatrix};
use crate::{Error, Result};

/// Convergence threshold on the normalized off-diagonal correlation of
/// column pairs, and the cap on full sweeps.
const JACOBI_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 1000;

#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows x r`, orthonormal columns.
    pub u: DenseMatrix,
    /// `r` singular values, non-increasing, nonnegative.
    pub sigma: Vec<f64>,
    /// `cols x r`, orthonormal columns.
    pub v: DenseMatrix,
}

impl Svd {
    /// `U * diag(sigma) * V^T`, the rank-r reconstruction.
    pub fn reconstruct(&self) -> DenseMatrix {
        let r = self.sigma.len();
        let mut scaled = self.u.clone();
        for i in 0..scaled.rows() {
            for (j, &s) in self.sigma.iter().enumerate().take(r) {
                scaled.set(i, j, scaled.get(i, j) * s);
            }
        }
        scaled
            .matmul_transposed(&self.v)
            .expect("factor shapes agree by construction")
    }
}

/// Best rank-`r` factorization of `m` in Frobenius norm.
pub fn truncated_svd(m: &DenseMatrix, r: usize) -> Result<Svd> {
    let min_dim = m.rows().min(m.cols());
    if r == 0 || r > min_dim {
        return Err(Error::invalid(format!(
            "truncated_svd: rank {r} out of range 1..={min_dim}"
        )));
    }
    if m.rows() >= m.cols() {
        let (u, sigma, v) = jacobi_svd_tall(m, r);
        Ok(Svd { u, sigma, v })
    } else {
        // Factor the transpose and swap the roles of U and V.
        let (u, sigma, v) = jacobi_svd_tall(&m.transpose(), r);
        Ok(Svd { u: v, sigma, v: u })
    }
}

/// One-sided Jacobi on a tall matrix (`rows >= cols`): rotate column pairs
/// of a working copy until all pairs are numerically orthogonal; the column
/// norms are the singular values and the accumulated rotations give V.
fn jacobi_svd_tall(m: &DenseMatrix, r: usize) -> (DenseMatrix, Vec<f64>, DenseMatrix) {
    let rows = m.rows();
    let cols = m.cols();

    // Column-major working copies.
    let mut w: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut max_off = 0.0f64;
        for p in 0..cols {
            for q in p + 1..cols {
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    a += w[p][i] * w[p][i];
                    b += w[q][i] * w[q][i];
                    c += w[p][i] * w[q][i];
                }
                if a == 0.0 || b == 0.0 {
                    continue;
                }
                let off = c.abs() / (a * b).sqrt();
                max_off = max_off.max(off);
                if off <= JACOBI_TOL {
                    continue;
                }
                // Rotation that zeroes the (p, q) cross-correlation.
                let zeta = (b - a) / (2.0 * c);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..rows {
                    let wp = w[p][i];
                    let wq = w[q][i];
                    w[p][i] = cs * wp - sn * wq;
                    w[q][i] = sn * wp + cs * wq;
                }
                for i in 0..cols {
                    let vp = v[p][i];
                    let vq = v[q][i];
                    v[p][i] = cs * vp - sn * vq;
                    v[q][i] = sn * vp + cs * vq;
                }
            }
        }
        if max_off <= JACOBI_TOL {
            break;
        }
    }

    // Singular values and their non-increasing order.
    let norms: Vec<f64> = w
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let sigma_max = norms[order[0]];
    let rank_tol = sigma_max * 1e-13;

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(r);
    let mut sigma = Vec::with_capacity(r);
    let mut v_cols: Vec<Vec<f64>> = Vec::with_capacity(r);
    for &idx in order.iter().take(r) {
        sigma.push(norms[idx]);
        v_cols.push(v[idx].clone());
        if norms[idx] > rank_tol {
            u_cols.push(w[idx].iter().map(|x| x / norms[idx]).collect());
        }
    }
    // Null-space columns get deterministic orthonormal fill-ins so U keeps
    // orthonormal columns even when m is rank deficient.
    complete_orthonormal_rows(&mut u_cols, rows, r);

    let mut u = DenseMatrix::zeros(rows, r);
    for (j, col) in u_cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            u.set(i, j, x);
        }
    }
    let mut v_out = DenseMatrix::zeros(cols, r);
    for (j, col) in v_cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            v_out.set(i, j, x);
        }
    }
    (u, sigma, v_out)
}
