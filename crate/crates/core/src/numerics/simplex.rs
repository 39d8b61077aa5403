//! Euclidean projection onto the probability simplex.

use crate::{Error, Result};

/// Projects `y` onto `{z : z >= 0, sum(z) = 1}` in Euclidean norm using the
/// sort-and-threshold method, O(m log m). Because the output is nonnegative
/// and sums to one, every entry also lies in [0, 1].
pub fn project_simplex(y: &[f64]) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(Error::invalid("project_simplex: empty vector"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("project_simplex"));
    }

    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());

    // Largest rho with sorted[rho-1] - (prefix_sum(rho) - 1)/rho > 0.
    let mut prefix = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        prefix += u;
        let candidate = (prefix - 1.0) / (i as f64 + 1.0);
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }

    Ok(y.iter().map(|&v| (v - theta).max(0.0)).collect())
}
