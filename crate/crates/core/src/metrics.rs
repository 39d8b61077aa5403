//! Clustering evaluation: best-map accuracy, normalized mutual information,
//! and pairwise F-score.
//!
//! Conventions (stated in every serialized report so numbers are
//! interpretable): ACC matches predicted to true labels with an optimal
//! bijection found by linear assignment on the contingency table; NMI is
//! normalized by the square root of the two label entropies; the F-score is
//! the F₁ of same-cluster decisions over all sample pairs.

use crate::numerics::{linear_assignment_max, DenseMatrix};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;

/// Evaluation summary for one clustering against ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub acc: f64,
    pub nmi: f64,
    pub fscore: f64,
    pub n: usize,
    pub k_pred: usize,
    pub k_true: usize,
}

impl MetricsReport {
    /// All three metrics for `pred` against `truth`.
    pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<Self> {
        let table = Contingency::build(pred, truth)?;
        if table.n < 2 {
            return Err(Error::invalid(
                "metrics: need at least 2 samples for a full report",
            ));
        }
        Ok(Self {
            acc: accuracy_from_table(&table),
            nmi: nmi_from_table(&table),
            fscore: fscore_from_table(&table),
            n: table.n,
            k_pred: table.k_pred,
            k_true: table.k_true,
        })
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# acc: best-map via linear assignment; nmi: sqrt(H*H) normalization; \
             fscore: pairwise F1"
        )?;
        writeln!(f, "acc={:.6}", self.acc)?;
        writeln!(f, "nmi={:.6}", self.nmi)?;
        writeln!(f, "fscore={:.6}", self.fscore)?;
        writeln!(f, "n={}", self.n)?;
        writeln!(f, "k_pred={}", self.k_pred)?;
        write!(f, "k_true={}", self.k_true)
    }
}

/// Best-map clustering accuracy: the max over label bijections of the
/// fraction of samples whose mapped predicted label equals the true label.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(accuracy_from_table(&Contingency::build(pred, truth)?))
}

/// Normalized mutual information, I(pred; truth) / sqrt(H(pred) * H(truth)).
/// Degenerate single-cluster labelings (zero entropy) yield 0 by convention.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(nmi_from_table(&Contingency::build(pred, truth)?))
}

/// Pairwise F₁: precision and recall of "same cluster" decisions over all
/// n(n-1)/2 sample pairs, computed from contingency counts in O(k²).
pub fn pairwise_fscore(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = Contingency::build(pred, truth)?;
    if table.n < 2 {
        return Err(Error::invalid("pairwise_fscore: need at least 2 samples"));
    }
    Ok(fscore_from_table(&table))
}

/// Joint label counts: `counts[i][j]` = samples with true label index `i`
/// and predicted label index `j`, after compacting raw labels to 0..k.
struct Contingency {
    counts: Vec<Vec<usize>>,
    true_totals: Vec<usize>,
    pred_totals: Vec<usize>,
    n: usize,
    k_true: usize,
    k_pred: usize,
}

impl Contingency {
    fn build(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::shape(
                "metrics labels",
                format!("pred length {}", pred.len()),
                format!("truth length {}", truth.len()),
            ));
        }
        if pred.is_empty() {
            return Err(Error::invalid("metrics: empty label vectors"));
        }
        let true_ids = compact_labels(truth);
        let pred_ids = compact_labels(pred);
        let k_true = true_ids.len();
        let k_pred = pred_ids.len();
        let mut counts = vec![vec![0usize; k_pred]; k_true];
        for (&p, &t) in pred.iter().zip(truth) {
            counts[true_ids[&t]][pred_ids[&p]] += 1;
        }
        let true_totals: Vec<usize> = counts.iter().map(|row| row.iter().sum()).collect();
        let mut pred_totals = vec![0usize; k_pred];
        for row in &counts {
            for (tot, &c) in pred_totals.iter_mut().zip(row) {
                *tot += c;
            }
        }
        Ok(Self {
            counts,
            true_totals,
            pred_totals,
            n: pred.len(),
            k_true,
            k_pred,
        })
    }
}

/// Raw label -> dense index, assigned in sorted label order for determinism.
fn compact_labels(labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut ids = BTreeMap::new();
    for &l in labels {
        ids.entry(l).or_insert(0);
    }
    for (next, id) in ids.values_mut().enumerate() {
        *id = next;
    }
    ids
}

fn accuracy_from_table(table: &Contingency) -> f64 {
    let k = table.k_true.max(table.k_pred);
    let mut scores = DenseMatrix::zeros(k, k);
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            scores.set(i, j, c as f64);
        }
    }
    let matched = linear_assignment_max(&scores)
        .expect("contingency scores are finite and square")
        .total_score;
    matched / table.n as f64
}

fn nmi_from_table(table: &Contingency) -> f64 {
    let n = table.n as f64;
    let entropy = |totals: &[usize]| -> f64 {
        totals
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_true = entropy(&table.true_totals);
    let h_pred = entropy(&table.pred_totals);
    if h_true <= 0.0 || h_pred <= 0.0 {
        return 0.0;
    }
    let mut mutual = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let p_joint = c as f64 / n;
            let p_true = table.true_totals[i] as f64 / n;
            let p_pred = table.pred_totals[j] as f64 / n;
            mutual += p_joint * (p_joint / (p_true * p_pred)).ln();
        }
    }
    // Rounding can push I a hair past sqrt(H*H) when the labelings agree.
    (mutual / (h_true * h_pred).sqrt()).clamp(0.0, 1.0)
}

fn fscore_from_table(table: &Contingency) -> f64 {
    let pairs = |c: usize| (c * c.saturating_sub(1) / 2) as f64;
    let tp: f64 = table
        .counts
        .iter()
        .flatten()
        .map(|&c| pairs(c))
        .sum();
    let true_pairs: f64 = table.true_totals.iter().map(|&c| pairs(c)).sum();
    let pred_pairs: f64 = table.pred_totals.iter().map(|&c| pairs(c)).sum();
    if tp == 0.0 || true_pairs == 0.0 || pred_pairs == 0.0 {
        return 0.0;
    }
    let precision = tp / pred_pairs;
    let recall = tp / true_pairs;
    2.0 * precision * recall / (precision + recall)
}
