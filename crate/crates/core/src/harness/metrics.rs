use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};

/// Magnitude above which a coordinate counts as nonzero for dense solvers.
pub const NONZERO_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityMetrics {
    /// Coordinates that are not exactly zero.
    pub nonzeros_exact: usize,
    /// Coordinates with `|x_i| > 1e-6`.
    pub nonzeros_thresholded: usize,
    pub support_precision: f64,
    pub support_recall: f64,
    pub support_f1: f64,
}

/// Support statistics of `x` against the planted `x_true`, using the exact
/// support of `x`.
pub fn sparsity_metrics(x: &DVector<f64>, x_true: &DVector<f64>) -> Result<SparsityMetrics> {
    check_len("sparsity_metrics", x_true.len(), x.len())?;
    let mut hits = 0usize;
    let mut predicted = 0usize;
    let mut actual = 0usize;
    let mut thresholded = 0usize;
    for (v, t) in x.iter().zip(x_true.iter()) {
        let est = *v != 0.0;
        let tru = *t != 0.0;
        predicted += est as usize;
        actual += tru as usize;
        hits += (est && tru) as usize;
        thresholded += (v.abs() > NONZERO_THRESHOLD) as usize;
    }
    let ratio = |num: usize, den: usize, empty: f64| if den == 0 { empty } else { num as f64 / den as f64 };
    // An empty estimate of an empty truth is a perfect recovery.
    let precision = ratio(hits, predicted, if actual == 0 { 1.0 } else { 0.0 });
    let recall = ratio(hits, actual, 1.0);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(SparsityMetrics {
        nonzeros_exact: predicted,
        nonzeros_thresholded: thresholded,
        support_precision: precision,
        support_recall: recall,
        support_f1: f1,
    })
}
