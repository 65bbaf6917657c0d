//! Cross-entropy loss and accuracy over logit rows.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Loss and logit gradient for one example. Uses the log-sum-exp shift, so
/// arbitrarily large logits stay finite.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange {
            label,
            n_classes: logits.len(),
        });
    }
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|l| (l - m).exp()).sum();
    let lse = m + sum.ln();
    let loss = lse - logits[label];
    let mut grad: Vec<f64> = logits.iter().map(|l| (l - lse).exp()).collect();
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Mean loss over a batch and the matching logit gradient (each row already
/// divided by the batch size).
pub fn batch_loss(logits: &DMatrix<f64>, labels: &[usize]) -> Result<(f64, DMatrix<f64>)> {
    if logits.nrows() != labels.len() {
        return Err(Error::ShapeMismatch {
            context: "batch labels",
            expected: logits.nrows(),
            got: labels.len(),
        });
    }
    let n = labels.len() as f64;
    let mut total = 0.0;
    let mut dlogits = DMatrix::zeros(logits.nrows(), logits.ncols());
    let mut row = vec![0.0; logits.ncols()];
    for (i, &label) in labels.iter().enumerate() {
        for j in 0..logits.ncols() {
            row[j] = logits[(i, j)];
        }
        let (loss, grad) = cross_entropy(&row, label)?;
        total += loss;
        for (j, g) in grad.iter().enumerate() {
            dlogits[(i, j)] = g / n;
        }
    }
    Ok((total / n, dlogits))
}

/// Index of the largest logit; ties go to the lowest index.
pub fn argmax_row(logits: &DMatrix<f64>, row: usize) -> usize {
    let mut best = 0;
    for j in 1..logits.ncols() {
        if logits[(row, j)] > logits[(row, best)] {
            best = j;
        }
    }
    best
}

/// Number of rows whose argmax matches the label.
pub fn correct_count(logits: &DMatrix<f64>, labels: &[usize]) -> usize {
    labels
        .iter()
        .enumerate()
        .filter(|&(i, &l)| argmax_row(logits, i) == l)
        .count()
}
