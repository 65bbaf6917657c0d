//! Stratified cross-validation splits.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// A partition of example indices into validation folds.
#[derive(Debug, Clone)]
pub struct FoldPlan {
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Training and validation indices for one fold.
    pub fn train_val(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let val = self.folds[fold].clone();
        let train = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        (train, val)
    }
}

/// Splits indices into `k` folds, shuffling within each class and dealing
/// round-robin so every fold holds each class's share within one example.
pub fn stratified_folds(labels: &[usize], k: usize, rng: &mut Rng) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config("need at least 2 folds".into()));
    }
    if labels.len() < k {
        return Err(Error::Config(format!(
            "cannot split {} examples into {k} folds",
            labels.len()
        )));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut cursor = 0usize;
    for class in &mut by_class {
        rng.shuffle(class);
        if class.len() < k {
            log::warn!(
                "a class has {} examples, fewer than the {k} folds; some folds miss it",
                class.len()
            );
        }
        for &idx in class.iter() {
            folds[cursor % k].push(idx);
            cursor += 1;
        }
    }
    Ok(FoldPlan { folds })
}
