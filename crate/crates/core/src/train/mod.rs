//! Training loop and the cross-validation protocol.
//!
//! Folds train independently (in parallel) from fold-specific seeds, so the
//! outcome does not depend on thread scheduling. The reported epoch is the
//! one with the best validation accuracy averaged over folds; ties pick the
//! earliest epoch. Training accuracy comes from the training-mode logits of
//! each optimization batch rather than a second evaluation pass.

mod adam;
mod folds;
mod loss;

pub use adam::Adam;
pub use folds::{stratified_folds, FoldPlan};
pub use loss::{argmax_row, batch_loss, correct_count, cross_entropy};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gnn::{Mode, Model, ModelConfig, Variant};
use crate::graph::Graph;
use crate::rng::Rng;

/// Hyperparameters for one training run or cross-validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: Variant,
    pub lr0: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden: usize,
    pub n_layers: usize,
    pub seed: u64,
    pub normalize: bool,
    pub batch_norm: bool,
    pub gin_epsilon: f64,
    pub premix_seed: Option<u64>,
    /// Overrides the dataset's maximum degree as the fixed-transform capacity.
    pub m_n_override: Option<usize>,
    pub folds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: Variant::ExpFixed,
            lr0: 0.01,
            epochs: 300,
            batch_size: 32,
            hidden: 32,
            n_layers: 5,
            seed: 0,
            normalize: true,
            batch_norm: true,
            gin_epsilon: 0.0,
            premix_seed: None,
            m_n_override: None,
            folds: 10,
        }
    }
}

/// Step-decay schedule: the rate halves every 50 epochs.
pub fn lr_at(lr0: f64, epoch: usize) -> f64 {
    lr0 * 0.5f64.powi((epoch / 50) as i32)
}

/// Which split a curve row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Val,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
        })
    }
}

/// One point on a learning curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRow {
    pub fold: usize,
    pub epoch: usize,
    pub split: Split,
    pub accuracy: f64,
    pub loss: f64,
}

/// Cross-validation summary written to `report.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub dataset: String,
    pub checksum: String,
    pub n_graphs: usize,
    pub n_classes: usize,
    pub feat_dim: usize,
    pub feature_kind: String,
    pub variant: String,
    pub param_count: usize,
    pub config: TrainConfig,
    pub best_epoch: usize,
    pub mean_val_accuracy: f64,
    pub std_val_accuracy: f64,
    pub fold_val_accuracy: Vec<f64>,
    pub fold_train_accuracy: Vec<f64>,
}

fn model_config(ds: &Dataset, cfg: &TrainConfig) -> ModelConfig {
    ModelConfig {
        variant: cfg.variant,
        n_layers: cfg.n_layers,
        hidden: cfg.hidden,
        in_dim: ds.feat_dim(),
        n_classes: ds.n_classes,
        m_n: cfg.m_n_override.unwrap_or(ds.m_n),
        normalize: cfg.normalize,
        batch_norm: cfg.batch_norm,
        gin_epsilon: cfg.gin_epsilon,
        premix_seed: cfg.premix_seed,
        seed: 0,
    }
}

fn check_trainable(ds: &Dataset, cfg: &TrainConfig) -> Result<()> {
    if ds.n_classes < 2 {
        return Err(Error::Config(format!(
            "dataset {} has {} class(es); training needs at least two",
            ds.source, ds.n_classes
        )));
    }
    if cfg.epochs == 0 {
        return Err(Error::Config("epochs must be at least 1".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    Ok(())
}

/// Trains one model on `train_idx`, optionally tracking a validation split.
fn train_on(
    ds: &Dataset,
    cfg: &TrainConfig,
    fold_id: usize,
    train_idx: &[usize],
    val_idx: &[usize],
) -> Result<(Model, Vec<EpochRow>)> {
    let mut mc = model_config(ds, cfg);
    let mut fold_rng = Rng::seed_from(cfg.seed).child(fold_id as u64 + 1);
    mc.seed = fold_rng.next_u64();
    let mut shuffle_rng = fold_rng.child(2);
    let mut model = Model::init(&mc)?;
    let mut params = model.collect_params();
    let mut adam = Adam::new(params.len());

    let graphs_of = |idx: &[usize]| -> (Vec<&Graph>, Vec<usize>) {
        let refs: Vec<&Graph> = idx.iter().map(|&i| &ds.graphs[i]).collect();
        let labels: Vec<usize> = idx
            .iter()
            .map(|&i| ds.graphs[i].label.expect("dataset graphs are labeled"))
            .collect();
        (refs, labels)
    };

    let mut order = train_idx.to_vec();
    let mut rows = Vec::with_capacity(cfg.epochs * 2);
    for epoch in 0..cfg.epochs {
        let lr = lr_at(cfg.lr0, epoch);
        shuffle_rng.shuffle(&mut order);
        let mut correct = 0usize;
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let (refs, labels) = graphs_of(chunk);
            let out = model.forward_train(&refs)?;
            let (loss, dlogits) = batch_loss(&out.logits, &labels)?;
            let tape = out.tape.expect("train mode records a tape");
            let grads = model.backward(&tape, &dlogits)?;
            adam.step(&mut params, &grads.params, lr)?;
            model.set_params(&params)?;
            correct += correct_count(&out.logits, &labels);
            loss_sum += loss * chunk.len() as f64;
        }
        let n = train_idx.len() as f64;
        rows.push(EpochRow {
            fold: fold_id,
            epoch,
            split: Split::Train,
            accuracy: correct as f64 / n,
            loss: loss_sum / n,
        });
        if !val_idx.is_empty() {
            let (refs, labels) = graphs_of(val_idx);
            let out = model.forward(&refs, Mode::Eval)?;
            let (loss, _) = batch_loss(&out.logits, &labels)?;
            rows.push(EpochRow {
                fold: fold_id,
                epoch,
                split: Split::Val,
                accuracy: correct_count(&out.logits, &labels) as f64 / labels.len() as f64,
                loss,
            });
        }
    }
    Ok((model, rows))
}

/// Trains on the whole dataset; fold 0 in the curves, no validation rows.
pub fn train_full(ds: &Dataset, cfg: &TrainConfig) -> Result<(Model, Vec<EpochRow>)> {
    check_trainable(ds, cfg)?;
    let all: Vec<usize> = (0..ds.len()).collect();
    train_on(ds, cfg, 0, &all, &[])
}

/// Earliest epoch with the highest mean validation accuracy.
pub(crate) fn pick_best_epoch(mean_val_acc: &[f64]) -> usize {
    let mut best = 0;
    for (e, &acc) in mean_val_acc.iter().enumerate() {
        if acc > mean_val_acc[best] {
            best = e;
        }
    }
    best
}

/// Runs stratified k-fold cross-validation; folds train in parallel.
pub fn run_cv(ds: &Dataset, cfg: &TrainConfig) -> Result<(CvReport, Vec<EpochRow>)> {
    check_trainable(ds, cfg)?;
    let labels = ds.labels();
    let plan = stratified_folds(&labels, cfg.folds, &mut Rng::seed_from(cfg.seed))?;
    let k = cfg.folds;

    let results: Vec<Result<(Model, Vec<EpochRow>)>> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let (train_idx, val_idx) = plan.train_val(fold);
            train_on(ds, cfg, fold, &train_idx, &val_idx)
        })
        .collect();
    let mut models = Vec::with_capacity(k);
    let mut rows = Vec::with_capacity(k * cfg.epochs * 2);
    for r in results {
        let (model, fold_rows) = r?;
        models.push(model);
        rows.extend(fold_rows);
    }

    let mut val_acc = vec![vec![0.0; cfg.epochs]; k];
    let mut train_acc = vec![vec![0.0; cfg.epochs]; k];
    for row in &rows {
        match row.split {
            Split::Val => val_acc[row.fold][row.epoch] = row.accuracy,
            Split::Train => train_acc[row.fold][row.epoch] = row.accuracy,
        }
    }
    let mean_by_epoch: Vec<f64> = (0..cfg.epochs)
        .map(|e| val_acc.iter().map(|f| f[e]).sum::<f64>() / k as f64)
        .collect();
    let best_epoch = pick_best_epoch(&mean_by_epoch);
    let fold_val_accuracy: Vec<f64> = (0..k).map(|f| val_acc[f][best_epoch]).collect();
    let fold_train_accuracy: Vec<f64> = (0..k).map(|f| train_acc[f][best_epoch]).collect();
    let mean = mean_by_epoch[best_epoch];
    let std = (fold_val_accuracy
        .iter()
        .map(|a| (a - mean) * (a - mean))
        .sum::<f64>()
        / k as f64)
        .sqrt();

    let report = CvReport {
        dataset: ds.source.clone(),
        checksum: ds.checksum.clone(),
        n_graphs: ds.len(),
        n_classes: ds.n_classes,
        feat_dim: ds.feat_dim(),
        feature_kind: ds.feature_kind.to_string(),
        variant: cfg.variant.to_string(),
        param_count: models[0].param_count(),
        config: cfg.clone(),
        best_epoch,
        mean_val_accuracy: mean,
        std_val_accuracy: std,
        fold_val_accuracy,
        fold_train_accuracy,
    };
    Ok((report, rows))
}

/// Writes curves as `fold,epoch,split,accuracy,loss`. When several folds are
/// present, fold-averaged rows labeled `mean` follow the per-fold rows.
pub fn write_curves(rows: &[EpochRow], w: &mut impl std::io::Write) -> Result<()> {
    writeln!(w, "fold,epoch,split,accuracy,loss")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.fold, r.epoch, r.split, r.accuracy, r.loss)?;
    }
    let n_folds = rows.iter().map(|r| r.fold).max().map_or(0, |m| m + 1);
    if n_folds > 1 {
        use std::collections::BTreeMap;
        let mut acc: BTreeMap<(usize, u8), (f64, f64, usize)> = BTreeMap::new();
        for r in rows {
            let key = (r.epoch, matches!(r.split, Split::Val) as u8);
            let e = acc.entry(key).or_insert((0.0, 0.0, 0));
            e.0 += r.accuracy;
            e.1 += r.loss;
            e.2 += 1;
        }
        for ((epoch, is_val), (a, l, n)) in acc {
            let split = if is_val == 1 { "val" } else { "train" };
            writeln!(w, "mean,{},{},{},{}", epoch, split, a / n as f64, l / n as f64)?;
        }
    }
    Ok(())
}

/// Pretty-printed JSON report with a trailing newline.
pub fn write_report(report: &CvReport, w: &mut impl std::io::Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, report)?;
    writeln!(w)?;
    Ok(())
}
