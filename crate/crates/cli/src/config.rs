//! Run configuration: defaults, then a key=value file, then flag overrides.

use std::path::{Path, PathBuf};

use setinject::data::{gen_synthetic, load_tu, Dataset, FeatureKind, SyntheticTask};
use setinject::error::{Error, Result};
use setinject::rng::Rng;
use setinject::train::TrainConfig;

pub const VALID_KEYS: &[&str] = &[
    "dataset",
    "feature_kind",
    "variant",
    "lr0",
    "epochs",
    "batch_size",
    "hidden",
    "layers",
    "seed",
    "normalize",
    "batch_norm",
    "gin_epsilon",
    "premix_seed",
    "m_n",
    "folds",
    "out_dir",
    "synthetic_n",
    "synthetic_min",
    "synthetic_max",
    "data_seed",
];

/// Flag-level overrides shared by `train`, `cv`, and `export-embeddings`.
/// Every field mirrors a config-file key and wins over it when set.
#[derive(Debug, Default, clap::Args)]
pub struct Overrides {
    /// TU dataset directory, or synthetic:cycle-vs-chord / synthetic:two-community-attr
    #[arg(long, value_name = "PATH|synthetic:TASK")]
    pub dataset: Option<String>,
    /// Node features for TU datasets: one-hot, all-ones, or continuous
    #[arg(long, value_name = "KIND")]
    pub feature_kind: Option<String>,
    /// Model variant: exp-fixed, exp-mlp, exp-fi-fixed, exp-fi-mlp, gin-final
    #[arg(long, value_name = "NAME")]
    pub variant: Option<String>,
    /// Initial learning rate (halves every 50 epochs)
    #[arg(long, value_name = "LR")]
    pub lr0: Option<f64>,
    #[arg(long, value_name = "N")]
    pub epochs: Option<usize>,
    #[arg(long, value_name = "N")]
    pub batch_size: Option<usize>,
    /// Hidden width of every MLP
    #[arg(long, value_name = "N")]
    pub hidden: Option<usize>,
    /// Number of message-passing layers
    #[arg(long, value_name = "N")]
    pub layers: Option<usize>,
    /// Seed for parameter init, batch order, and fold assignment
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Apply the M-th-root first-coordinate normalization in fixed layers
    #[arg(long, value_name = "BOOL")]
    pub normalize: Option<bool>,
    /// Batch-normalize MLP hidden layers
    #[arg(long, value_name = "BOOL")]
    pub batch_norm: Option<bool>,
    /// Self-weight offset for the gin-final variant
    #[arg(long, value_name = "EPS")]
    pub gin_epsilon: Option<f64>,
    /// Premix fixed-layer inputs with seeded random rotations
    #[arg(long, value_name = "SEED")]
    pub premix_seed: Option<u64>,
    /// Override the aggregation capacity (default: dataset max degree)
    #[arg(long, value_name = "M")]
    pub m_n: Option<usize>,
    /// Cross-validation fold count
    #[arg(long, value_name = "K")]
    pub folds: Option<usize>,
    /// Directory for report.json, curves.csv, and checkpoint.json
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Synthetic dataset size
    #[arg(long, value_name = "N")]
    pub synthetic_n: Option<usize>,
    /// Smallest synthetic graph (nodes)
    #[arg(long, value_name = "N")]
    pub synthetic_min: Option<usize>,
    /// Largest synthetic graph (nodes)
    #[arg(long, value_name = "N")]
    pub synthetic_max: Option<usize>,
    /// Seed for synthetic dataset generation
    #[arg(long, value_name = "SEED")]
    pub data_seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset: Option<String>,
    pub feature_kind: Option<FeatureKind>,
    pub out_dir: Option<PathBuf>,
    pub synthetic_n: usize,
    pub synthetic_min: usize,
    pub synthetic_max: usize,
    pub data_seed: u64,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            feature_kind: None,
            out_dir: None,
            synthetic_n: 200,
            synthetic_min: 5,
            synthetic_max: 9,
            data_seed: 0,
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(file: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
        let mut rc = RunConfig::default();
        if let Some(path) = file {
            rc.apply_file(path)?;
        }
        rc.apply_overrides(overrides)?;
        Ok(rc)
    }

    fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|_| Error::MissingFile(path.display().to_string()))?;
        let fname = path.display().to_string();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                file: fname.clone(),
                line: i + 1,
                msg: format!("expected key=value, found {line:?}"),
            })?;
            self.set(key.trim(), value.trim(), &fname, i + 1)?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str, file: &str, line: usize) -> Result<()> {
        fn parse<T: std::str::FromStr>(v: &str, file: &str, line: usize) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e| Error::Parse {
                file: file.to_string(),
                line,
                msg: format!("bad value {v:?}: {e}"),
            })
        }
        match key {
            "dataset" => self.dataset = Some(value.to_string()),
            "feature_kind" => self.feature_kind = Some(parse(value, file, line)?),
            "variant" => self.train.variant = parse(value, file, line)?,
            "lr0" => self.train.lr0 = parse(value, file, line)?,
            "epochs" => self.train.epochs = parse(value, file, line)?,
            "batch_size" => self.train.batch_size = parse(value, file, line)?,
            "hidden" => self.train.hidden = parse(value, file, line)?,
            "layers" => self.train.n_layers = parse(value, file, line)?,
            "seed" => self.train.seed = parse(value, file, line)?,
            "normalize" => self.train.normalize = parse(value, file, line)?,
            "batch_norm" => self.train.batch_norm = parse(value, file, line)?,
            "gin_epsilon" => self.train.gin_epsilon = parse(value, file, line)?,
            "premix_seed" => self.train.premix_seed = Some(parse(value, file, line)?),
            "m_n" => self.train.m_n_override = Some(parse(value, file, line)?),
            "folds" => self.train.folds = parse(value, file, line)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            "synthetic_n" => self.synthetic_n = parse(value, file, line)?,
            "synthetic_min" => self.synthetic_min = parse(value, file, line)?,
            "synthetic_max" => self.synthetic_max = parse(value, file, line)?,
            "data_seed" => self.data_seed = parse(value, file, line)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown key {other:?} in {file}:{line} (valid keys: {})",
                    VALID_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    fn apply_overrides(&mut self, o: &Overrides) -> Result<()> {
        if let Some(v) = &o.dataset {
            self.dataset = Some(v.clone());
        }
        if let Some(v) = &o.feature_kind {
            self.feature_kind = Some(v.parse()?);
        }
        if let Some(v) = &o.variant {
            self.train.variant = v.parse()?;
        }
        if let Some(v) = o.lr0 {
            self.train.lr0 = v;
        }
        if let Some(v) = o.epochs {
            self.train.epochs = v;
        }
        if let Some(v) = o.batch_size {
            self.train.batch_size = v;
        }
        if let Some(v) = o.hidden {
            self.train.hidden = v;
        }
        if let Some(v) = o.layers {
            self.train.n_layers = v;
        }
        if let Some(v) = o.seed {
            self.train.seed = v;
        }
        if let Some(v) = o.normalize {
            self.train.normalize = v;
        }
        if let Some(v) = o.batch_norm {
            self.train.batch_norm = v;
        }
        if let Some(v) = o.gin_epsilon {
            self.train.gin_epsilon = v;
        }
        if let Some(v) = o.premix_seed {
            self.train.premix_seed = Some(v);
        }
        if let Some(v) = o.m_n {
            self.train.m_n_override = Some(v);
        }
        if let Some(v) = o.folds {
            self.train.folds = v;
        }
        if let Some(v) = &o.out {
            self.out_dir = Some(v.clone());
        }
        if let Some(v) = o.synthetic_n {
            self.synthetic_n = v;
        }
        if let Some(v) = o.synthetic_min {
            self.synthetic_min = v;
        }
        if let Some(v) = o.synthetic_max {
            self.synthetic_max = v;
        }
        if let Some(v) = o.data_seed {
            self.data_seed = v;
        }
        Ok(())
    }

    pub fn resolve_dataset(&self) -> Result<Dataset> {
        let spec = self.dataset.as_deref().ok_or_else(|| {
            Error::Config(
                "no dataset configured; set dataset= in the config file or pass --dataset".into(),
            )
        })?;
        if let Some(task) = spec.strip_prefix("synthetic:") {
            let task: SyntheticTask = task.parse()?;
            if self.feature_kind.is_some() {
                log::warn!("feature_kind is ignored for synthetic datasets");
            }
            gen_synthetic(
                task,
                self.synthetic_n,
                self.synthetic_min,
                self.synthetic_max,
                &mut Rng::seed_from(self.data_seed),
            )
        } else {
            let kind = self.feature_kind.unwrap_or(FeatureKind::OneHotLabel);
            load_tu(Path::new(spec), kind)
        }
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out_dir.as_deref().ok_or_else(|| {
            Error::Config(
                "no output directory configured; set out_dir= in the config file or pass --out"
                    .into(),
            )
        })
    }
}
