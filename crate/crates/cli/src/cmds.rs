//! Subcommand implementations. Each returns the process exit code on the
//! success path; errors bubble to `main`, which maps them to 1 or 2.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use setinject::codec::{
    decode_multiset, denormalize_g, encode_multiset, phi_width, random_premix, DecodeResult,
    PowerEncoding, Premix,
};
use setinject::data::Dataset;
use setinject::error::{Error, Result};
use setinject::gnn::{load_checkpoint, save_checkpoint};
use setinject::multiset::{FeatVec, Multiset};
use setinject::rng::Rng;
use setinject::train::{run_cv, train_full, write_curves, write_report, Split, TrainConfig};
use setinject::wl::wl_distinguishes;

use crate::config::{Overrides, RunConfig};
use crate::graphio;

fn join_csv(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Significant (non-blank, non-comment) lines with 1-based numbers.
fn significant_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|_| Error::MissingFile(path.display().to_string()))
}

fn write_out(path: Option<&Path>, body: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// CSV of elements, one comma-separated row per element
    #[arg(short, long, value_name = "FILE")]
    pub input: PathBuf,
    /// Capacity bound M (at least the number of elements)
    #[arg(short = 'm', long = "cap", value_name = "M")]
    pub m: usize,
    /// Write the encoding row here instead of stdout
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Element dimension, needed only when the input file is empty
    #[arg(short, long, value_name = "D", default_value_t = 1)]
    pub dim: usize,
    /// Replace each first coordinate by its signed M-th root before encoding
    #[arg(long)]
    pub normalize: bool,
    /// Rotate every element by a seeded random orthogonal matrix first
    #[arg(long, value_name = "SEED")]
    pub premix_seed: Option<u64>,
    /// Where to save the premix matrix (default: OUTPUT.premix.json)
    #[arg(long, value_name = "FILE")]
    pub premix_out: Option<PathBuf>,
}

fn read_elements(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = read_to_string(path)?;
    let fname = path.display().to_string();
    let mut rows = Vec::new();
    for (ln, line) in significant_lines(&text) {
        let row: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|e| Error::Parse {
                    file: fname.clone(),
                    line: ln,
                    msg: format!("bad value {t:?}: {e}"),
                })
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn encode(a: &EncodeArgs) -> Result<i32> {
    let rows = read_elements(&a.input)?;
    let x = if rows.is_empty() {
        Multiset::new(Vec::new(), a.dim, a.m)?
    } else {
        Multiset::from_rows(&rows, a.m)?
    };
    let premix = a
        .premix_seed
        .map(|s| random_premix(x.dim(), &mut Rng::seed_from(s)));
    if premix.is_some() && a.output.is_none() && a.premix_out.is_none() {
        return Err(Error::Config(
            "premixed encodings need --output or --premix-out so the matrix can be saved".into(),
        ));
    }
    let enc = encode_multiset(&x, a.m, a.normalize, premix.as_ref())?;
    write_out(a.output.as_deref(), &format!("{}\n", join_csv(enc.values())))?;
    if let Some(p) = &premix {
        let path = a.premix_out.clone().unwrap_or_else(|| {
            let o = a.output.as_ref().expect("checked above");
            PathBuf::from(format!("{}.premix.json", o.display()))
        });
        let mut f = std::fs::File::create(&path)?;
        serde_json::to_writer_pretty(&mut f, p)?;
        writeln!(f)?;
        log::info!("premix matrix saved to {}", path.display());
    }
    Ok(0)
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// File holding one encoding row of d*M+1 comma-separated values
    #[arg(short, long, value_name = "FILE")]
    pub input: PathBuf,
    /// Capacity bound M used at encode time
    #[arg(short = 'm', long = "cap", value_name = "M")]
    pub m: usize,
    /// Element dimension d used at encode time
    #[arg(short, long, value_name = "D", default_value_t = 1)]
    pub dim: usize,
    /// Premix matrix saved by encode; recovered elements are rotated back
    #[arg(long, value_name = "FILE")]
    pub premix_file: Option<PathBuf>,
    /// Undo the M-th-root normalization applied at encode time
    #[arg(long)]
    pub normalize: bool,
    /// Relative tolerance for accepting a reconstruction
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Write the result here instead of stdout
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

pub fn decode(a: &DecodeArgs) -> Result<i32> {
    let text = read_to_string(&a.input)?;
    let fname = a.input.display().to_string();
    let (ln, row) = significant_lines(&text).next().ok_or_else(|| Error::Parse {
        file: fname.clone(),
        line: 1,
        msg: "no encoding row found".into(),
    })?;
    let values: Vec<f64> = row
        .split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|e| Error::Parse {
                file: fname.clone(),
                line: ln,
                msg: format!("bad value {t:?}: {e}"),
            })
        })
        .collect::<Result<_>>()?;
    if values.len() != phi_width(a.dim, a.m) {
        return Err(Error::Config(format!(
            "row has {} values but d={}, M={} needs {}",
            values.len(),
            a.dim,
            a.m,
            phi_width(a.dim, a.m)
        )));
    }
    let premix: Option<Premix> = match &a.premix_file {
        Some(p) => {
            let pm: Premix = serde_json::from_str(&read_to_string(p)?)?;
            if pm.dim() != a.dim {
                return Err(Error::ShapeMismatch {
                    context: "premix dimension",
                    expected: a.dim,
                    got: pm.dim(),
                });
            }
            Some(pm)
        }
        None => None,
    };

    let enc = PowerEncoding::new(a.dim, a.m, values)?;
    let mut body = String::new();
    let code = match decode_multiset(&enc, a.tol) {
        DecodeResult::Full { elements, residual } => {
            body.push_str("# status: full\n");
            body.push_str(&format!("# residual: {residual:e}\n"));
            for el in elements.canonical_order() {
                let mut el = el.clone();
                if a.normalize {
                    el = denormalize_g(&el, a.m);
                }
                let coords = match &premix {
                    Some(p) => p.apply_inverse(el.as_slice()),
                    None => el.as_slice().to_vec(),
                };
                body.push_str(&join_csv(&coords));
                body.push('\n');
            }
            0
        }
        DecodeResult::PartialGroups { groups, residual } => {
            body.push_str("# status: partial\n");
            body.push_str(&format!("# residual: {residual:e}\n"));
            body.push_str("# tied first coordinates: only group sums are determined\n");
            if premix.is_some() {
                body.push_str("# values are in the premixed basis\n");
            }
            body.push_str("# columns: group,value,multiplicity,coord_sums...\n");
            for g in &groups {
                let value = if a.normalize {
                    denormalize_g(&FeatVec::new(vec![g.value])?, a.m).as_slice()[0]
                } else {
                    g.value
                };
                body.push_str(&format!("group,{},{}", value, g.multiplicity));
                for s in &g.coord_sums {
                    body.push_str(&format!(",{s}"));
                }
                body.push('\n');
            }
            0
        }
        DecodeResult::Failed { reason } => {
            body.push_str("# status: failed\n");
            body.push_str(&format!("# reason: {reason}\n"));
            1
        }
    };
    write_out(a.output.as_deref(), &body)?;
    Ok(code)
}

#[derive(Debug, Args)]
#[command(after_help = "Graph file format: first significant line is the node count n, the next n \
lines hold one comma-separated feature vector per node, and every following \
line is an undirected edge u,v with 0-based endpoints. Blank lines and lines \
starting with # are skipped.")]
pub struct WlArgs {
    /// First graph file
    pub a: PathBuf,
    /// Second graph file
    pub b: PathBuf,
    /// Refinement rounds to try; 0 compares initial colors only
    #[arg(long, default_value_t = 10, value_name = "K")]
    pub kmax: usize,
}

pub fn wl_compare(a: &WlArgs) -> Result<i32> {
    let ga = graphio::read_graph(&a.a)?;
    let gb = graphio::read_graph(&a.b)?;
    match wl_distinguishes(&ga, &gb, a.kmax) {
        Some(k) => println!("{k}"),
        None => println!("indistinguishable"),
    }
    Ok(0)
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// key=value run configuration file; flags override file values
    #[arg(short, long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Summary written by `train`; `cv` writes the richer fold report.
#[derive(serde::Serialize)]
struct TrainReport<'a> {
    dataset: &'a str,
    checksum: &'a str,
    n_graphs: usize,
    n_classes: usize,
    feat_dim: usize,
    feature_kind: String,
    variant: String,
    param_count: usize,
    config: &'a TrainConfig,
    final_train_accuracy: f64,
    final_train_loss: f64,
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn train(a: &RunArgs) -> Result<i32> {
    let rc = RunConfig::load(a.config.as_deref(), &a.overrides)?;
    let ds = rc.resolve_dataset()?;
    let out = rc.out_dir()?.to_path_buf();
    std::fs::create_dir_all(&out)?;

    let (model, rows) = train_full(&ds, &rc.train)?;
    let mut curves = create(&out.join("curves.csv"))?;
    write_curves(&rows, &mut curves)?;
    curves.flush()?;

    let last = rows
        .iter()
        .rev()
        .find(|r| r.split == Split::Train)
        .expect("at least one epoch");
    let report = TrainReport {
        dataset: &ds.source,
        checksum: &ds.checksum,
        n_graphs: ds.len(),
        n_classes: ds.n_classes,
        feat_dim: ds.feat_dim(),
        feature_kind: ds.feature_kind.to_string(),
        variant: rc.train.variant.to_string(),
        param_count: model.param_count(),
        config: &rc.train,
        final_train_accuracy: last.accuracy,
        final_train_loss: last.loss,
    };
    let mut f = create(&out.join("report.json"))?;
    serde_json::to_writer_pretty(&mut f, &report)?;
    writeln!(f)?;
    f.flush()?;
    save_checkpoint(&model, &out.join("checkpoint.json"))?;

    println!(
        "trained {} for {} epochs on {} ({} graphs): train accuracy {:.4}, loss {:.4}",
        report.variant,
        rc.train.epochs,
        report.dataset,
        report.n_graphs,
        last.accuracy,
        last.loss
    );
    println!("artifacts in {}", out.display());
    Ok(0)
}

pub fn cv(a: &RunArgs) -> Result<i32> {
    let rc = RunConfig::load(a.config.as_deref(), &a.overrides)?;
    let ds = rc.resolve_dataset()?;
    let out = rc.out_dir()?.to_path_buf();
    std::fs::create_dir_all(&out)?;

    let (report, rows) = run_cv(&ds, &rc.train)?;
    let mut curves = create(&out.join("curves.csv"))?;
    write_curves(&rows, &mut curves)?;
    curves.flush()?;
    let mut rep = create(&out.join("report.json"))?;
    write_report(&report, &mut rep)?;
    rep.flush()?;

    // The checkpoint is a final model trained on every graph with the same
    // hyperparameters; fold models exist only for the accuracy estimate.
    let (model, _) = train_full(&ds, &rc.train)?;
    save_checkpoint(&model, &out.join("checkpoint.json"))?;

    println!(
        "{}-fold cv of {} on {}: accuracy {:.4} \u{b1} {:.4} at epoch {}",
        rc.train.folds,
        report.variant,
        report.dataset,
        report.mean_val_accuracy,
        report.std_val_accuracy,
        report.best_epoch
    );
    println!("artifacts in {}", out.display());
    Ok(0)
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Checkpoint written by train or cv
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    /// key=value run configuration file naming the dataset
    #[arg(short, long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Output CSV (default stdout); rows are graph_id,label,embedding...
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

pub fn export_embeddings(a: &ExportArgs) -> Result<i32> {
    let rc = RunConfig::load(a.config.as_deref(), &a.overrides)?;
    let ds: Dataset = rc.resolve_dataset()?;
    let model = load_checkpoint(&a.checkpoint)?;
    let mut body = String::new();
    for (i, g) in ds.graphs.iter().enumerate() {
        let (embedding, _) = model.eval_graph(g)?;
        let label = g.label.expect("dataset graphs are labeled");
        body.push_str(&format!("{i},{label},{}\n", join_csv(&embedding)));
    }
    write_out(a.output.as_deref(), &body)?;
    if let Some(p) = &a.output {
        println!("wrote {} embedding rows to {}", ds.len(), p.display());
    }
    Ok(0)
}
