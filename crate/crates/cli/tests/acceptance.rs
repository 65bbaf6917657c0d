//! Acceptance gate: ten numbered criteria, each printing one verdict line.
//!
//! Run `cargo test -p setinject-cli --test acceptance -- --nocapture` to see
//! the PASS lines for passing criteria; failures always show their line.
//! A8 needs the MUTAG TU files on disk and reports SKIP when they are absent.

use std::path::PathBuf;
use std::time::Instant;

use setinject::codec::{decode_multiset, encode_multiset, random_premix, DecodeResult};
use setinject::data::{
    enumerate_connected_graphs, gen_synthetic, load_tu, random_graph, FeatureKind, SyntheticTask,
};
use setinject::gnn::{gin_as_expmlp, Mode, Model, ModelConfig, Variant};
use setinject::graph::{permute_graph, Graph};
use setinject::multiset::{multiset_equal, Multiset};
use setinject::rng::Rng;
use setinject::train::{batch_loss, run_cv, train_full, Split, TrainConfig};
use setinject::wl::wl_distinguishes;

fn verdict(id: &str, pass: bool, detail: &str) {
    println!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{id}: {detail}");
}

fn linf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Random element rows in [-1, 1]^d whose premixed first coordinates are
/// pairwise separated by at least `gap`.
fn separated_rows(
    n: usize,
    d: usize,
    gap: f64,
    premix: &setinject::codec::Premix,
    rng: &mut Rng,
) -> Vec<Vec<f64>> {
    loop {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
            .collect();
        let mut firsts: Vec<f64> = rows.iter().map(|r| premix.apply(r)[0]).collect();
        firsts.sort_by(f64::total_cmp);
        if firsts.windows(2).all(|w| w[1] - w[0] >= gap) {
            return rows;
        }
    }
}

#[test]
fn a1_round_trip_decodability() {
    let start = Instant::now();
    let mut rng = Rng::seed_from(101);
    let trials = 1000;
    let mut full_match = 0usize;
    let mut honest_failures = 0usize;
    for _ in 0..trials {
        let d = 1 + rng.below(4);
        let m = 1 + rng.below(6);
        let n = 1 + rng.below(m);
        let premix = random_premix(d, &mut rng);
        let rows = separated_rows(n, d, 1e-3, &premix, &mut rng);
        let x = Multiset::from_rows(&rows, m).unwrap();
        let enc = encode_multiset(&x, m, false, Some(&premix)).unwrap();
        match decode_multiset(&enc, 1e-6) {
            DecodeResult::Full { elements, .. } => {
                let back: Vec<Vec<f64>> = elements
                    .elements()
                    .iter()
                    .map(|e| premix.apply_inverse(e.as_slice()))
                    .collect();
                let back = Multiset::from_rows(&back, m).unwrap();
                if multiset_equal(&x, &back, 1e-6).unwrap() {
                    full_match += 1;
                } else {
                    verdict("A1", false, &format!("wrong Full answer for {rows:?}"));
                }
            }
            DecodeResult::PartialGroups { .. } => {
                verdict("A1", false, "separated input decoded as PartialGroups");
            }
            DecodeResult::Failed { reason } => {
                let allowed =
                    reason.contains("inconsistent system") || reason.contains("non-real roots");
                if !allowed {
                    verdict("A1", false, &format!("failure reported {reason:?}"));
                }
                honest_failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let rate = full_match as f64 / trials as f64;
    verdict(
        "A1",
        rate >= 0.99 && secs < 10.0,
        &format!(
            "{full_match}/{trials} exact round trips, {honest_failures} honest failures, {secs:.2}s"
        ),
    );
}

/// Hausdorff distance between two sets of rows under the L-inf metric.
fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let side = |xs: &[Vec<f64>], ys: &[Vec<f64>]| {
        xs.iter()
            .map(|x| {
                ys.iter()
                    .map(|y| linf_diff(x, y))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    side(a, b).max(side(b, a))
}

#[test]
fn a2_injectivity_separation() {
    let start = Instant::now();
    let mut rng = Rng::seed_from(202);
    let trials = 1000;
    let mut min_gap = f64::INFINITY;
    for _ in 0..trials {
        let d = 1 + rng.below(4);
        let m = 1 + rng.below(6);
        let premix = random_premix(d, &mut rng);
        let (xa, xb) = loop {
            let na = 1 + rng.below(m);
            let nb = 1 + rng.below(m);
            let a = separated_rows(na, d, 1e-3, &premix, &mut rng);
            let b = separated_rows(nb, d, 1e-3, &premix, &mut rng);
            if hausdorff(&a, &b) >= 0.1 {
                break (a, b);
            }
        };
        let ea = encode_multiset(&Multiset::from_rows(&xa, m).unwrap(), m, false, Some(&premix))
            .unwrap();
        let eb = encode_multiset(&Multiset::from_rows(&xb, m).unwrap(), m, false, Some(&premix))
            .unwrap();
        let gap = linf_diff(ea.values(), eb.values());
        min_gap = min_gap.min(gap);
        if gap <= 1e-9 {
            verdict(
                "A2",
                false,
                &format!("encodings {gap:e} apart for inputs {xa:?} vs {xb:?}"),
            );
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "A2",
        secs < 10.0,
        &format!("{trials}/{trials} pairs separated, smallest encoding gap {min_gap:.3e}, {secs:.2}s"),
    );
}

#[test]
fn a3_repeated_coordinate_fidelity() {
    let mut rng = Rng::seed_from(303);
    let trials = 200;
    let mut group_count = 0usize;
    for _ in 0..trials {
        let d = 2 + rng.below(3);
        // Double ties only: a k-fold root's eigenvalues split by ~(eps/gap
        // product)^(1/k), and for k = 3 that spread already rides the 1e-5
        // clustering radius, so triples live in pinned decoder unit tests.
        let (n, mults): (usize, Vec<usize>) = match rng.below(6) {
            0 => (3, vec![2, 1]),
            1 => (4, vec![2, 2]),
            2 => (4, vec![2, 1, 1]),
            3 => (5, vec![2, 2, 1]),
            4 => (6, vec![2, 2, 2]),
            _ => (6, vec![2, 1, 1, 1, 1]),
        };
        let m = n;
        let k = mults.len();
        let values: Vec<f64> = loop {
            let mut vs: Vec<f64> = (0..k).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            vs.sort_by(f64::total_cmp);
            if vs.windows(2).all(|w| w[1] - w[0] >= 0.25) {
                break vs;
            }
        };
        let mut rows = Vec::new();
        for (value, mult) in values.iter().zip(&mults) {
            for _ in 0..*mult {
                let mut row = vec![*value];
                row.extend((1..d).map(|_| rng.uniform_in(-1.0, 1.0)));
                rows.push(row);
            }
        }
        rng.shuffle(&mut rows);

        let x = Multiset::from_rows(&rows, m).unwrap();
        let enc = encode_multiset(&x, m, false, None).unwrap();
        let groups = match decode_multiset(&enc, 1e-7) {
            DecodeResult::PartialGroups { groups, .. } => groups,
            other => {
                verdict("A3", false, &format!("expected PartialGroups, got {other:?}"));
                return;
            }
        };
        if groups.len() != k {
            verdict("A3", false, &format!("{} groups for {k} tied values", groups.len()));
        }
        for g in &groups {
            // Brute-force sums over the elements sharing this first coordinate.
            let members: Vec<&Vec<f64>> = rows
                .iter()
                .filter(|r| (r[0] - g.value).abs() < 1e-4)
                .collect();
            if members.len() != g.multiplicity {
                verdict(
                    "A3",
                    false,
                    &format!("multiplicity {} vs brute-force {}", g.multiplicity, members.len()),
                );
            }
            for j in 0..d - 1 {
                let brute: f64 = members.iter().map(|r| r[j + 1]).sum();
                if (brute - g.coord_sums[j]).abs() > 1e-8 {
                    verdict(
                        "A3",
                        false,
                        &format!("group sum {} vs brute-force {brute}", g.coord_sums[j]),
                    );
                }
            }
            group_count += 1;
        }
    }
    verdict(
        "A3",
        true,
        &format!("{group_count} groups across {trials} tied multisets matched brute-force sums"),
    );
}

#[test]
fn a4_permutation_invariance() {
    let mut rng = Rng::seed_from(404);
    let graphs: Vec<Graph> = (0..200)
        .map(|_| random_graph(4 + rng.below(7), 0.45, 3, &mut rng))
        .collect();
    let m_n = graphs.iter().map(Graph::max_degree).max().unwrap().max(1);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for variant in Variant::ALL {
        let cfg = ModelConfig {
            premix_seed: Some(5),
            seed: 11,
            ..ModelConfig::new(variant, 3, 2, m_n)
        };
        let model = Model::init(&cfg).unwrap();
        for g in &graphs {
            let (e0, _) = model.eval_graph(g).unwrap();
            let scale = 1.0 + e0.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            for _ in 0..5 {
                let mut perm: Vec<usize> = (0..g.n_nodes()).collect();
                rng.shuffle(&mut perm);
                let h = permute_graph(g, &perm).unwrap();
                let (e1, _) = model.eval_graph(&h).unwrap();
                let rel = linf_diff(&e0, &e1) / scale;
                worst = worst.max(rel);
                checked += 1;
                if rel > 1e-9 {
                    verdict(
                        "A4",
                        false,
                        &format!("{variant:?} embedding moved {rel:e} under relabeling"),
                    );
                }
            }
        }
    }
    verdict(
        "A4",
        true,
        &format!("{checked} graph relabelings across 5 variants, worst relative drift {worst:e}"),
    );
}

#[test]
fn a5_wl_consistency_on_small_graphs() {
    let start = Instant::now();
    let seeds = 20u64;
    let models: Vec<Model> = (0..seeds)
        .map(|s| {
            let cfg = ModelConfig {
                n_layers: 3,
                premix_seed: Some(1000 + s),
                seed: 123 + s,
                ..ModelConfig::new(Variant::ExpFixed, 1, 2, 5)
            };
            Model::init(&cfg).unwrap()
        })
        .collect();

    let mut distinguished_pairs = 0usize;
    let mut blind_pairs = 0usize;
    let mut sep_trials = 0usize;
    let mut sep_ok = 0usize;
    let mut blind_violations = 0usize;
    for n in 3..=6 {
        let gs = enumerate_connected_graphs(n).unwrap();
        let embs: Vec<Vec<Vec<f64>>> = models
            .iter()
            .map(|m| gs.iter().map(|g| m.eval_graph(g).unwrap().0).collect())
            .collect();
        for i in 0..gs.len() {
            for j in (i + 1)..gs.len() {
                match wl_distinguishes(&gs[i], &gs[j], 3) {
                    Some(_) => {
                        distinguished_pairs += 1;
                        for e in &embs {
                            sep_trials += 1;
                            if linf_diff(&e[i], &e[j]) > 1e-8 {
                                sep_ok += 1;
                            }
                        }
                    }
                    None => {
                        blind_pairs += 1;
                        for e in &embs {
                            if linf_diff(&e[i], &e[j]) > 1e-6 {
                                blind_violations += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let rate = sep_ok as f64 / sep_trials as f64;
    verdict(
        "A5",
        rate >= 0.99 && blind_violations == 0 && blind_pairs >= 1 && secs < 120.0,
        &format!(
            "separated {sep_ok}/{sep_trials} seeded trials over {distinguished_pairs} \
             WL-distinguished pairs; {blind_pairs} WL-blind pair(s) embedded identically; {secs:.1}s"
        ),
    );
}

#[test]
fn a6_gradient_correctness() {
    let mut worst = 0.0f64;
    let mut n_params = 0usize;
    for variant in [Variant::ExpMlp, Variant::GinFinal] {
        let mut rng = Rng::seed_from(606);
        let graphs: Vec<Graph> = (0..5)
            .map(|_| random_graph(5 + rng.below(3), 0.5, 2, &mut rng))
            .collect();
        let refs: Vec<&Graph> = graphs.iter().collect();
        let labels = vec![0, 1, 0, 1, 0];
        let m_n = graphs.iter().map(Graph::max_degree).max().unwrap();
        let cfg = ModelConfig {
            n_layers: 2,
            hidden: 6,
            seed: 77,
            ..ModelConfig::new(variant, 2, 2, m_n)
        };
        let model = Model::init(&cfg).unwrap();

        let out = model.forward(&refs, Mode::Train).unwrap();
        let (_, dlogits) = batch_loss(&out.logits, &labels).unwrap();
        let grads = model
            .backward(&out.tape.expect("train mode"), &dlogits)
            .unwrap()
            .params;

        let base = model.collect_params();
        let loss_at = |p: &[f64]| {
            let mut m = model.clone();
            m.set_params(p).unwrap();
            let o = m.forward(&refs, Mode::Train).unwrap();
            batch_loss(&o.logits, &labels).unwrap().0
        };
        let h = 1e-5;
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] = base[i] + h;
            let up = loss_at(&p);
            p[i] = base[i] - h;
            let down = loss_at(&p);
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grads[i]).abs() / fd.abs().max(grads[i].abs()).max(1.0);
            worst = worst.max(rel);
            if rel >= 1e-4 {
                verdict(
                    "A6",
                    false,
                    &format!("{variant:?} parameter {i}: backward {} vs fd {fd}", grads[i]),
                );
            }
        }
        n_params += base.len();
    }
    verdict(
        "A6",
        true,
        &format!("{n_params} parameter gradients matched finite differences, worst rel err {worst:.2e}"),
    );
}

#[test]
fn a7_desk_scale_training() {
    let start = Instant::now();
    let ds = gen_synthetic(SyntheticTask::CycleVsChord, 200, 5, 9, &mut Rng::seed_from(0)).unwrap();
    let cfg = TrainConfig {
        variant: Variant::ExpMlp,
        ..TrainConfig::default()
    };
    let (_, rows) = train_full(&ds, &cfg).unwrap();
    let (best_epoch, best) = rows
        .iter()
        .filter(|r| r.split == Split::Train)
        .map(|r| (r.epoch, r.accuracy))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "A7",
        best >= 0.95 && secs < 300.0,
        &format!("train accuracy peaked at {best:.4} (epoch {best_epoch}) in {secs:.0}s"),
    );
}

#[test]
fn a8_mutag_reproduction() {
    let start = Instant::now();
    let root = std::env::var_os("SETINJECT_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
        });
    let mutag = root.join("MUTAG");
    if !mutag.is_dir() {
        println!(
            "A8 SKIP MUTAG files not found at {}; download the TU MUTAG dataset there \
             (or point SETINJECT_DATA_DIR at its parent) to run the 10-fold check",
            mutag.display()
        );
        return;
    }
    let ds = load_tu(&mutag, FeatureKind::OneHotLabel).unwrap();
    let cfg = TrainConfig::default(); // exp-fixed, 5 layers, hidden 32, lr 0.01, 300 epochs
    let (report, _) = run_cv(&ds, &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "A8",
        report.mean_val_accuracy >= 0.80 && secs < 1800.0,
        &format!(
            "mean cv accuracy {:.4} +/- {:.4} at epoch {} on {} graphs, {secs:.0}s",
            report.mean_val_accuracy, report.std_val_accuracy, report.best_epoch, report.n_graphs
        ),
    );
}

#[test]
fn a9_gin_reduction_equivalence() {
    let mut rng = Rng::seed_from(909);
    let cfg = ModelConfig {
        n_layers: 3,
        hidden: 8,
        seed: 42,
        ..ModelConfig::new(Variant::GinFinal, 3, 2, 1)
    };
    let gin = Model::init(&cfg).unwrap();
    let rewired = gin_as_expmlp(&gin).unwrap();
    let mut equal = 0usize;
    for _ in 0..50 {
        let g = random_graph(4 + rng.below(6), 0.5, 3, &mut rng);
        let (e1, l1) = gin.eval_graph(&g).unwrap();
        let (e2, l2) = rewired.eval_graph(&g).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        if bits(&e1) == bits(&e2) && bits(&l1) == bits(&l2) {
            equal += 1;
        }
    }
    verdict(
        "A9",
        equal == 50,
        &format!("{equal}/50 graphs bit-identical between gin-final and its exp-mlp rewiring"),
    );
}

#[test]
fn a10_report_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "dataset = synthetic:cycle-vs-chord\nsynthetic_n = 20\nsynthetic_min = 5\nsynthetic_max = 6\n\
         epochs = 3\nbatch_size = 8\nhidden = 6\nlayers = 2\nfolds = 4\n",
    )
    .unwrap();
    let run = |sub: &str, out: &str| {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_setinject"))
            .arg(sub)
            .arg("-c")
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(out))
            .output()
            .unwrap();
        assert!(status.status.success(), "{sub} failed: {}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(dir.path().join(out).join("report.json")).unwrap()
    };
    let train_same = run("train", "t1") == run("train", "t2");
    let cv_same = run("cv", "c1") == run("cv", "c2");
    verdict(
        "A10",
        train_same && cv_same,
        "train and cv report.json byte-identical across reruns",
    );
}
