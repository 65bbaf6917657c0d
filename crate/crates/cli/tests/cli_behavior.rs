//! End-to-end checks of the binary: documented examples, exit codes, and
//! artifact determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_setinject"))
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn encode_matches_the_documented_example() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "elems.csv", "1\n2\n");
    let out = bin().args(["encode", "-i"]).arg(&input).args(["-m", "2"]).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "2,3,5\n");
}

#[test]
fn encode_of_an_empty_file_is_the_zero_row() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "empty.csv", "");
    let out = bin().args(["encode", "-i"]).arg(&input).args(["-m", "2", "-d", "2"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out), "0,0,0,0,0\n");
}

#[test]
fn oversized_multisets_exit_2_with_a_capacity_message() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "elems.csv", "1\n2\n3\n");
    let out = bin().args(["encode", "-i"]).arg(&input).args(["-m", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("capacity"), "{}", stderr(&out));
}

#[test]
fn decode_round_trips_the_documented_example() {
    let dir = tempfile::tempdir().unwrap();
    let enc = write(dir.path(), "enc.csv", "2,3,5\n");
    let out = bin().args(["decode", "-i"]).arg(&enc).args(["-m", "2"]).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# status: full\n"), "{text}");
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows, ["1", "2"]);
}

#[test]
fn corrupted_cardinality_fails_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let enc = write(dir.path(), "enc.csv", "1.7,3,5\n");
    let out = bin().args(["decode", "-i"]).arg(&enc).args(["-m", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("# status: failed"));
}

#[test]
fn tied_first_coordinates_decode_to_group_sum_rows() {
    let dir = tempfile::tempdir().unwrap();
    let elems = write(dir.path(), "elems.csv", "0.25,1\n0.25,2\n-0.75,5\n");
    let enc_path = dir.path().join("enc.csv");
    let out = bin()
        .args(["encode", "-i"])
        .arg(&elems)
        .args(["-m", "4", "-o"])
        .arg(&enc_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let out = bin()
        .args(["decode", "-i"])
        .arg(&enc_path)
        .args(["-m", "4", "-d", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("# status: partial"), "{text}");
    let tied: Vec<f64> = text
        .lines()
        .filter(|l| l.starts_with("group,"))
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .collect();
    assert_eq!(tied.len(), 2, "{text}");
    let row = text
        .lines()
        .find(|l| l.starts_with("group,0.25"))
        .unwrap_or_else(|| panic!("{text}"));
    let fields: Vec<f64> = row.split(',').skip(1).map(|t| t.parse().unwrap()).collect();
    assert_eq!(fields[1], 2.0, "{text}");
    assert!((fields[2] - 3.0).abs() < 1e-8, "{text}");
}

#[test]
fn premixed_encodings_decode_back_through_the_saved_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let elems = write(dir.path(), "elems.csv", "0.5,0.5\n0.5,-0.25\n-0.5,0.5\n");
    let enc_path = dir.path().join("enc.csv");
    let out = bin()
        .args(["encode", "-i"])
        .arg(&elems)
        .args(["-m", "4", "--premix-seed", "11", "--normalize", "-o"])
        .arg(&enc_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let premix = dir.path().join("enc.csv.premix.json");
    assert!(premix.exists());
    let out = bin()
        .args(["decode", "-i"])
        .arg(&enc_path)
        .args(["-m", "4", "-d", "2", "--normalize", "--premix-file"])
        .arg(&premix)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# status: full\n"), "{text}");
    let mut rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|t| t.parse().unwrap()).collect())
        .collect();
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let want = [[-0.5, 0.5], [0.5, -0.25], [0.5, 0.5]];
    for (got, want) in rows.iter().zip(want) {
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-6, "{rows:?}");
        }
    }
}

#[test]
fn wl_compare_reports_the_separating_round_or_silence() {
    let dir = tempfile::tempdir().unwrap();
    let k3 = write(dir.path(), "k3.txt", "3\n1\n1\n1\n0,1\n1,2\n2,0\n");
    let p3 = write(dir.path(), "p3.txt", "3\n1\n1\n1\n0,1\n1,2\n");
    let out = bin().arg("wl-compare").arg(&k3).arg(&p3).output().unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out), "1\n");

    // A relabeled copy of the same graph can never be distinguished.
    let k3b = write(dir.path(), "k3b.txt", "3\n1\n1\n1\n2,0\n0,1\n2,1\n");
    let out = bin().arg("wl-compare").arg(&k3).arg(&k3b).output().unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out), "indistinguishable\n");

    // kmax 0 compares the initial feature colors only.
    let p3f = write(dir.path(), "p3f.txt", "3\n1\n1\n2\n0,1\n1,2\n");
    let out = bin()
        .arg("wl-compare")
        .arg(&p3)
        .arg(&p3f)
        .args(["--kmax", "0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out), "0\n");
}

#[test]
fn missing_dataset_is_a_usage_error() {
    let out = bin().args(["train", "--out", "/tmp/nowhere"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("dataset"), "{}", stderr(&out));
}

#[test]
fn unknown_config_keys_exit_2_listing_valid_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "dataset = synthetic:cycle-vs-chord\nlearningrate = 1\n");
    let out = bin().args(["train", "-c"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("learningrate") && err.contains("valid keys"), "{err}");
}

#[test]
fn train_writes_all_artifacts_and_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.cfg",
        "dataset = synthetic:cycle-vs-chord\nsynthetic_n = 20\nsynthetic_min = 5\nsynthetic_max = 6\nepochs = 4\nbatch_size = 8\nhidden = 6\nlayers = 2\nfolds = 4\n",
    );
    let run = |out_dir: &str| {
        let out = bin()
            .args(["train", "-c"])
            .arg(&cfg)
            .args(["--out"])
            .arg(dir.path().join(out_dir))
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
    };
    run("a");
    run("b");
    for name in ["report.json", "curves.csv", "checkpoint.json"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    let curves = std::fs::read_to_string(dir.path().join("a/curves.csv")).unwrap();
    assert!(curves.starts_with("fold,epoch,split,accuracy,loss\n"));
}

#[test]
fn cv_then_export_produces_one_embedding_row_per_graph() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.cfg",
        "dataset = synthetic:cycle-vs-chord\nsynthetic_n = 16\nsynthetic_min = 5\nsynthetic_max = 6\nepochs = 2\nbatch_size = 8\nhidden = 5\nlayers = 2\nfolds = 4\nvariant = gin-final\n",
    );
    let out_dir = dir.path().join("run");
    let out = bin()
        .args(["cv", "-c"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["n_graphs"], 16);
    assert_eq!(report["variant"], "gin-final");
    assert_eq!(report["config"]["variant"], "gin-final");
    assert_eq!(report["fold_val_accuracy"].as_array().unwrap().len(), 4);

    let emb = dir.path().join("emb.csv");
    let out = bin()
        .args(["export-embeddings", "--checkpoint"])
        .arg(out_dir.join("checkpoint.json"))
        .args(["-c"])
        .arg(&cfg)
        .arg("-o")
        .arg(&emb)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&emb).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 16);
    // graph_id, label, then one column per embedding coordinate
    let cols = rows[0].split(',').count();
    assert_eq!(cols, 2 + report["config"]["hidden"].as_u64().unwrap() as usize);
}

#[test]
fn thread_cap_is_validated_and_respected() {
    let out = bin()
        .env("SETINJECT_THREADS", "zero")
        .args(["wl-compare", "a", "b"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("SETINJECT_THREADS"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.cfg",
        "dataset = synthetic:cycle-vs-chord\nsynthetic_n = 12\nsynthetic_min = 5\nsynthetic_max = 6\nepochs = 2\nbatch_size = 8\nhidden = 4\nlayers = 2\nfolds = 3\n",
    );
    let run = |threads: &str, out_dir: &str| {
        let out = bin()
            .env("SETINJECT_THREADS", threads)
            .args(["cv", "-c"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(out_dir))
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
    };
    // Fold results must not depend on the worker count.
    run("1", "t1");
    run("3", "t3");
    let a = std::fs::read(dir.path().join("t1/report.json")).unwrap();
    let b = std::fs::read(dir.path().join("t3/report.json")).unwrap();
    assert_eq!(a, b);
}
