use std::path::Path;
use std::process::{Command, Output};

fn fockml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fockml")).args(args).output().unwrap()
}

fn out_arg(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn gen_data_writes_csv_and_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(tmp.path(), "circles");
    let o = fockml(&["--seed", "3", "--out", &out, "gen-data", "--name", "circles", "--n", "40", "--noise", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ds = fockml::data::LabeledDataset::from_csv_str(&std::fs::read_to_string(tmp.path().join("circles/data.csv")).unwrap()).unwrap();
    assert_eq!(ds.len(), 40);
    for (x, y) in ds.x.iter().zip(&ds.y) {
        let r = x[0].hypot(x[1]);
        assert!((r - if *y == 1 { 0.5 } else { 1.0 }).abs() < 1e-12);
    }
    let meta = std::fs::read_to_string(tmp.path().join("circles/data.meta.json")).unwrap();
    assert!(meta.contains("\"seed\": 3"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.toml");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(fockml(&["--config", empty.to_str().unwrap(), "dof-table"]).status.code(), Some(2));
    assert_eq!(fockml(&[]).status.code(), Some(2));
    assert_eq!(fockml(&["gen-data", "--name", "spirals"]).status.code(), Some(2));
    assert_eq!(fockml(&["--out", &out_arg(tmp.path(), "r"), "rks", "--k", "11"]).status.code(), Some(2));
    let o = fockml(&["--out", &out_arg(tmp.path(), "s"), "--threads", "1", "rks", "--features", "80", "--alpha", "0", "--photons", "4"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fockml(&["--out", &out_arg(tmp.path(), "d"), "dof-table", "--m-max", "4"]).status.code(), Some(0));
}

#[test]
fn saved_model_evaluates_on_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    std::fs::write(
        &cfg,
        "seed = 5\n[classify_variational]\ndatasets = [\"linear\"]\ninputs = [[1, 0, 0]]\nrestarts = 1\nmax_evals = 300\n[classify_variational.split]\nsamples = 40\ntrain = 24\ntest = 16\nseeds = 1\ngrid = 5\n",
    )
    .unwrap();
    let train_dir = tmp.path().join("train");
    let o = fockml(&["--config", cfg.to_str().unwrap(), "--out", train_dir.to_str().unwrap(), "classify-variational"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics: serde_json::Value = serde_json::from_slice(&std::fs::read(train_dir.join("metrics.json")).unwrap()).unwrap();
    let trained = metrics["results"]["linear"]["100"]["test_accuracy"][0].as_f64().unwrap();

    let model = train_dir.join("models/linear_100_seed5.json");
    let data = train_dir.join("data/linear_seed5_test.csv");
    let eval_dir = tmp.path().join("eval");
    let o = fockml(&[
        "--out",
        eval_dir.to_str().unwrap(),
        "classify-variational",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics: serde_json::Value = serde_json::from_slice(&std::fs::read(eval_dir.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["accuracy"].as_f64().unwrap(), trained);
    assert_eq!(std::fs::read_to_string(train_dir.join("decision_linear_100.csv")).unwrap().lines().count(), 26);
}

#[test]
fn config_snapshot_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("a");
    let o = fockml(&["--seed", "9", "--out", first.to_str().unwrap(), "fit-kernel", "--photons", "2,6", "--sigma", "0.5", "--grid-points", "50"]);
    assert!(o.status.success());
    let second = tmp.path().join("b");
    let snapshot = first.join("config.toml");
    let o = fockml(&["--config", snapshot.to_str().unwrap(), "--out", second.to_str().unwrap(), "fit-kernel"]);
    assert!(o.status.success());
    for f in ["metrics.json", "kernel_fit_errors.csv", "kernel_curves.csv", "config.toml"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(second.join(f)).unwrap(), "{f}");
    }
}
