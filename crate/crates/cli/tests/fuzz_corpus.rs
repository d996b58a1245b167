//! Replays the checked-in fuzz corpus through the parsers the fuzz targets
//! exercise, so the seeds stay valid without a fuzzing toolchain.

use std::path::PathBuf;

use fockml::circuit::CircuitSpec;
use fockml::data::LabeledDataset;
use fockml::rks::RandomFeatureSet;
use fockml::variational::TrainedModel;
use fockml_cli::config::RunConfig;

fn corpus(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn circuit_seeds_parse_and_round_trip() {
    for (path, text) in corpus("circuit_toml") {
        let spec = CircuitSpec::from_toml_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(CircuitSpec::from_toml_str(&spec.to_toml_string().unwrap()).unwrap(), spec);
    }
}

#[test]
fn model_seeds_parse_and_predict() {
    for (path, text) in corpus("trained_model_json") {
        let model = TrainedModel::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(model.predict(&vec![0.5; model.spec.features()]).unwrap().is_finite());
        assert_eq!(TrainedModel::from_json(&model.to_json().unwrap()).unwrap(), model);
    }
}

#[test]
fn feature_set_seeds_parse() {
    for (path, text) in corpus("feature_set_json") {
        let fs = RandomFeatureSet::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(fockml::rks::classical_feature_matrix(&[vec![0.25; fs.dims()]], &fs).unwrap().ncols(), fs.features());
    }
}

#[test]
fn dataset_seeds_parse_and_round_trip() {
    for (path, text) in corpus("dataset_csv") {
        let ds = LabeledDataset::from_csv_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = LabeledDataset::from_csv_str(&ds.to_csv_string().unwrap()).unwrap();
        assert_eq!((again.x, again.y), (ds.x, ds.y));
    }
}

#[test]
fn config_seeds_parse_and_round_trip() {
    for (path, text) in corpus("run_config_toml") {
        let cfg = RunConfig::from_toml_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap(), cfg);
    }
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(CircuitSpec::from_toml_str("modes = 16\ninput_state = [20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20]").is_err());
    assert!(LabeledDataset::from_csv_str("x1,label\nNaN,1\n").is_err());
    assert!(LabeledDataset::from_csv_str("x1,x2,label\n1.0,1\n").is_err());
    assert!(RandomFeatureSet::from_json("{\"gamma\":1.0,\"k\":0,\"seed\":0,\"w\":[[1.0]],\"b\":[0.0]}").is_err());
    assert!(TrainedModel::from_json("{}").is_err());
}
