//! One function per subcommand. Each returns a [`RunReport`] and leaves
//! writing it to the caller.

use std::time::Instant;

use fockml::circuit::{CircuitSpec, EncodingLayout, FeatureScaling};
use fockml::data::{make_circles, split, DatasetKind, DatasetMeta, LabeledDataset, Standardizer};
use fockml::fock::FockState;
use fockml::kernel::{
    delta_grid, distance_scale, fit_from_table, fit_kernel_observable, kernel_fit, kernel_matrix, kernel_predict, kernel_target,
    CircuitKernel, GaussianKernel, KernelSampler,
};
use fockml::linalg::least_squares;
use fockml::model::{dof_pnr, dof_threshold, extract_fourier_coefficients, m_min, Detector, Evaluator, Observable};
use fockml::rks::{classical_feature_matrix, feature_matrix, ridge_on_features, rks_predict, rks_train, CosineIsolator, RandomFeatureSet};
use fockml::variational::{label_accuracy, train, TrainConfig, TrainedModel};
use fockml::{Error, Result};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{RunConfig, SplitConfig};
use crate::report::{num, RunReport, Table};

fn state_label(occ: &[usize]) -> String {
    occ.iter().map(|n| n.to_string()).collect()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn seeds(base: u64, count: usize) -> Result<Vec<u64>> {
    if count == 0 {
        return Err(Error::Config("at least one seed is required".into()));
    }
    Ok((0..count as u64).map(|i| base.wrapping_add(i)).collect())
}

fn finish(mut report: RunReport, start: Instant) -> RunReport {
    report.wall_time_s = start.elapsed().as_secs_f64();
    report
}

/// `c₀ + Σ_k 2 Re(c_k e^{−ikx})`.
pub fn fourier_series(c0: f64, coefficients: &[[f64; 2]], x: f64) -> f64 {
    c0 + coefficients.iter().enumerate().map(|(k, [re, im])| 2.0 * (re * ((k + 1) as f64 * x).cos() + im * ((k + 1) as f64 * x).sin())).sum::<f64>()
}

/// Training MSE of the best degree-`degree` trigonometric polynomial.
pub fn trig_floor(xs: &[f64], ys: &[f64], degree: usize) -> Result<f64> {
    let a = nalgebra::DMatrix::from_fn(xs.len(), 2 * degree + 1, |i, c| match c {
        0 => 1.0,
        c if c % 2 == 1 => (c.div_ceil(2) as f64 * xs[i]).cos(),
        c => ((c / 2) as f64 * xs[i]).sin(),
    });
    let b = nalgebra::DVector::from_column_slice(ys);
    let coef = least_squares(&a, &b)?;
    Ok((a * coef - b).norm_squared() / xs.len() as f64)
}

/// Dataset + split for one seed.
fn prepared(kind: DatasetKind, split_cfg: &SplitConfig, seed: u64) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let ds = kind.generate(split_cfg.samples, seed, kind.default_noise())?;
    let (tr, te) = split(&ds, split_cfg.train, split_cfg.test, seed)?;
    Ok((ds, tr, te))
}

/// Square lattice covering the data with a margin of half a unit.
fn lattice(xs: &[Vec<f64>], points: usize) -> Vec<Vec<f64>> {
    let bound = |j: usize| {
        let lo = xs.iter().map(|x| x[j]).fold(f64::INFINITY, f64::min) - 0.5;
        let hi = xs.iter().map(|x| x[j]).fold(f64::NEG_INFINITY, f64::max) + 0.5;
        linspace(lo, hi, points)
    };
    let (g1, g2) = (bound(0), bound(1));
    g2.iter().flat_map(|&b| g1.iter().map(move |&a| vec![a, b])).collect()
}

pub fn cmd_gen_data(cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let c = &cfg.gen_data;
    let noise = c.noise.unwrap_or_else(|| c.name.default_noise());
    let ds = match c.name {
        DatasetKind::Circles => make_circles(c.samples, cfg.seed, noise, c.factor)?,
        kind => kind.generate(c.samples, cfg.seed, noise)?,
    };
    let meta = DatasetMeta {
        name: c.name.name().into(),
        seed: cfg.seed,
        samples: c.samples,
        noise,
        factor: (c.name == DatasetKind::Circles).then_some(c.factor),
    };
    let mut report = RunReport::new("gen-data", cfg);
    report.seeds = vec![cfg.seed];
    report.metric("samples", ds.len());
    report.metric("positive", ds.y.iter().filter(|&&l| l == 1).count());
    report.files.push(("data.csv".into(), ds.to_csv_string()?));
    report.files.push(("data.meta.json".into(), serde_json::to_string_pretty(&meta).map_err(|e| Error::Parse(e.to_string()))?));
    Ok(finish(report, start))
}

pub fn cmd_fit_fourier(cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let c = &cfg.fit_fourier;
    if c.train_points == 0 {
        return Err(Error::Config("train_points must be positive".into()));
    }
    let xs = linspace(c.x_min, c.x_max, c.train_points);
    let targets: Vec<f64> = xs.iter().map(|&x| fourier_series(c.c0, &c.coefficients, x)).collect();
    let inputs: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let curve_x = linspace(c.x_min, c.x_max, c.curve_points);
    let mut report = RunReport::new("fit-fourier", cfg);
    report.seeds = vec![cfg.seed];

    let mut header = vec!["x".to_string(), "target".to_string()];
    let mut curves: Vec<Vec<f64>> = vec![curve_x.clone(), curve_x.iter().map(|&x| fourier_series(c.c0, &c.coefficients, x)).collect()];
    let mut coeff_table = Table::new("fourier_coefficients", &["state", "omega", "re", "im"]);
    let mut states = serde_json::Map::new();
    for occ in &c.inputs {
        if occ.len() != c.modes {
            return Err(Error::Config(format!("input {occ:?} does not have {} modes", c.modes)));
        }
        let label = state_label(occ);
        let spec = CircuitSpec::new(c.modes, FockState::new(occ.clone()), EncodingLayout::single())?;
        let obs = Observable::zeros(Detector::Pnr, c.modes, spec.photons())?;
        let tc = TrainConfig {
            alpha: c.alpha,
            max_evals: c.max_evals,
            seed: cfg.seed,
            restarts: c.restarts,
            weight_bound: c.weight_bound,
            ..TrainConfig::default()
        };
        let model = train(&spec, &obs, &inputs, &targets, &tc)?;
        let ev = Evaluator::for_spec(&model.spec)?;
        let preds = ev.evaluate_batch(&model.spec, &model.obs, &inputs)?;
        let mse = preds.iter().zip(&targets).map(|(f, g)| (f - g).powi(2)).sum::<f64>() / xs.len() as f64;
        let degree = spec.photons().min(c.coefficients.len());
        let floor = trig_floor(&xs, &targets, degree)?;
        let coeffs = extract_fourier_coefficients(&model.spec, &model.obs, spec.photons())?;
        for w in coeffs.frequencies() {
            let v = coeffs.get(w);
            coeff_table.push([label.clone(), w.to_string(), num(v.re), num(v.im)]);
        }
        curves.push(ev.evaluate_batch(&model.spec, &model.obs, &curve_x.iter().map(|&x| vec![x]).collect::<Vec<_>>())?);
        header.push(format!("f_{label}"));
        states.insert(
            label.clone(),
            json!({
                "photons": spec.photons(),
                "final_cost": model.final_cost,
                "training_mse": mse,
                "oracle_degree": degree,
                "oracle_floor_mse": floor,
                "restart_costs": model.restart_costs,
                "evaluations": model.evaluations,
                "converged": model.converged,
            }),
        );
        report.files.push((format!("models/fit_{label}.json"), model.to_json()?));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut curve_table = Table::new("curves", &header_refs);
    for i in 0..curve_x.len() {
        curve_table.push(curves.iter().map(|col| num(col[i])));
    }
    report.metric("states", states);
    report.tables.push(curve_table);
    report.tables.push(coeff_table);
    Ok(finish(report, start))
}

pub fn cmd_dof_table(cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let c = &cfg.dof_table;
    if c.m_max < 2 {
        return Err(Error::Config("m_max must be at least 2".into()));
    }
    let mut table = Table::new("dof", &["modes", "photons", "m_pnr", "m_thr", "m_min", "thr_below_min"]);
    let mut crossings = serde_json::Map::new();
    for m in 2..=c.m_max {
        let mut crossing = None;
        for n in 0..=c.n_max {
            let (pnr, thr, min) = (dof_pnr(m, n), dof_threshold(m, n), m_min(n));
            let below = thr < min;
            if below && crossing.is_none() {
                crossing = Some(n);
            }
            table.push([m.to_string(), n.to_string(), pnr.to_string(), thr.to_string(), min.to_string(), below.to_string()]);
        }
        crossings.insert(m.to_string(), json!(crossing));
    }
    let mut report = RunReport::new("dof-table", cfg);
    report.metric("threshold_crossing", crossings);
    report.tables.push(table);
    Ok(finish(report, start))
}

fn variational_spec(occ: &[usize], rescale: bool, train_x: &[Vec<f64>]) -> Result<CircuitSpec> {
    let mut spec = CircuitSpec::new(occ.len(), FockState::new(occ.to_vec()), EncodingLayout::feature_per_mode(2))?;
    if rescale {
        spec.scaling = Some(FeatureScaling::fit_to_period(train_x)?);
    }
    Ok(spec)
}

fn evaluate_saved_model(cfg: &RunConfig, model_path: &str, data_path: &str) -> Result<RunReport> {
    let start = Instant::now();
    let model = TrainedModel::from_json(&std::fs::read_to_string(model_path)?)?;
    let ds = LabeledDataset::read_csv(std::fs::File::open(data_path)?, data_path, 0)?;
    let preds = Evaluator::for_spec(&model.spec)?.evaluate_batch(&model.spec, &model.obs, &ds.x)?;
    let mut table = Table::new("predictions", &["index", "f", "label"]);
    for (i, (f, y)) in preds.iter().zip(&ds.y).enumerate() {
        table.push([i.to_string(), num(*f), y.to_string()]);
    }
    let mut report = RunReport::new("classify-variational", cfg);
    report.metric("accuracy", label_accuracy(&preds, &ds.y));
    report.tables.push(table);
    Ok(finish(report, start))
}

pub fn cmd_classify_variational(cfg: &RunConfig) -> Result<RunReport> {
    let c = &cfg.classify_variational;
    match (&c.model, &c.data) {
        (Some(m), Some(d)) => return evaluate_saved_model(cfg, m, d),
        (Some(_), None) | (None, Some(_)) => return Err(Error::Config("model and data must be given together".into())),
        (None, None) => {}
    }
    let start = Instant::now();
    let seed_list = seeds(cfg.seed, c.split.seeds)?;
    let mut report = RunReport::new("classify-variational", cfg);
    report.seeds = seed_list.clone();
    let mut results = serde_json::Map::new();
    for &kind in &c.datasets {
        let mut per_state = serde_json::Map::new();
        for occ in &c.inputs {
            let label = state_label(occ);
            let (mut test_acc, mut train_acc, mut costs) = (vec![], vec![], vec![]);
            for (si, &seed) in seed_list.iter().enumerate() {
                let (full, tr, te) = prepared(kind, &c.split, seed)?;
                let spec = variational_spec(occ, c.rescale, &tr.x)?;
                let obs = Observable::zeros(Detector::Pnr, spec.modes, spec.photons())?;
                let tc = TrainConfig {
                    alpha: c.alpha,
                    max_evals: c.max_evals,
                    seed,
                    restarts: c.restarts,
                    weight_bound: c.weight_bound,
                    ..TrainConfig::default()
                };
                let model = train(&spec, &obs, &tr.x, &tr.targets(), &tc)?;
                let ev = Evaluator::for_spec(&model.spec)?;
                test_acc.push(label_accuracy(&ev.evaluate_batch(&model.spec, &model.obs, &te.x)?, &te.y));
                train_acc.push(label_accuracy(&ev.evaluate_batch(&model.spec, &model.obs, &tr.x)?, &tr.y));
                costs.push(model.final_cost);
                if si == 0 {
                    let grid = lattice(&full.x, c.split.grid);
                    let values = ev.evaluate_batch(&model.spec, &model.obs, &grid)?;
                    let mut t = Table::new(format!("decision_{}_{label}", kind.name()), &["x1", "x2", "f"]);
                    for (p, v) in grid.iter().zip(&values) {
                        t.push([num(p[0]), num(p[1]), num(*v)]);
                    }
                    report.tables.push(t);
                    report.files.push((format!("models/{}_{label}_seed{seed}.json", kind.name()), model.to_json()?));
                    report.files.push((format!("data/{}_seed{seed}_train.csv", kind.name()), tr.to_csv_string()?));
                    report.files.push((format!("data/{}_seed{seed}_test.csv", kind.name()), te.to_csv_string()?));
                }
            }
            per_state.insert(
                label,
                json!({
                    "test_accuracy": test_acc,
                    "mean_test_accuracy": mean(&test_acc),
                    "train_accuracy": train_acc,
                    "mean_train_accuracy": mean(&train_acc),
                    "final_cost": costs,
                }),
            );
        }
        results.insert(kind.name().into(), serde_json::Value::Object(per_state));
    }
    report.metric("results", results);
    Ok(finish(report, start))
}

pub fn cmd_fit_kernel(cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let c = &cfg.fit_kernel;
    let grid = delta_grid(c.grid_points);
    let mut errors = Table::new("kernel_fit_errors", &["photons", "sigma", "max_abs_error"]);
    let mut weights = Table::new("kernel_weights", &["photons", "sigma", "outcome", "weight"]);
    let mut curves = Table::new("kernel_curves", &["photons", "sigma", "delta", "target", "fitted"]);
    let mut fits = Vec::new();
    for &n in &c.photons {
        let sampler = KernelSampler::new(n)?;
        let table = sampler.probability_table(&grid)?;
        for &sigma in &c.sigmas {
            let obs = fit_from_table(&table, &grid, n, sigma)?;
            errors.push([n.to_string(), num(sigma), num(obs.max_abs_error)]);
            for (j, w) in obs.weights.iter().enumerate() {
                weights.push([n.to_string(), num(sigma), j.to_string(), num(*w)]);
            }
            let fitted = &table * nalgebra::DVector::from_column_slice(&obs.weights);
            for (i, &d) in grid.iter().enumerate() {
                curves.push([n.to_string(), num(sigma), num(d), num(kernel_target(d, sigma)), num(fitted[i])]);
            }
            fits.push(json!({ "photons": n, "sigma": sigma, "max_abs_error": obs.max_abs_error }));
        }
    }
    let mut report = RunReport::new("fit-kernel", cfg);
    report.metric("fits", fits);
    report.tables.extend([errors, weights, curves]);
    Ok(finish(report, start))
}

pub fn cmd_classify_kernel(cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let c = &cfg.classify_kernel;
    let seed_list = seeds(cfg.seed, c.split.seeds)?;
    let obs = fit_kernel_observable(c.photons, c.sigma, c.grid_points)?;
    let mut report = RunReport::new("classify-kernel", cfg);
    report.seeds = seed_list.clone();
    let (mut circuit_acc, mut classical_acc) = (vec![], vec![]);
    for (si, &seed) in seed_list.iter().enumerate() {
        let (full, tr, te) = prepared(c.dataset, &c.split, seed)?;
        let scale = distance_scale(&tr.x)?;
        let qk = CircuitKernel::new(obs.clone(), scale)?;
        let gk = GaussianKernel { sigma: c.sigma, scale };
        let y = tr.targets();
        let qm = kernel_fit(&qk, &tr.x, &y, c.alpha, c.sigma, scale)?;
        let gm = kernel_fit(&gk, &tr.x, &y, c.alpha, c.sigma, scale)?;
        let qp: Vec<f64> = te.x.iter().map(|x| kernel_predict(&qm, x, &qk)).collect();
        let gp: Vec<f64> = te.x.iter().map(|x| kernel_predict(&gm, x, &gk)).collect();
        circuit_acc.push(label_accuracy(&qp, &te.y));
        classical_acc.push(label_accuracy(&gp, &te.y));
        if si == 0 {
            let k = kernel_matrix(&qk, &tr.x);
            let cols: Vec<String> = (0..k.ncols()).map(|j| format!("k{j}")).collect();
            let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
            let mut kt = Table::new("kernel_matrix", &col_refs);
            for i in 0..k.nrows() {
                kt.push(k.row(i).iter().map(|v| num(*v)));
            }
            report.tables.push(kt);
            let grid = lattice(&full.x, c.split.grid);
            let mut t = Table::new("decision", &["x1", "x2", "f_circuit", "f_gaussian"]);
            let vals: Vec<(f64, f64)> = grid.par_iter().map(|p| (kernel_predict(&qm, p, &qk), kernel_predict(&gm, p, &gk))).collect();
            for (p, (a, b)) in grid.iter().zip(vals) {
                t.push([num(p[0]), num(p[1]), num(a), num(b)]);
            }
            report.tables.push(t);
            report.files.push(("models/kernel_model.json".into(), serde_json::to_string_pretty(&qm).map_err(|e| Error::Parse(e.to_string()))?));
        }
    }
    report.metric("kernel_fit_max_abs_error", obs.max_abs_error);
    report.metric("circuit_test_accuracy", &circuit_acc);
    report.metric("gaussian_test_accuracy", &classical_acc);
    report.metric("mean_circuit_test_accuracy", mean(&circuit_acc));
    report.metric("mean_gaussian_test_accuracy", mean(&classical_acc));
    Ok(finish(report, start))
}

pub fn cmd_rks(cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let c = &cfg.rks;
    let seed_list = seeds(cfg.seed, c.split.seeds)?;
    let iso = CosineIsolator::new(c.photons)?;
    iso.weights(c.k)?;
    let mut report = RunReport::new("rks", cfg);
    report.seeds = seed_list.clone();
    let mut per_r = Vec::new();
    let mut max_dev = 0.0f64;
    for &r in &c.features {
        let (mut circuit_acc, mut classical_acc) = (vec![], vec![]);
        for (si, &seed) in seed_list.iter().enumerate() {
            let (full, tr, te) = prepared(c.dataset, &c.split, seed)?;
            let (xtr, xte, xall) = if c.standardize {
                let s = Standardizer::fit(&tr.x)?;
                (s.apply_all(&tr.x), s.apply_all(&te.x), s.apply_all(&full.x))
            } else {
                (tr.x.clone(), te.x.clone(), full.x.clone())
            };
            let fs = RandomFeatureSet::sample(r, xtr[0].len(), c.gamma, c.k, seed)?;
            let y = tr.targets();
            let model = rks_train(&xtr, &y, &fs, &iso, c.alpha)?;
            let pred = rks_predict(&model, &xte, &iso)?;
            circuit_acc.push(label_accuracy(&pred, &te.y));

            let zq = feature_matrix(&xtr, &fs, &iso)?;
            let zc = classical_feature_matrix(&xtr, &fs)?;
            max_dev = max_dev.max((&zq - &zc).amax());
            let coef = ridge_on_features(&zc, &y, c.alpha)?;
            let cpred = classical_feature_matrix(&xte, &fs)? * nalgebra::DVector::from_column_slice(&coef);
            classical_acc.push(label_accuracy(cpred.as_slice(), &te.y));
            if si == 0 {
                report.files.push((format!("features/R{r}_seed{seed}.json"), fs.to_json()?));
                let grid = lattice(&xall, c.split.grid);
                let vals = rks_predict(&model, &grid, &iso)?;
                let mut t = Table::new(format!("decision_R{r}"), &["x1", "x2", "f"]);
                for (p, v) in grid.iter().zip(&vals) {
                    t.push([num(p[0]), num(p[1]), num(*v)]);
                }
                report.tables.push(t);
            }
        }
        per_r.push(json!({
            "features": r,
            "circuit_test_accuracy": circuit_acc,
            "classical_test_accuracy": classical_acc,
            "mean_circuit_test_accuracy": mean(&circuit_acc),
            "mean_classical_test_accuracy": mean(&classical_acc),
        }));
    }
    report.metric("sigma", 1.0 / (c.k as f64 * c.gamma));
    report.metric("max_feature_deviation", max_dev);
    report.metric("per_feature_count", per_r);
    Ok(finish(report, start))
}
