//! Joint training of mesh angles and observable weights against a
//! regularised squared loss, and sign classification with the result.

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::error::{Error, Result};
use crate::model::{Evaluator, Observable};
use crate::optim::{minimize_least_squares, DfoOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub alpha: f64,
    /// Evaluation budget per restart.
    pub max_evals: usize,
    pub seed: u64,
    pub restarts: usize,
    /// Mesh angles live in `[−mesh_bound, mesh_bound]`.
    pub mesh_bound: f64,
    /// Observable weights live in `[−weight_bound, weight_bound]`.
    pub weight_bound: f64,
    pub rho_begin: f64,
    pub rho_end: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            max_evals: 5000,
            seed: 0,
            restarts: 10,
            mesh_bound: PI,
            weight_bound: 5.0,
            rho_begin: 0.1,
            rho_end: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be a finite non-negative number, got {}", self.alpha)));
        }
        if self.max_evals == 0 {
            return Err(Error::Config("max_evals must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if !(self.mesh_bound > 0.0 && self.mesh_bound.is_finite() && self.weight_bound > 0.0 && self.weight_bound.is_finite()) {
            return Err(Error::Config("parameter bounds must be finite and positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: CircuitSpec,
    pub obs: Observable,
    pub config: TrainConfig,
    /// `(cumulative evaluation count, best cost so far)`.
    pub history: Vec<(usize, f64)>,
    pub final_cost: f64,
    pub restart_costs: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

impl TrainedModel {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        model.spec.validate()?;
        model.config.validate()?;
        Evaluator::for_spec(&model.spec)?;
        let expected = Observable::weight_count(model.obs.detector, model.spec.modes, model.spec.photons())?;
        if model.obs.modes != model.spec.modes || model.obs.photons != model.spec.photons() {
            return Err(Error::Config("observable does not match the circuit".into()));
        }
        if model.obs.weights.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: model.obs.weights.len() });
        }
        Ok(model)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Evaluator::for_spec(&self.spec)?.evaluate(&self.spec, &self.obs, x)
    }
}

fn check_data(xs: &[Vec<f64>], targets: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if xs.len() != targets.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: targets.len() });
    }
    Ok(())
}

/// `(1/2N) Σ (g_i − f(x_i))² + α Σ λ_j²`.
pub fn cost(spec: &CircuitSpec, obs: &Observable, xs: &[Vec<f64>], targets: &[f64], alpha: f64) -> Result<f64> {
    check_data(xs, targets)?;
    let ev = Evaluator::for_spec(spec)?;
    let preds = ev.evaluate_batch(spec, obs, xs)?;
    let sse: f64 = preds.iter().zip(targets).map(|(f, g)| (g - f) * (g - f)).sum();
    Ok(sse / (2.0 * xs.len() as f64) + alpha * obs.squared_norm())
}

struct Problem<'a> {
    ev: &'a Evaluator,
    spec: &'a CircuitSpec,
    obs: &'a Observable,
    xs: &'a [Vec<f64>],
    targets: &'a [f64],
    alpha: f64,
    mesh_len: usize,
}

impl Problem<'_> {
    fn unpack(&self, p: &[f64]) -> (CircuitSpec, Observable) {
        let mut spec = self.spec.clone();
        spec.set_flat_mesh_params(&p[..self.mesh_len]).expect("parameter layout fixed");
        let mut obs = self.obs.clone();
        obs.weights.copy_from_slice(&p[self.mesh_len..]);
        (spec, obs)
    }

    /// Residuals whose half squared norm is the training cost.
    fn residuals(&self, p: &[f64]) -> Vec<f64> {
        let (spec, obs) = self.unpack(p);
        let scale = (self.xs.len() as f64).sqrt();
        let reg = (2.0 * self.alpha).sqrt();
        let mut r: Vec<f64> = self
            .xs
            .iter()
            .zip(self.targets)
            .map(|(x, g)| match self.ev.evaluate(&spec, &obs, x) {
                Ok(f) => (g - f) / scale,
                Err(_) => f64::NAN,
            })
            .collect();
        if self.alpha > 0.0 {
            r.extend(obs.weights.iter().map(|w| reg * w));
        }
        r
    }
}

/// Trains `(Θ, λ)` from `spec`/`obs` by seeded multi-restart derivative-free
/// search. Restart 0 starts from the given parameters; later restarts draw
/// every parameter uniformly inside its bounds.
pub fn train(spec: &CircuitSpec, obs: &Observable, xs: &[Vec<f64>], targets: &[f64], config: &TrainConfig) -> Result<TrainedModel> {
    config.validate()?;
    check_data(xs, targets)?;
    let ev = Evaluator::for_spec(spec)?;
    ev.evaluate(spec, obs, &xs[0])?;
    for x in xs {
        if x.len() != spec.features() {
            return Err(Error::DimensionMismatch { expected: spec.features(), got: x.len() });
        }
    }
    let mesh_len = spec.mesh_param_total();
    let problem = Problem { ev: &ev, spec, obs, xs, targets, alpha: config.alpha, mesh_len };
    let mut bounds = vec![(-config.mesh_bound, config.mesh_bound); mesh_len];
    bounds.extend(std::iter::repeat_n((-config.weight_bound, config.weight_bound), obs.weights.len()));
    let opts = DfoOptions { max_evals: config.max_evals, rho_begin: config.rho_begin, rho_end: config.rho_end, target_cost: 0.0 };

    let start = |restart: usize| -> Vec<f64> {
        if restart == 0 {
            let mut p = spec.flat_mesh_params();
            p.extend_from_slice(&obs.weights);
            return p;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(restart as u64);
        bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect()
    };
    let run = |restart: usize| minimize_least_squares(|p| problem.residuals(p), &start(restart), &bounds, &opts);

    let first = run(0)?;
    let mut outcomes = vec![first];
    if outcomes[0].cost > opts.target_cost {
        let rest: Vec<_> = (1..config.restarts).into_par_iter().map(run).collect::<Result<_>>()?;
        outcomes.extend(rest);
    }

    let mut history = Vec::new();
    let mut offset = 0;
    let mut best_so_far = f64::INFINITY;
    for o in &outcomes {
        for &(e, c) in &o.history {
            if c < best_so_far {
                best_so_far = c;
                history.push((offset + e, c));
            }
        }
        offset += o.evals;
    }
    let best = outcomes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cost.total_cmp(&b.1.cost).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let (spec_opt, obs_opt) = problem.unpack(&outcomes[best].x);
    let final_cost = cost(&spec_opt, &obs_opt, xs, targets, config.alpha)?;
    Ok(TrainedModel {
        spec: spec_opt,
        obs: obs_opt,
        config: config.clone(),
        history,
        final_cost,
        restart_costs: outcomes.iter().map(|o| o.cost).collect(),
        evaluations: offset,
        converged: outcomes[best].converged,
    })
}

/// Label from the sign of `f`; zero maps to `+1`.
pub fn sign_label(f: f64) -> i8 {
    if f >= 0.0 {
        1
    } else {
        -1
    }
}

pub fn classify(model: &TrainedModel, x: &[f64]) -> Result<i8> {
    Ok(sign_label(model.predict(x)?))
}

/// Fraction of points whose predicted sign matches the label.
pub fn accuracy(model: &TrainedModel, xs: &[Vec<f64>], labels: &[i8]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if xs.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: labels.len() });
    }
    let ev = Evaluator::for_spec(&model.spec)?;
    let preds = ev.evaluate_batch(&model.spec, &model.obs, xs)?;
    Ok(label_accuracy(&preds, labels))
}

pub fn label_accuracy(predictions: &[f64], labels: &[i8]) -> f64 {
    let correct = predictions.iter().zip(labels).filter(|(f, &y)| sign_label(**f) == y).count();
    correct as f64 / labels.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::EncodingLayout;
    use crate::fock::FockState;
    use crate::model::Detector;

    fn setup(input: Vec<usize>) -> (CircuitSpec, Observable) {
        let n = input.iter().sum();
        let spec = CircuitSpec::new(3, FockState::new(input), EncodingLayout::single()).unwrap();
        let obs = Observable::zeros(Detector::Pnr, 3, n).unwrap();
        (spec, obs)
    }

    fn grid() -> Vec<Vec<f64>> {
        (0..20).map(|i| vec![-3.0 + 0.3 * i as f64]).collect()
    }

    #[test]
    fn cost_examples() {
        let (spec, obs) = setup(vec![1, 1, 0]);
        let xs = grid();
        let targets: Vec<f64> = xs.iter().map(|x| x[0].sin()).collect();
        let expected: f64 = targets.iter().map(|g| g * g).sum::<f64>() / (2.0 * xs.len() as f64);
        assert!((cost(&spec, &obs, &xs, &targets, 0.0).unwrap() - expected).abs() < 1e-15);

        let ones = Observable::constant(Detector::Pnr, 3, 2, 1.0).unwrap();
        let perfect = vec![1.0; xs.len()];
        assert!(cost(&spec, &ones, &xs, &perfect, 0.0).unwrap().abs() < 1e-20);

        let obs = Observable { weights: vec![0.5, -0.2, 0.1, 0.0, 1.0, 0.3], ..ones };
        let c0 = cost(&spec, &obs, &xs, &targets, 0.0).unwrap();
        let c1 = cost(&spec, &obs, &xs, &targets, 0.3).unwrap();
        assert!((c1 - c0 - 0.3 * obs.squared_norm()).abs() < 1e-14);
        assert!(c1 > c0);
    }

    #[test]
    fn empty_dataset_rejected() {
        let (spec, obs) = setup(vec![1, 0, 0]);
        assert!(matches!(cost(&spec, &obs, &[], &[], 0.0), Err(Error::EmptyDataset)));
    }

    #[test]
    fn zero_target_is_solved_at_start() {
        let (spec, obs) = setup(vec![1, 1, 0]);
        let xs = grid();
        let model = train(&spec, &obs, &xs, &vec![0.0; xs.len()], &TrainConfig::default()).unwrap();
        assert_eq!(model.final_cost, 0.0);
        assert_eq!(model.evaluations, 1);
        assert_eq!(model.history, vec![(1, 0.0)]);
    }

    #[test]
    fn training_is_deterministic_and_monotone() {
        let (spec, obs) = setup(vec![1, 0, 0]);
        let xs = grid();
        let targets: Vec<f64> = xs.iter().map(|x| 0.3 + x[0].cos()).collect();
        let cfg = TrainConfig { restarts: 3, max_evals: 400, seed: 5, ..Default::default() };
        let a = train(&spec, &obs, &xs, &targets, &cfg).unwrap();
        let b = train(&spec, &obs, &xs, &targets, &cfg).unwrap();
        assert_eq!(a, b);
        for w in a.history.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
        let recomputed = cost(&a.spec, &a.obs, &xs, &targets, cfg.alpha).unwrap();
        assert!((recomputed - a.final_cost).abs() < 1e-12);
        assert!(a.final_cost < 1e-6, "degree-1 target should be reachable, got {}", a.final_cost);
    }

    #[test]
    fn sign_tie_break() {
        assert_eq!(sign_label(0.3), 1);
        assert_eq!(sign_label(-0.3), -1);
        assert_eq!(sign_label(0.0), 1);
    }

    #[test]
    fn accuracy_extremes() {
        let (spec, _) = setup(vec![1, 0, 0]);
        let obs = Observable::constant(Detector::Pnr, 3, 1, 0.5).unwrap();
        let model = TrainedModel {
            spec,
            obs,
            config: TrainConfig::default(),
            history: vec![],
            final_cost: 0.0,
            restart_costs: vec![],
            evaluations: 0,
            converged: true,
        };
        let xs = grid();
        assert_eq!(accuracy(&model, &xs, &vec![1; xs.len()]).unwrap(), 1.0);
        assert_eq!(accuracy(&model, &xs, &vec![-1; xs.len()]).unwrap(), 0.0);
        assert_eq!(classify(&model, &[0.2]).unwrap(), 1);
    }

    #[test]
    fn model_json_round_trip() {
        let (spec, obs) = setup(vec![1, 1, 0]);
        let xs = grid();
        let targets: Vec<f64> = xs.iter().map(|x| x[0].cos()).collect();
        let cfg = TrainConfig { restarts: 1, max_evals: 50, ..Default::default() };
        let m = train(&spec, &obs, &xs, &targets, &cfg).unwrap();
        let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(TrainedModel::from_json("{}").is_err());
    }
}
