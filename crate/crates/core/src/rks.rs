//! Random Fourier features whose cosines are read off the two-mode kernel
//! circuit, and linear ridge regression on those features.

use std::f64::consts::{SQRT_2, TAU};

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSampler;
use crate::linalg::{least_squares, solve_shifted_symmetric};

pub const ISOLATION_GRID_POINTS: usize = 101;

/// Draws `w_r ~ N(0, I_D)` and `b_r ~ U[0, 2π)`.
///
/// Feature `r` uses its own PRNG stream, so any subset of features can be
/// regenerated independently of the others.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomFeatureSet {
    pub gamma: f64,
    pub k: usize,
    pub seed: u64,
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl RandomFeatureSet {
    pub fn sample(features: usize, dims: usize, gamma: f64, k: usize, seed: u64) -> Result<Self> {
        if features == 0 || dims == 0 {
            return Err(Error::Config("feature count and dimension must be positive".into()));
        }
        if k == 0 {
            return Err(Error::Config("frequency index k must be at least 1".into()));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Config(format!("gamma must be finite and positive, got {gamma}")));
        }
        let (w, b) = (0..features)
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                let w: Vec<f64> = (0..dims).map(|_| rng.sample(StandardNormal)).collect();
                (w, rng.random_range(0.0..TAU))
            })
            .unzip();
        Ok(Self { gamma, k, seed, w, b })
    }

    pub fn features(&self) -> usize {
        self.b.len()
    }

    pub fn dims(&self) -> usize {
        self.w.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.is_empty() || self.w.len() != self.b.len() {
            return Err(Error::Config("w and b must hold the same positive number of features".into()));
        }
        let d = self.dims();
        if d == 0 || self.w.iter().any(|row| row.len() != d) {
            return Err(Error::Config("every w_r must have the same positive dimension".into()));
        }
        if self.k == 0 || !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::Config("k must be ≥ 1 and gamma positive".into()));
        }
        if self.w.iter().flatten().chain(&self.b).any(|v| !v.is_finite()) {
            return Err(Error::Config("feature draws must be finite".into()));
        }
        Ok(())
    }

    /// Circuit phase `γ(w_r·x + b_r)` for feature `r`.
    pub fn phase(&self, r: usize, x: &[f64]) -> f64 {
        self.gamma * (self.w[r].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b[r])
    }

    /// Kernel resolution reached by this feature set.
    pub fn sigma(&self) -> f64 {
        1.0 / (self.k as f64 * self.gamma)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let fs: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        fs.validate()?;
        Ok(fs)
    }
}

/// Outcome weights turning the circuit statistics into `√2·cos(k·u)`, one
/// weight vector per `k = 1..n`.
#[derive(Clone, Debug)]
pub struct CosineIsolator {
    sampler: KernelSampler,
    weights: Vec<Vec<f64>>,
}

impl CosineIsolator {
    pub fn new(photons: usize) -> Result<Self> {
        let sampler = KernelSampler::new(photons)?;
        let grid: Vec<f64> = (0..ISOLATION_GRID_POINTS).map(|i| TAU * i as f64 / ISOLATION_GRID_POINTS as f64).collect();
        let table = sampler.probability_table(&grid)?;
        let weights = (1..=photons)
            .map(|k| {
                let target = DVector::from_iterator(grid.len(), grid.iter().map(|u| SQRT_2 * (k as f64 * u).cos()));
                least_squares(&table, &target).map(|w| w.iter().copied().collect())
            })
            .collect::<Result<_>>()?;
        Ok(Self { sampler, weights })
    }

    pub fn photons(&self) -> usize {
        self.sampler.photons()
    }

    pub fn weights(&self, k: usize) -> Result<&[f64]> {
        if k == 0 || k > self.photons() {
            return Err(Error::FrequencyOutOfSpectrum { k, photons: self.photons() });
        }
        Ok(&self.weights[k - 1])
    }

    pub fn probabilities(&self, u: f64) -> Result<Vec<f64>> {
        self.sampler.probabilities(u)
    }

    /// `√2·cos(k·u)` for every `k = 1..n` from one set of probabilities.
    pub fn all_cosines(&self, u: f64) -> Result<Vec<f64>> {
        let p = self.probabilities(u)?;
        Ok(self.weights.iter().map(|w| dot(w, &p)).collect())
    }

    pub fn cosine(&self, k: usize, u: f64) -> Result<f64> {
        let w = self.weights(k)?;
        Ok(dot(w, &self.probabilities(u)?))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `√2·cos(k·u)` read from the circuit with the given outcome weights.
pub fn isolated_cosine(photons: usize, k: usize, u: f64, weights: &[f64]) -> Result<f64> {
    if k == 0 || k > photons {
        return Err(Error::FrequencyOutOfSpectrum { k, photons });
    }
    KernelSampler::new(photons)?.response(u, weights)
}

fn check_dims(xs: &[Vec<f64>], fs: &RandomFeatureSet) -> Result<()> {
    fs.validate()?;
    match xs.iter().find(|x| x.len() != fs.dims()) {
        Some(x) => Err(Error::DimensionMismatch { expected: fs.dims(), got: x.len() }),
        None => Ok(()),
    }
}

/// Circuit-derived features for every `k = 1..n` at once: `result[k−1]` is
/// the `N × R` matrix at frequency `k`.
pub fn feature_matrices_all_k(xs: &[Vec<f64>], fs: &RandomFeatureSet, iso: &CosineIsolator) -> Result<Vec<DMatrix<f64>>> {
    check_dims(xs, fs)?;
    let r = fs.features();
    let norm = (r as f64).sqrt();
    let cells: Vec<Vec<f64>> = (0..xs.len() * r)
        .into_par_iter()
        .map(|idx| iso.all_cosines(fs.phase(idx % r, &xs[idx / r])))
        .collect::<Result<_>>()?;
    Ok((0..iso.photons()).map(|k| DMatrix::from_fn(xs.len(), r, |i, j| cells[i * r + j][k] / norm)).collect())
}

/// `z(x_i)_r = (1/√R)·√2 cos(kγ[w_r·x_i + b_r])`, obtained from circuit statistics.
pub fn feature_matrix(xs: &[Vec<f64>], fs: &RandomFeatureSet, iso: &CosineIsolator) -> Result<DMatrix<f64>> {
    check_dims(xs, fs)?;
    let weights = iso.weights(fs.k)?;
    let r = fs.features();
    let norm = (r as f64).sqrt();
    let cells: Vec<f64> = (0..xs.len() * r)
        .into_par_iter()
        .map(|idx| iso.probabilities(fs.phase(idx % r, &xs[idx / r])).map(|p| dot(weights, &p) / norm))
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_row_slice(xs.len(), r, &cells))
}

/// The same features computed directly with `cos`.
pub fn classical_feature_matrix(xs: &[Vec<f64>], fs: &RandomFeatureSet) -> Result<DMatrix<f64>> {
    check_dims(xs, fs)?;
    let r = fs.features();
    let norm = (r as f64).sqrt();
    let k = fs.k as f64;
    Ok(DMatrix::from_fn(xs.len(), r, |i, j| SQRT_2 * (k * fs.phase(j, &xs[i])).cos() / norm))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RksModel {
    pub coefficients: Vec<f64>,
    pub feature_set: RandomFeatureSet,
    pub alpha: f64,
}

/// Solves `(zᵀz + αI)c = zᵀy` for a precomputed feature matrix.
pub fn ridge_on_features(z: &DMatrix<f64>, y: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("alpha must be finite and non-negative, got {alpha}")));
    }
    if z.nrows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if z.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: z.nrows(), got: y.len() });
    }
    if alpha == 0.0 && z.ncols() > z.nrows() {
        return Err(Error::Singular);
    }
    let gram = z.transpose() * z;
    let rhs = z.transpose() * DVector::from_column_slice(y);
    Ok(solve_shifted_symmetric(&gram, alpha, &rhs)?.iter().copied().collect())
}

pub fn rks_train(xs: &[Vec<f64>], y: &[f64], fs: &RandomFeatureSet, iso: &CosineIsolator, alpha: f64) -> Result<RksModel> {
    let z = feature_matrix(xs, fs, iso)?;
    let coefficients = ridge_on_features(&z, y, alpha)?;
    Ok(RksModel { coefficients, feature_set: fs.clone(), alpha })
}

/// `c · z(x)` for each input point.
pub fn rks_predict(model: &RksModel, xs: &[Vec<f64>], iso: &CosineIsolator) -> Result<Vec<f64>> {
    let z = feature_matrix(xs, &model.feature_set, iso)?;
    Ok((z * DVector::from_column_slice(&model.coefficients)).iter().copied().collect())
}
