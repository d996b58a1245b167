//! Two-mode `H·S(δ)·H` circuit used as a tunable translation-invariant kernel,
//! plus kernel ridge regression on top of it.
//!
//! Input `|n,0⟩`, phase `δ` on mode 1. Outcomes are ordered
//! `(n,0), (n−1,1), …, (0,n)`. The response is a cosine polynomial of degree
//! `n` in `δ`, symmetric about `π`, so the fitted kernel is the Gaussian in
//! the phase distance `min(δ, 2π−δ)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{enumerate_fock_basis, output_amplitudes, FockBasis, FockState, MAX_PHOTONS};
use crate::linalg::{least_squares, solve_shifted_symmetric, ComplexMatrix};
use crate::model::{fourier_from_samples, FourierCoefficients};

pub const DEFAULT_GRID_POINTS: usize = 200;

/// `H·diag(1, e^{iδ})·H` with `H = [[1,1],[1,−1]]/√2`.
pub fn kernel_unitary(delta: f64) -> ComplexMatrix {
    let h = ComplexMatrix::from_real_rows(&[vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2], vec![FRAC_1_SQRT_2, -FRAC_1_SQRT_2]]);
    let s = ComplexMatrix::from_diagonal(&[Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, delta)]);
    &(&h * &s) * &h
}

/// Outcome distribution of the kernel circuit for a fixed photon number.
#[derive(Clone, Debug)]
pub struct KernelSampler {
    basis: FockBasis,
    input: FockState,
}

impl KernelSampler {
    pub fn new(photons: usize) -> Result<Self> {
        if photons == 0 {
            return Err(Error::Config("kernel circuit needs at least one photon".into()));
        }
        if photons > MAX_PHOTONS {
            return Err(Error::TooManyPhotons { photons, max: MAX_PHOTONS });
        }
        Ok(Self { basis: enumerate_fock_basis(2, photons)?, input: FockState::new(vec![photons, 0]) })
    }

    pub fn photons(&self) -> usize {
        self.basis.photons()
    }

    pub fn outcome_count(&self) -> usize {
        self.basis.len()
    }

    pub fn probabilities(&self, delta: f64) -> Result<Vec<f64>> {
        let amps = output_amplitudes(&kernel_unitary(delta), &self.basis, &self.input)?;
        Ok(amps.iter().map(|a| a.norm_sqr()).collect())
    }

    /// Outcome probabilities on every grid point, one row per point.
    pub fn probability_table(&self, deltas: &[f64]) -> Result<DMatrix<f64>> {
        let rows = deltas.iter().map(|&d| self.probabilities(d)).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(deltas.len(), self.outcome_count(), |i, j| rows[i][j]))
    }

    pub fn response(&self, delta: f64, weights: &[f64]) -> Result<f64> {
        if weights.len() != self.outcome_count() {
            return Err(Error::DimensionMismatch { expected: self.outcome_count(), got: weights.len() });
        }
        Ok(self.probabilities(delta)?.iter().zip(weights).map(|(p, w)| p * w).sum())
    }
}

/// `Σ_j λ_j p_j(δ)` for input `|n,0⟩`.
pub fn kernel_circuit_response(photons: usize, delta: f64, weights: &[f64]) -> Result<f64> {
    KernelSampler::new(photons)?.response(delta, weights)
}

/// Distance on the circle between phase `δ` and `0`.
pub fn phase_distance(delta: f64) -> f64 {
    let d = delta.rem_euclid(TAU);
    d.min(TAU - d)
}

/// Gaussian of resolution `σ` in the circular phase distance.
pub fn kernel_target(delta: f64, sigma: f64) -> f64 {
    let w = phase_distance(delta);
    (-w * w / (2.0 * sigma * sigma)).exp()
}

/// `points` equispaced phases covering `[0, 2π]` inclusive.
pub fn delta_grid(points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..points).map(|i| TAU * i as f64 / (points - 1) as f64).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelObservable {
    pub photons: usize,
    pub sigma: f64,
    pub weights: Vec<f64>,
    pub max_abs_error: f64,
    pub grid_points: usize,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && !sigma.is_nan() {
        Ok(())
    } else {
        Err(Error::Config(format!("sigma must be positive, got {sigma}")))
    }
}

/// Least-squares weights reproducing the target from a precomputed
/// probability table. Different `σ` reuse the same table.
pub fn fit_from_table(table: &DMatrix<f64>, grid: &[f64], photons: usize, sigma: f64) -> Result<KernelObservable> {
    check_sigma(sigma)?;
    if table.nrows() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: table.nrows() });
    }
    if grid.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let target = DVector::from_iterator(grid.len(), grid.iter().map(|&d| kernel_target(d, sigma)));
    let weights = least_squares(table, &target)?;
    let fitted = table * &weights;
    let max_abs_error = (fitted - &target).amax();
    Ok(KernelObservable { photons, sigma, weights: weights.iter().copied().collect(), max_abs_error, grid_points: grid.len() })
}

pub fn fit_kernel_observable(photons: usize, sigma: f64, grid_points: usize) -> Result<KernelObservable> {
    check_sigma(sigma)?;
    let sampler = KernelSampler::new(photons)?;
    let grid = delta_grid(grid_points);
    fit_from_table(&sampler.probability_table(&grid)?, &grid, photons, sigma)
}

/// Solves `(K + αI)β = y`.
pub fn ridge_solve(k: &DMatrix<f64>, y: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("alpha must be finite and non-negative, got {alpha}")));
    }
    if k.nrows() != k.ncols() {
        return Err(Error::NotSquare { rows: k.nrows(), cols: k.ncols() });
    }
    let scale = k.amax().max(1.0);
    if (k - k.transpose()).amax() > 1e-10 * scale {
        return Err(Error::Config("kernel matrix is not symmetric".into()));
    }
    let beta = solve_shifted_symmetric(k, alpha, &DVector::from_column_slice(y))?;
    Ok(beta.iter().copied().collect())
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `π / max pairwise distance`, so every training pair maps into `[0, π]`.
pub fn distance_scale(xs: &[Vec<f64>]) -> Result<f64> {
    let mut max = 0.0f64;
    for (i, a) in xs.iter().enumerate() {
        for b in &xs[i + 1..] {
            max = max.max(euclidean(a, b));
        }
    }
    if max > 0.0 && max.is_finite() {
        Ok(PI / max)
    } else {
        Err(Error::Config("training points must not all coincide".into()))
    }
}

pub trait Kernel: Sync {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64;
}

/// Kernel realised by the photonic circuit with a fitted observable.
///
/// The response is band-limited, so it is stored as its exact cosine
/// coefficients and evaluated in closed form.
#[derive(Clone, Debug)]
pub struct CircuitKernel {
    pub observable: KernelObservable,
    pub scale: f64,
    coefficients: FourierCoefficients,
}

impl CircuitKernel {
    pub fn new(observable: KernelObservable, scale: f64) -> Result<Self> {
        let sampler = KernelSampler::new(observable.photons)?;
        let coefficients = fourier_from_samples(observable.photons, |d| sampler.response(d, &observable.weights))?;
        Ok(Self { observable, scale, coefficients })
    }

    pub fn phase(&self, a: &[f64], b: &[f64]) -> f64 {
        (self.scale * euclidean(a, b)).min(PI)
    }

    pub fn response(&self, delta: f64) -> f64 {
        self.coefficients.reconstruct(delta)
    }
}

impl Kernel for CircuitKernel {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        self.response(self.phase(a, b))
    }
}

/// `exp(−(s·‖a−b‖)² / 2σ²)`, the classical counterpart of [`CircuitKernel`].
#[derive(Clone, Copy, Debug)]
pub struct GaussianKernel {
    pub sigma: f64,
    pub scale: f64,
}

impl Kernel for GaussianKernel {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = self.scale * euclidean(a, b);
        (-d * d / (2.0 * self.sigma * self.sigma)).exp()
    }
}

pub fn kernel_matrix<K: Kernel>(kernel: &K, xs: &[Vec<f64>]) -> DMatrix<f64> {
    let n = xs.len();
    let upper: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| (i..n).map(|j| kernel.eval(&xs[i], &xs[j])).collect()).collect();
    DMatrix::from_fn(n, n, |i, j| if i <= j { upper[i][j - i] } else { upper[j][i - j] })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub beta: Vec<f64>,
    pub support: Vec<Vec<f64>>,
    pub sigma: f64,
    pub alpha: f64,
    pub scale: f64,
}

pub fn kernel_fit<K: Kernel>(kernel: &K, xs: &[Vec<f64>], y: &[f64], alpha: f64, sigma: f64, scale: f64) -> Result<KernelModel> {
    if xs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if xs.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: y.len() });
    }
    let beta = ridge_solve(&kernel_matrix(kernel, xs), y, alpha)?;
    Ok(KernelModel { beta, support: xs.to_vec(), sigma, alpha, scale })
}

/// `Σ_i β_i k(x_i, x)`.
pub fn kernel_predict<K: Kernel>(model: &KernelModel, x: &[f64], kernel: &K) -> f64 {
    model.beta.iter().zip(&model.support).map(|(b, s)| b * kernel.eval(s, x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::binomial;

    fn bernstein(n: usize, delta: f64) -> Vec<f64> {
        let t = (delta / 2.0).sin().powi(2);
        (0..=n).map(|j| binomial(n as u64, j as u64) as f64 * (1.0 - t).powi((n - j) as i32) * t.powi(j as i32)).collect()
    }

    #[test]
    fn probabilities_match_closed_form() {
        for n in [1, 2, 5, 10] {
            let s = KernelSampler::new(n).unwrap();
            for delta in [0.0, 0.3, 1.7, PI, 4.4, 6.1] {
                let p = s.probabilities(delta).unwrap();
                let q = bernstein(n, delta);
                for (a, b) in p.iter().zip(&q) {
                    assert!((a - b).abs() < 1e-10, "n={n} delta={delta}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn unit_weights_give_one() {
        for delta in [0.0, 1.0, 2.5, 5.9] {
            assert!((kernel_circuit_response(4, delta, &[1.0; 5]).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_phase_is_identity() {
        let u = kernel_unitary(0.0);
        assert!(u.approx_eq(&ComplexMatrix::identity(2), 1e-15));
        let w = [0.7, -1.0, 2.0, 3.0];
        assert!((kernel_circuit_response(3, 0.0, &w).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn response_is_band_limited() {
        let s = KernelSampler::new(3).unwrap();
        let w = [0.3, -1.2, 0.8, 2.0];
        let c = fourier_from_samples(8, |d| s.response(d, &w)).unwrap();
        assert!(c.max_abs_beyond(3) < 1e-10);
        assert!(c.frequencies().all(|k| c.get(k).im.abs() < 1e-12));
    }

    #[test]
    fn infinite_sigma_fits_exactly() {
        let fit = fit_kernel_observable(3, f64::INFINITY, 50).unwrap();
        assert!(fit.max_abs_error < 1e-12);
        for w in &fit.weights {
            assert!((w - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn shared_table_reproduces_individual_fits() {
        let s = KernelSampler::new(6).unwrap();
        let grid = delta_grid(DEFAULT_GRID_POINTS);
        let table = s.probability_table(&grid).unwrap();
        for sigma in [0.25, 0.5, 1.0] {
            let shared = fit_from_table(&table, &grid, 6, sigma).unwrap();
            let own = fit_kernel_observable(6, sigma, DEFAULT_GRID_POINTS).unwrap();
            assert_eq!(shared, own);
        }
    }

    #[test]
    fn invalid_sigma() {
        assert!(fit_kernel_observable(2, 0.0, 10).is_err());
        assert!(fit_kernel_observable(2, -1.0, 10).is_err());
        assert!(fit_kernel_observable(0, 1.0, 10).is_err());
    }

    #[test]
    fn ridge_examples() {
        let y = [1.0, -2.0, 0.5];
        let eye = DMatrix::identity(3, 3);
        assert_eq!(ridge_solve(&eye, &y, 0.0).unwrap(), y.to_vec());
        let half = ridge_solve(&eye, &y, 1.0).unwrap();
        for (h, v) in half.iter().zip(&y) {
            assert!((h - v / 2.0).abs() < 1e-15);
        }
        let singular = DMatrix::from_element(3, 3, 1.0);
        assert!(matches!(ridge_solve(&singular, &y, 0.0), Err(Error::Singular)));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(ridge_solve(&asym, &[1.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn circuit_kernel_matches_sampler() {
        let obs = fit_kernel_observable(5, 0.5, DEFAULT_GRID_POINTS).unwrap();
        let s = KernelSampler::new(5).unwrap();
        let k = CircuitKernel::new(obs.clone(), 1.0).unwrap();
        for d in [0.0, 0.4, 1.3, 2.9, PI] {
            assert!((k.response(d) - s.response(d, &obs.weights).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn predict_examples() {
        let obs = fit_kernel_observable(10, 0.5, DEFAULT_GRID_POINTS).unwrap();
        let k = CircuitKernel::new(obs, 1.0).unwrap();
        let model = KernelModel { beta: vec![1.0], support: vec![vec![0.2, 0.3]], sigma: 0.5, alpha: 0.0, scale: 1.0 };
        assert!((kernel_predict(&model, &[0.2, 0.3], &k) - 1.0).abs() < 0.01);
        let zero = KernelModel { beta: vec![0.0], ..model };
        assert_eq!(kernel_predict(&zero, &[1.0, 1.0], &k), 0.0);
    }

    #[test]
    fn phase_is_clamped() {
        let k = GaussianKernel { sigma: 1.0, scale: 1.0 };
        assert!((k.eval(&[0.0], &[1.0]) - (-0.5f64).exp()).abs() < 1e-15);
        let obs = fit_kernel_observable(2, 1.0, 20).unwrap();
        let c = CircuitKernel::new(obs, 1.0).unwrap();
        assert_eq!(c.phase(&[0.0], &[10.0]), PI);
    }
}
