//! n-photon quantum models: observables diagonal in the Fock basis,
//! expectation values, Fourier coefficient extraction, degrees-of-freedom
//! counts and finite-shot sampling.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{mode_unitary, CircuitSpec};
use crate::error::{Error, Result};
use crate::fock::{binomial, enumerate_fock_basis, output_amplitudes, FockBasis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    /// Photon-number resolving: one weight per Fock basis state.
    Pnr,
    /// Click/no-click per mode: one weight per click pattern.
    Threshold,
}

/// Partition of a Fock basis by click pattern.
///
/// Patterns are numbered in order of first appearance along the basis.
#[derive(Clone, Debug)]
pub struct ClickPartition {
    pub patterns: Vec<u64>,
    pub members: Vec<Vec<usize>>,
    pub pattern_of: Vec<usize>,
}

impl ClickPartition {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

pub fn group_by_clicks(basis: &FockBasis) -> ClickPartition {
    let mut patterns: Vec<u64> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut pattern_of = Vec::with_capacity(basis.len());
    for (i, state) in basis.iter().enumerate() {
        let mask = state.click_mask();
        let p = match patterns.iter().position(|&q| q == mask) {
            Some(p) => p,
            None => {
                patterns.push(mask);
                members.push(Vec::new());
                patterns.len() - 1
            }
        };
        members[p].push(i);
        pattern_of.push(p);
    }
    ClickPartition { patterns, members, pattern_of }
}

/// Diagonal observable `𝓜(λ)` over PNR outcomes or click patterns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub detector: Detector,
    pub modes: usize,
    pub photons: usize,
    pub weights: Vec<f64>,
}

impl Observable {
    /// Number of weights for the given detector on `modes`/`photons`.
    pub fn weight_count(detector: Detector, modes: usize, photons: usize) -> Result<usize> {
        let basis = enumerate_fock_basis(modes, photons)?;
        Ok(match detector {
            Detector::Pnr => basis.len(),
            Detector::Threshold => group_by_clicks(&basis).len(),
        })
    }

    pub fn constant(detector: Detector, modes: usize, photons: usize, value: f64) -> Result<Self> {
        let count = Self::weight_count(detector, modes, photons)?;
        Ok(Self { detector, modes, photons, weights: vec![value; count] })
    }

    pub fn zeros(detector: Detector, modes: usize, photons: usize) -> Result<Self> {
        Self::constant(detector, modes, photons, 0.0)
    }

    /// Equivalent PNR observable: each Fock state takes its pattern's weight.
    pub fn to_pnr(&self) -> Result<Self> {
        match self.detector {
            Detector::Pnr => Ok(self.clone()),
            Detector::Threshold => {
                let basis = enumerate_fock_basis(self.modes, self.photons)?;
                let part = group_by_clicks(&basis);
                if self.weights.len() != part.len() {
                    return Err(Error::DimensionMismatch { expected: part.len(), got: self.weights.len() });
                }
                let weights = part.pattern_of.iter().map(|&p| self.weights[p]).collect();
                Ok(Self { detector: Detector::Pnr, modes: self.modes, photons: self.photons, weights })
            }
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}

/// Cached basis data for evaluating models with fixed mode and photon counts.
///
/// Read-only after construction; share it across threads freely.
#[derive(Clone, Debug)]
pub struct Evaluator {
    basis: FockBasis,
    clicks: ClickPartition,
}

impl Evaluator {
    pub fn new(modes: usize, photons: usize) -> Result<Self> {
        let basis = enumerate_fock_basis(modes, photons)?;
        let clicks = group_by_clicks(&basis);
        Ok(Self { basis, clicks })
    }

    pub fn for_spec(spec: &CircuitSpec) -> Result<Self> {
        spec.validate()?;
        Self::new(spec.modes, spec.photons())
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn clicks(&self) -> &ClickPartition {
        &self.clicks
    }

    fn check(&self, spec: &CircuitSpec, obs: Option<&Observable>) -> Result<()> {
        if spec.modes != self.basis.modes() {
            return Err(Error::DimensionMismatch { expected: self.basis.modes(), got: spec.modes });
        }
        if spec.photons() != self.basis.photons() {
            return Err(Error::PhotonMismatch { input: spec.photons(), output: self.basis.photons() });
        }
        if let Some(obs) = obs {
            if obs.modes != spec.modes {
                return Err(Error::DimensionMismatch { expected: spec.modes, got: obs.modes });
            }
            if obs.photons != spec.photons() {
                return Err(Error::PhotonMismatch { input: spec.photons(), output: obs.photons });
            }
            let expected = match obs.detector {
                Detector::Pnr => self.basis.len(),
                Detector::Threshold => self.clicks.len(),
            };
            if obs.weights.len() != expected {
                return Err(Error::DimensionMismatch { expected, got: obs.weights.len() });
            }
        }
        Ok(())
    }

    /// PNR outcome probabilities `|⟨b| 𝒰(x) |input⟩|²` in basis order.
    pub fn probabilities(&self, spec: &CircuitSpec, x: &[f64]) -> Result<Vec<f64>> {
        self.check(spec, None)?;
        let u = mode_unitary(spec, x)?;
        Ok(output_amplitudes(&u, &self.basis, &spec.input_state)?.iter().map(|a| a.norm_sqr()).collect())
    }

    /// Contracts PNR probabilities with an observable.
    pub fn expectation(&self, obs: &Observable, probs: &[f64]) -> f64 {
        match obs.detector {
            Detector::Pnr => obs.weights.iter().zip(probs).map(|(w, p)| w * p).sum(),
            Detector::Threshold => {
                self.clicks.members.iter().zip(&obs.weights).map(|(m, w)| w * m.iter().map(|&i| probs[i]).sum::<f64>()).sum()
            }
        }
    }

    pub fn evaluate(&self, spec: &CircuitSpec, obs: &Observable, x: &[f64]) -> Result<f64> {
        self.check(spec, Some(obs))?;
        let probs = self.probabilities(spec, x)?;
        Ok(self.expectation(obs, &probs))
    }

    /// Evaluates every point in parallel; output order follows `xs`.
    pub fn evaluate_batch(&self, spec: &CircuitSpec, obs: &Observable, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check(spec, Some(obs))?;
        xs.par_iter().map(|x| self.evaluate(spec, obs, x)).collect()
    }
}

/// `f(x) = ⟨input| 𝒰†(x) 𝓜 𝒰(x) |input⟩`.
pub fn evaluate_model(spec: &CircuitSpec, obs: &Observable, x: &[f64]) -> Result<f64> {
    Evaluator::for_spec(spec)?.evaluate(spec, obs, x)
}

/// Coefficients `c_ω`, `ω = −D..D`, of a real one-dimensional trigonometric polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficients {
    pub degree: usize,
    pub coeffs: Vec<Complex64>,
}

impl FourierCoefficients {
    pub fn get(&self, omega: i64) -> Complex64 {
        let d = self.degree as i64;
        if omega.abs() > d {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(omega + d) as usize]
        }
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> {
        let d = self.degree as i64;
        -d..=d
    }

    pub fn reconstruct(&self, x: f64) -> f64 {
        self.frequencies().map(|w| (self.get(w) * Complex64::from_polar(1.0, w as f64 * x)).re).sum()
    }

    /// Largest `|c_ω|` with `|ω| > limit`.
    pub fn max_abs_beyond(&self, limit: usize) -> f64 {
        self.frequencies().filter(|w| w.unsigned_abs() as usize > limit).map(|w| self.get(w).norm()).fold(0.0, f64::max)
    }

    /// Largest `|c_ω − conj(c_{−ω})|`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        self.frequencies().map(|w| (self.get(w) - self.get(-w).conj()).norm()).fold(0.0, f64::max)
    }

    /// Highest `|ω|` with `|c_ω| > tol`.
    pub fn support_degree(&self, tol: f64) -> usize {
        self.frequencies().filter(|&w| self.get(w).norm() > tol).map(|w| w.unsigned_abs() as usize).max().unwrap_or(0)
    }
}

/// Exact coefficients of a trigonometric polynomial of degree `≤ degree`
/// from `2D+1` equispaced samples on `[0, 2π)`.
pub fn fourier_from_samples<F>(degree: usize, mut f: F) -> Result<FourierCoefficients>
where
    F: FnMut(f64) -> Result<f64>,
{
    let p = 2 * degree + 1;
    let xs: Vec<f64> = (0..p).map(|k| TAU * k as f64 / p as f64).collect();
    let samples = xs.iter().map(|&x| f(x)).collect::<Result<Vec<f64>>>()?;
    let d = degree as i64;
    let coeffs = (-d..=d)
        .map(|w| {
            samples.iter().zip(&xs).map(|(s, x)| *s * Complex64::from_polar(1.0, -(w as f64) * x)).sum::<Complex64>()
                / p as f64
        })
        .collect();
    Ok(FourierCoefficients { degree, coeffs })
}

/// Fourier coefficients of a one-feature model up to `degree`.
pub fn extract_fourier_coefficients(spec: &CircuitSpec, obs: &Observable, degree: usize) -> Result<FourierCoefficients> {
    if spec.features() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: spec.features() });
    }
    let ev = Evaluator::for_spec(spec)?;
    ev.check(spec, Some(obs))?;
    fourier_from_samples(degree, |x| ev.evaluate(spec, obs, &[x]))
}

/// Degree that always bounds the model's frequency support.
pub fn safe_degree(spec: &CircuitSpec) -> usize {
    (spec.photons() as f64 * spec.layout.max_multiplier()).ceil() as usize
}

/// Coefficients of a `dims`-variate trigonometric polynomial on the tensor
/// grid `[−D, D]^dims`, stored with the first feature varying slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficientsNd {
    pub degree: usize,
    pub dims: usize,
    pub coeffs: Vec<Complex64>,
}

impl FourierCoefficientsNd {
    fn side(&self) -> usize {
        2 * self.degree + 1
    }

    pub fn get(&self, omega: &[i64]) -> Complex64 {
        let d = self.degree as i64;
        if omega.len() != self.dims || omega.iter().any(|w| w.abs() > d) {
            return Complex64::new(0.0, 0.0);
        }
        let idx = omega.iter().fold(0usize, |acc, w| acc * self.side() + (w + d) as usize);
        self.coeffs[idx]
    }

    /// All frequency vectors with their coefficients.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, Complex64)> + '_ {
        let side = self.side();
        let d = self.degree as i64;
        self.coeffs.iter().enumerate().map(move |(mut idx, &c)| {
            let mut w = vec![0i64; self.dims];
            for slot in w.iter_mut().rev() {
                *slot = (idx % side) as i64 - d;
                idx /= side;
            }
            (w, c)
        })
    }
}

pub fn extract_fourier_coefficients_nd(spec: &CircuitSpec, obs: &Observable, degree: usize) -> Result<FourierCoefficientsNd> {
    let ev = Evaluator::for_spec(spec)?;
    ev.check(spec, Some(obs))?;
    let dims = spec.features();
    let side = 2 * degree + 1;
    let total = side.checked_pow(dims as u32).filter(|&t| t <= 1 << 20).ok_or_else(|| {
        Error::Config(format!("tensor grid of side {side} in {dims} dimensions is too large"))
    })?;
    let grid = |mut idx: usize| -> Vec<f64> {
        let mut x = vec![0.0; dims];
        for slot in x.iter_mut().rev() {
            *slot = TAU * (idx % side) as f64 / side as f64;
            idx /= side;
        }
        x
    };
    let points: Vec<Vec<f64>> = (0..total).map(grid).collect();
    let samples = ev.evaluate_batch(spec, obs, &points)?;
    let d = degree as i64;
    let coeffs = (0..total)
        .into_par_iter()
        .map(|widx| {
            let mut w = vec![0i64; dims];
            let mut r = widx;
            for slot in w.iter_mut().rev() {
                *slot = (r % side) as i64 - d;
                r /= side;
            }
            points
                .iter()
                .zip(&samples)
                .map(|(x, s)| {
                    let phase: f64 = w.iter().zip(x).map(|(wi, xi)| *wi as f64 * xi).sum();
                    *s * Complex64::from_polar(1.0, -phase)
                })
                .sum::<Complex64>()
                / total as f64
        })
        .collect();
    Ok(FourierCoefficientsNd { degree, dims, coeffs })
}

/// Real degrees of freedom with PNR detection: `2m(m−1) + C(n+m−1, n)`.
pub fn dof_pnr(modes: u64, photons: u64) -> u64 {
    2 * modes * modes.saturating_sub(1) + binomial(photons + modes.saturating_sub(1), photons)
}

/// Number of distinct threshold click patterns: `Σ_{k=1}^{min(n,m)} C(m, k)`.
pub fn click_pattern_count(modes: u64, photons: u64) -> u64 {
    (1..=photons.min(modes)).map(|k| binomial(modes, k)).sum()
}

/// Real degrees of freedom with threshold detection.
pub fn dof_threshold(modes: u64, photons: u64) -> u64 {
    2 * modes * modes.saturating_sub(1) + click_pattern_count(modes, photons)
}

/// Minimum real parameters to steer `n` complex and one real coefficient: `2n + 1`.
pub fn m_min(photons: u64) -> u64 {
    2 * photons + 1
}

/// Multinomial draw of `shots` PNR outcomes at `x`; counts follow basis order.
pub fn sample_counts(spec: &CircuitSpec, x: &[f64], shots: u64, seed: u64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::Config("shots must be at least 1".into()));
    }
    let probs = Evaluator::for_spec(spec)?.probabilities(spec, x)?;
    Ok(multinomial(&probs, shots, seed))
}

/// Multinomial sampling by sequential conditional binomials.
pub fn multinomial(probs: &[f64], shots: u64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let p = p.max(0.0);
        if i + 1 == probs.len() {
            counts[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(remaining, q).expect("probability in [0, 1]").sample(&mut rng);
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    counts
}
