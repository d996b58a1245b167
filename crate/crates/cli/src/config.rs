//! Run configuration. Every command reads its own table; the resolved
//! configuration is written back into the run directory verbatim, so a run
//! can be repeated with `--config <run>/config.toml`.

use std::path::Path;

use fockml::data::{DatasetKind, DEFAULT_CIRCLES_FACTOR};
use fockml::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub gen_data: GenDataConfig,
    pub fit_fourier: FitFourierConfig,
    pub dof_table: DofTableConfig,
    pub classify_variational: ClassifyVariationalConfig,
    pub fit_kernel: FitKernelConfig,
    pub classify_kernel: ClassifyKernelConfig,
    pub rks: RksConfig,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Err(Error::Config("config file is empty".into()));
        }
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDataConfig {
    pub name: DatasetKind,
    pub samples: usize,
    /// Falls back to the generator's default noise when absent.
    pub noise: Option<f64>,
    pub factor: f64,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        Self { name: DatasetKind::Moons, samples: 100, noise: None, factor: DEFAULT_CIRCLES_FACTOR }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitFourierConfig {
    pub modes: usize,
    pub inputs: Vec<Vec<usize>>,
    /// `c_0` followed by `(re, im)` of `c_1, c_2, …`.
    pub c0: f64,
    pub coefficients: Vec<[f64; 2]>,
    pub x_min: f64,
    pub x_max: f64,
    pub train_points: usize,
    pub curve_points: usize,
    pub alpha: f64,
    pub restarts: usize,
    pub max_evals: usize,
    pub weight_bound: f64,
}

impl Default for FitFourierConfig {
    fn default() -> Self {
        let pi3 = 3.0 * std::f64::consts::PI;
        Self {
            modes: 3,
            inputs: vec![vec![1, 0, 0], vec![1, 1, 0], vec![1, 1, 1]],
            c0: 0.2,
            coefficients: vec![[0.69, 0.52], [0.81, 0.41], [0.68, 0.82]],
            x_min: -pi3,
            x_max: pi3,
            train_points: 60,
            curve_points: 300,
            alpha: 0.0,
            restarts: 10,
            max_evals: 5000,
            weight_bound: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DofTableConfig {
    pub m_max: u64,
    pub n_max: u64,
}

impl Default for DofTableConfig {
    fn default() -> Self {
        Self { m_max: 3, n_max: 15 }
    }
}

/// Shared dataset and split settings for the classifiers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub samples: usize,
    pub train: usize,
    pub test: usize,
    /// Number of seeds, counting up from the run seed.
    pub seeds: usize,
    pub grid: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { samples: 100, train: 60, test: 40, seeds: 5, grid: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyVariationalConfig {
    pub datasets: Vec<DatasetKind>,
    pub inputs: Vec<Vec<usize>>,
    pub alpha: f64,
    pub restarts: usize,
    pub max_evals: usize,
    pub weight_bound: f64,
    /// Map each feature's training range onto `[0, 2π)` before encoding.
    pub rescale: bool,
    pub split: SplitConfig,
    /// Evaluate a saved model on a CSV dataset instead of training.
    pub model: Option<String>,
    pub data: Option<String>,
}

impl Default for ClassifyVariationalConfig {
    fn default() -> Self {
        Self {
            datasets: vec![DatasetKind::Linear, DatasetKind::Circles, DatasetKind::Moons],
            inputs: vec![vec![1, 0, 0], vec![1, 1, 1], vec![2, 2, 1]],
            alpha: 0.2,
            restarts: 5,
            max_evals: 3000,
            weight_bound: 5.0,
            rescale: false,
            split: SplitConfig::default(),
            model: None,
            data: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitKernelConfig {
    pub photons: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub grid_points: usize,
}

impl Default for FitKernelConfig {
    fn default() -> Self {
        Self { photons: vec![2, 4, 6, 8, 10], sigmas: vec![0.25, 0.33, 0.5, 1.0], grid_points: fockml::kernel::DEFAULT_GRID_POINTS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyKernelConfig {
    pub dataset: DatasetKind,
    pub photons: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub grid_points: usize,
    pub split: SplitConfig,
}

impl Default for ClassifyKernelConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetKind::Circles,
            photons: 10,
            sigma: 0.5,
            alpha: 0.2,
            grid_points: fockml::kernel::DEFAULT_GRID_POINTS,
            split: SplitConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RksConfig {
    pub dataset: DatasetKind,
    pub photons: usize,
    pub gamma: f64,
    pub k: usize,
    pub features: Vec<usize>,
    pub alpha: f64,
    pub standardize: bool,
    pub split: SplitConfig,
}

impl Default for RksConfig {
    fn default() -> Self {
        Self { dataset: DatasetKind::Moons, photons: 10, gamma: 1.0, k: 4, features: vec![1, 10, 100], alpha: 0.2, standardize: false, split: SplitConfig::default() }
    }
}
