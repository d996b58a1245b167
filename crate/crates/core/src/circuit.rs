//! Trainable Reck meshes, data-encoding phase layouts and their composition
//! into the mode transformation `U(x, Θ)`.
//!
//! # Mesh convention
//!
//! A mesh on `m` modes is a product of `m(m−1)/2` two-mode blocks
//!
//! ```text
//! T(θ, φ) = [[e^{iφ} cos θ, −sin θ],
//!            [e^{iφ} sin θ,  cos θ]]
//! ```
//!
//! acting on adjacent modes `(p, p+1)`. Blocks are laid out as a triangle:
//! row `r = 0..m−1` holds pairs `p = 0..m−2−r`, rows are visited in order
//! and pairs left to right. Block `k` in that order reads `θ` from flat
//! index `2k` and `φ` from `2k+1`, and is applied after blocks `0..k`, so
//! `W = B_{K−1} ··· B_1 B_0`. All-zero parameters give the identity.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockState, MAX_PHOTONS};
use crate::linalg::ComplexMatrix;

/// Angles of one Reck mesh, `m(m−1)` values in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeshParams(pub Vec<f64>);

impl MeshParams {
    pub fn zeros(modes: usize) -> Self {
        Self(vec![0.0; mesh_param_count(modes)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn mesh_param_count(modes: usize) -> usize {
    modes * modes.saturating_sub(1)
}

/// Adjacent-mode pair `(p, p+1)` of each block, in application order.
pub fn reck_pairs(modes: usize) -> Vec<usize> {
    let mut pairs = Vec::with_capacity(modes * modes.saturating_sub(1) / 2);
    for row in 0..modes.saturating_sub(1) {
        for p in 0..(modes - 1 - row) {
            pairs.push(p);
        }
    }
    pairs
}

/// Left-multiplies `u` by the block `T(θ, φ)` on modes `(p, p+1)`.
fn apply_block(u: &mut ComplexMatrix, p: usize, theta: f64, phi: f64) {
    let (s, c) = theta.sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    for col in 0..u.cols() {
        let a = u[(p, col)];
        let b = u[(p + 1, col)];
        u[(p, col)] = e * c * a - s * b;
        u[(p + 1, col)] = e * s * a + c * b;
    }
}

pub fn reck_unitary(params: &MeshParams, modes: usize) -> Result<ComplexMatrix> {
    if modes == 0 {
        return Err(Error::ZeroModes);
    }
    let expected = mesh_param_count(modes);
    if params.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: params.len() });
    }
    let mut u = ComplexMatrix::identity(modes);
    for (k, p) in reck_pairs(modes).into_iter().enumerate() {
        apply_block(&mut u, p, params.0[2 * k], params.0[2 * k + 1]);
    }
    Ok(u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingKind {
    /// One phase `x` on the first mode.
    Single,
    /// One layer with phase `i·x` on modes `i = 1..m−1`.
    Series1D,
    /// `m−1` layers, each with phase `x` on the first mode.
    Parallel1D,
    /// One layer with `2^d − 1` phases, one per nonempty subset sum of the features.
    SeriesMultiD,
    /// `d` layers, layer `i` encodes feature `i` on the first mode.
    ParallelMultiD,
    /// One layer, feature `i` on mode `i`.
    FeaturePerMode,
}

/// A phase shifter imprinting `coeffs · x` on `mode`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePlacement {
    pub mode: usize,
    pub coeffs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingLayer {
    pub phases: Vec<PhasePlacement>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingLayout {
    pub kind: EncodingKind,
    pub features: usize,
    pub layers: Vec<EncodingLayer>,
}

fn unit(features: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; features];
    v[i] = 1.0;
    v
}

impl EncodingLayout {
    pub fn single() -> Self {
        Self {
            kind: EncodingKind::Single,
            features: 1,
            layers: vec![EncodingLayer { phases: vec![PhasePlacement { mode: 0, coeffs: vec![1.0] }] }],
        }
    }

    pub fn series_1d(modes: usize) -> Self {
        let phases = (0..modes.saturating_sub(1))
            .map(|i| PhasePlacement { mode: i, coeffs: vec![(i + 1) as f64] })
            .collect();
        Self { kind: EncodingKind::Series1D, features: 1, layers: vec![EncodingLayer { phases }] }
    }

    pub fn parallel_1d(modes: usize) -> Self {
        let layers = (0..modes.saturating_sub(1))
            .map(|_| EncodingLayer { phases: vec![PhasePlacement { mode: 0, coeffs: vec![1.0] }] })
            .collect();
        Self { kind: EncodingKind::Parallel1D, features: 1, layers }
    }

    /// Subsets are enumerated by increasing bitmask, so for `d = 2` modes
    /// `0, 1, 2` carry `x1`, `x2`, `x1 + x2`.
    pub fn series_multi_d(features: usize) -> Self {
        let phases = (1u64..(1u64 << features))
            .enumerate()
            .map(|(mode, mask)| PhasePlacement {
                mode,
                coeffs: (0..features).map(|i| if mask & (1 << i) != 0 { 1.0 } else { 0.0 }).collect(),
            })
            .collect();
        Self { kind: EncodingKind::SeriesMultiD, features, layers: vec![EncodingLayer { phases }] }
    }

    pub fn parallel_multi_d(features: usize) -> Self {
        let layers = (0..features)
            .map(|i| EncodingLayer { phases: vec![PhasePlacement { mode: 0, coeffs: unit(features, i) }] })
            .collect();
        Self { kind: EncodingKind::ParallelMultiD, features, layers }
    }

    pub fn feature_per_mode(features: usize) -> Self {
        let phases = (0..features).map(|i| PhasePlacement { mode: i, coeffs: unit(features, i) }).collect();
        Self { kind: EncodingKind::FeaturePerMode, features, layers: vec![EncodingLayer { phases }] }
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Largest integer multiplier of any single feature summed over all
    /// phases (per layer, maximum over modes; summed over layers). Times the
    /// photon number this bounds the model's frequency support.
    pub fn max_multiplier(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.phases.iter().map(|p| p.coeffs.iter().map(|c| c.abs()).sum::<f64>()).fold(0.0, f64::max))
            .sum()
    }

    pub fn validate(&self, modes: usize) -> Result<()> {
        if self.features == 0 {
            return Err(Error::Config("layout needs at least one feature".into()));
        }
        if self.layers.is_empty() {
            return Err(Error::Config("layout needs at least one encoding layer".into()));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let mut seen = vec![false; modes];
            for p in &layer.phases {
                if p.mode >= modes {
                    return Err(Error::Config(format!("layer {l}: phase on mode {} but only {modes} modes", p.mode)));
                }
                if std::mem::replace(&mut seen[p.mode], true) {
                    return Err(Error::Config(format!("layer {l}: mode {} carries two phases", p.mode)));
                }
                if p.coeffs.len() != self.features {
                    return Err(Error::DimensionMismatch { expected: self.features, got: p.coeffs.len() });
                }
                if p.coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Config(format!("layer {l}: non-finite phase coefficient")));
                }
            }
        }
        Ok(())
    }
}

/// Diagonal phase entries of encoding layer `layer` at data point `x`.
pub fn encoding_phases(x: &[f64], layout: &EncodingLayout, layer: usize, modes: usize) -> Result<Vec<Complex64>> {
    if x.len() != layout.features {
        return Err(Error::DimensionMismatch { expected: layout.features, got: x.len() });
    }
    let l = layout
        .layers
        .get(layer)
        .ok_or_else(|| Error::Config(format!("layer {layer} out of range ({} layers)", layout.layers.len())))?;
    let mut diag = vec![Complex64::new(1.0, 0.0); modes];
    for p in &l.phases {
        if p.mode >= modes {
            return Err(Error::DimensionMismatch { expected: modes, got: p.mode + 1 });
        }
        let phase: f64 = p.coeffs.iter().zip(x).map(|(c, v)| c * v).sum();
        diag[p.mode] = Complex64::from_polar(1.0, phase);
    }
    Ok(diag)
}

pub fn encoding_unitary(x: &[f64], layout: &EncodingLayout, layer: usize, modes: usize) -> Result<ComplexMatrix> {
    Ok(ComplexMatrix::from_diagonal(&encoding_phases(x, layout, layer, modes)?))
}

/// Per-feature affine map `x ↦ (x − offset) · scale` applied before encoding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl FeatureScaling {
    /// Maps the observed range of each feature onto `[0, 2π)`.
    pub fn fit_to_period(xs: &[Vec<f64>]) -> Result<Self> {
        let d = xs.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        let mut offset = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for x in xs {
            if x.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: x.len() });
            }
            for i in 0..d {
                offset[i] = offset[i].min(x[i]);
                hi[i] = hi[i].max(x[i]);
            }
        }
        // The top of the range lands just inside 2π.
        let scale = offset
            .iter()
            .zip(&hi)
            .map(|(lo, hi)| {
                let span = hi - lo;
                if span > 0.0 {
                    TAU / (span * (1.0 + 1e-9))
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { offset, scale })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.offset.iter().zip(&self.scale)).map(|(v, (o, s))| (v - o) * s).collect()
    }
}

/// Full description of a data-reuploading linear optical circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub modes: usize,
    pub input_state: FockState,
    pub layout: EncodingLayout,
    /// One mesh per trainable block; `layout.layer_count() + 1` entries,
    /// first entry applied first.
    pub mesh_params: Vec<MeshParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<FeatureScaling>,
}

impl CircuitSpec {
    /// A spec with all mesh angles zero.
    pub fn new(modes: usize, input_state: FockState, layout: EncodingLayout) -> Result<Self> {
        let mesh_params = vec![MeshParams::zeros(modes); layout.layer_count() + 1];
        let spec = Self { modes, input_state, layout, mesh_params, scaling: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn photons(&self) -> usize {
        self.input_state.photons()
    }

    pub fn features(&self) -> usize {
        self.layout.features
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::ZeroModes);
        }
        if self.modes > 16 {
            return Err(Error::Config(format!("{} modes is beyond the supported 16", self.modes)));
        }
        if self.input_state.modes() != self.modes {
            return Err(Error::DimensionMismatch { expected: self.modes, got: self.input_state.modes() });
        }
        if let Some(&big) = self.input_state.occupations().iter().find(|&&o| o > MAX_PHOTONS) {
            return Err(Error::TooManyPhotons { photons: big, max: MAX_PHOTONS });
        }
        let n = self.input_state.photons();
        if n > MAX_PHOTONS {
            return Err(Error::TooManyPhotons { photons: n, max: MAX_PHOTONS });
        }
        self.layout.validate(self.modes)?;
        let blocks = self.layout.layer_count() + 1;
        if self.mesh_params.len() != blocks {
            return Err(Error::Config(format!(
                "{} encoding layers need {blocks} meshes, got {}",
                self.layout.layer_count(),
                self.mesh_params.len()
            )));
        }
        let per_mesh = mesh_param_count(self.modes);
        for mesh in &self.mesh_params {
            if mesh.len() != per_mesh {
                return Err(Error::DimensionMismatch { expected: per_mesh, got: mesh.len() });
            }
            if mesh.0.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("non-finite mesh angle".into()));
            }
        }
        if let Some(s) = &self.scaling {
            if s.offset.len() != self.features() || s.scale.len() != self.features() {
                return Err(Error::DimensionMismatch { expected: self.features(), got: s.offset.len().min(s.scale.len()) });
            }
            if s.offset.iter().chain(&s.scale).any(|v| !v.is_finite()) {
                return Err(Error::Config("non-finite feature scaling".into()));
            }
        }
        Ok(())
    }

    pub fn mesh_param_total(&self) -> usize {
        self.mesh_params.iter().map(MeshParams::len).sum()
    }

    pub fn flat_mesh_params(&self) -> Vec<f64> {
        self.mesh_params.iter().flat_map(|m| m.0.iter().copied()).collect()
    }

    /// Overwrites all mesh angles from a flat vector (mesh-major order).
    pub fn set_flat_mesh_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.mesh_param_total() {
            return Err(Error::DimensionMismatch { expected: self.mesh_param_total(), got: flat.len() });
        }
        let mut it = flat.iter().copied();
        for mesh in &mut self.mesh_params {
            for v in &mut mesh.0 {
                *v = it.next().expect("length checked");
            }
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: Self = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// `U(x, Θ) = W^{(L+1)} S_L(x) ··· S_1(x) W^{(1)}`.
pub fn mode_unitary(spec: &CircuitSpec, x: &[f64]) -> Result<ComplexMatrix> {
    if x.len() != spec.features() {
        return Err(Error::DimensionMismatch { expected: spec.features(), got: x.len() });
    }
    let scaled;
    let x = match &spec.scaling {
        Some(s) => {
            scaled = s.apply(x);
            &scaled[..]
        }
        None => x,
    };
    let m = spec.modes;
    let mut u = reck_unitary(&spec.mesh_params[0], m)?;
    for layer in 0..spec.layout.layer_count() {
        let diag = encoding_phases(x, &spec.layout, layer, m)?;
        for (i, d) in diag.iter().enumerate() {
            for j in 0..m {
                u[(i, j)] *= d;
            }
        }
        let w = reck_unitary(
            spec.mesh_params.get(layer + 1).ok_or(Error::Config("missing mesh".into()))?,
            m,
        )?;
        u = &w * &u;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_angles_give_identity() {
        for m in 1..6 {
            let u = reck_unitary(&MeshParams::zeros(m), m).unwrap();
            assert!(u.approx_eq(&ComplexMatrix::identity(m), 0.0));
        }
    }

    #[test]
    fn two_mode_block_closed_form() {
        let (theta, phi) = (0.7_f64, -1.3_f64);
        let u = reck_unitary(&MeshParams(vec![theta, phi]), 2).unwrap();
        let e = Complex64::from_polar(1.0, phi);
        let expected = ComplexMatrix::from_rows(&[
            vec![e * theta.cos(), c(-theta.sin(), 0.0)],
            vec![e * theta.sin(), c(theta.cos(), 0.0)],
        ]);
        assert!(u.approx_eq(&expected, 1e-15));
        assert!(u.unitarity_deviation() < 1e-14);
    }

    #[test]
    fn wrong_parameter_count() {
        assert!(matches!(
            reck_unitary(&MeshParams(vec![0.0; 5]), 3),
            Err(Error::DimensionMismatch { expected: 6, got: 5 })
        ));
    }

    #[test]
    fn reck_pair_layout() {
        assert_eq!(reck_pairs(4), vec![0, 1, 2, 0, 1, 0]);
        assert_eq!(reck_pairs(2), vec![0]);
        assert!(reck_pairs(1).is_empty());
    }

    #[test]
    fn encoding_examples() {
        let single = EncodingLayout::single();
        assert!(encoding_unitary(&[0.0], &single, 0, 3).unwrap().approx_eq(&ComplexMatrix::identity(3), 0.0));
        let u = encoding_unitary(&[PI], &single, 0, 3).unwrap();
        let expected = ComplexMatrix::from_diagonal(&[c(-1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(u.approx_eq(&expected, 1e-15));

        let x = 0.37;
        let u = encoding_unitary(&[x], &EncodingLayout::series_1d(3), 0, 3).unwrap();
        let expected = ComplexMatrix::from_diagonal(&[
            Complex64::from_polar(1.0, x),
            Complex64::from_polar(1.0, 2.0 * x),
            c(1.0, 0.0),
        ]);
        assert!(u.approx_eq(&expected, 1e-15));
    }

    #[test]
    fn encoding_dimension_mismatch() {
        assert!(matches!(
            encoding_unitary(&[0.0, 1.0], &EncodingLayout::single(), 0, 3),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn layout_shapes() {
        assert_eq!(EncodingLayout::parallel_1d(4).layer_count(), 3);
        let s = EncodingLayout::series_multi_d(3);
        assert_eq!(s.layers[0].phases.len(), 7);
        assert_eq!(s.layers[0].phases[6].coeffs, vec![1.0, 1.0, 1.0]);
        assert_eq!(EncodingLayout::parallel_multi_d(2).layer_count(), 2);
        assert_eq!(EncodingLayout::series_1d(3).max_multiplier(), 2.0);
        assert_eq!(EncodingLayout::parallel_1d(3).max_multiplier(), 2.0);
        assert!(EncodingLayout::series_multi_d(2).validate(2).is_err());
        assert!(EncodingLayout::series_multi_d(2).validate(3).is_ok());
    }

    #[test]
    fn single_layout_zero_mesh_is_encoding() {
        let spec = CircuitSpec::new(3, FockState::new(vec![1, 1, 1]), EncodingLayout::single()).unwrap();
        let x = [1.1];
        let u = mode_unitary(&spec, &x).unwrap();
        assert!(u.approx_eq(&encoding_unitary(&x, &spec.layout, 0, 3).unwrap(), 1e-15));
    }

    #[test]
    fn zero_data_gives_mesh_product() {
        let mut spec = CircuitSpec::new(3, FockState::new(vec![1, 0, 0]), EncodingLayout::parallel_1d(3)).unwrap();
        let flat: Vec<f64> = (0..spec.mesh_param_total()).map(|i| (i as f64 * 0.37).sin() * 2.0).collect();
        spec.set_flat_mesh_params(&flat).unwrap();
        let u = mode_unitary(&spec, &[0.0]).unwrap();
        let mut expected = ComplexMatrix::identity(3);
        for mesh in &spec.mesh_params {
            expected = &reck_unitary(mesh, 3).unwrap() * &expected;
        }
        assert!(u.approx_eq(&expected, 1e-14));
        assert!(u.unitarity_deviation() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        let mut spec = CircuitSpec::new(3, FockState::new(vec![1, 1, 0]), EncodingLayout::single()).unwrap();
        spec.mesh_params.pop();
        assert!(spec.validate().is_err());
        assert!(CircuitSpec::new(2, FockState::new(vec![1, 1, 0]), EncodingLayout::single()).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut spec = CircuitSpec::new(3, FockState::new(vec![2, 0, 1]), EncodingLayout::series_multi_d(2)).unwrap();
        spec.set_flat_mesh_params(&(0..12).map(|i| i as f64 * 0.1 - 0.5).collect::<Vec<_>>()).unwrap();
        let text = spec.to_toml_string().unwrap();
        assert_eq!(CircuitSpec::from_toml_str(&text).unwrap(), spec);
    }

    #[test]
    fn scaling_maps_into_period() {
        let xs = vec![vec![-1.0, 3.0], vec![2.0, 5.0], vec![0.5, 4.0]];
        let s = FeatureScaling::fit_to_period(&xs).unwrap();
        for x in &xs {
            for v in s.apply(x) {
                assert!((0.0..TAU).contains(&v));
            }
        }
    }
}
