//! Toy two-class datasets, seeded splits and their CSV representation.
//!
//! Shapes follow the usual half-moons and concentric-circles generators.
//! Labels are `−1` for the outer ring / upper moon / lower-left blob and
//! `+1` otherwise; generated sets are exactly balanced up to one point.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MOONS_NOISE: f64 = 0.1;
pub const DEFAULT_CIRCLES_NOISE: f64 = 0.05;
pub const DEFAULT_CIRCLES_FACTOR: f64 = 0.5;
pub const DEFAULT_LINEAR_NOISE: f64 = 0.0;
/// Spread of each linear blob before label noise is added.
pub const LINEAR_BLOB_STD: f64 = 0.35;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Linear,
    Circles,
    Moons,
}

impl DatasetKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "circles" => Ok(Self::Circles),
            "moons" => Ok(Self::Moons),
            other => Err(Error::Config(format!("unknown dataset '{other}', expected linear, circles or moons"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Circles => "circles",
            Self::Moons => "moons",
        }
    }

    pub fn default_noise(self) -> f64 {
        match self {
            Self::Linear => DEFAULT_LINEAR_NOISE,
            Self::Circles => DEFAULT_CIRCLES_NOISE,
            Self::Moons => DEFAULT_MOONS_NOISE,
        }
    }

    pub fn generate(self, n: usize, seed: u64, noise: f64) -> Result<LabeledDataset> {
        match self {
            Self::Linear => make_linear(n, seed, noise),
            Self::Circles => make_circles(n, seed, noise, DEFAULT_CIRCLES_FACTOR),
            Self::Moons => make_moons(n, seed, noise),
        }
    }
}

/// Generator parameters written next to a dataset CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub seed: u64,
    pub samples: usize,
    pub noise: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub name: String,
    pub seed: u64,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<i8>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, seed: u64, x: Vec<Vec<f64>>, y: Vec<i8>) -> Result<Self> {
        let ds = Self { name: name.into(), seed, x, y };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn targets(&self) -> Vec<f64> {
        self.y.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.y.len() {
            return Err(Error::DimensionMismatch { expected: self.x.len(), got: self.y.len() });
        }
        let d = self.dims();
        if let Some(row) = self.x.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: row.len() });
        }
        if self.x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parse("features must be finite".into()));
        }
        if let Some(l) = self.y.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::Parse(format!("label {l} is not -1 or +1")));
        }
        Ok(())
    }

    fn subset(&self, idx: &[usize]) -> Self {
        Self { name: self.name.clone(), seed: self.seed, x: idx.iter().map(|&i| self.x[i].clone()).collect(), y: idx.iter().map(|&i| self.y[i]).collect() }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dims()).map(|i| format!("x{i}")).collect();
        header.push("label".into());
        wtr.write_record(&header).map_err(csv_err)?;
        for (x, y) in self.x.iter().zip(&self.y) {
            let mut rec: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
            rec.push(y.to_string());
            wtr.write_record(&rec).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Parses `x1,…,xD,label` CSV.
    pub fn read_csv<R: Read>(r: R, name: &str, seed: u64) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers().map_err(csv_err)?.clone();
        let cols = header.len();
        if cols < 2 {
            return Err(Error::Parse("expected at least one feature column and a label column".into()));
        }
        for (i, h) in header.iter().enumerate() {
            let expected = if i + 1 == cols { "label".to_string() } else { format!("x{}", i + 1) };
            if h.trim() != expected {
                return Err(Error::Parse(format!("header column {} is '{h}', expected '{expected}'", i + 1)));
            }
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let mut row = Vec::with_capacity(cols - 1);
            for field in rec.iter().take(cols - 1) {
                row.push(field.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad feature '{field}': {e}")))?);
            }
            let label = rec.get(cols - 1).unwrap_or("");
            y.push(label.trim().parse::<i8>().map_err(|e| Error::Parse(format!("bad label '{label}': {e}")))?);
            x.push(row);
        }
        Self::new(name, seed, x, y)
    }

    pub fn from_csv_str(s: &str) -> Result<Self> {
        Self::read_csv(s.as_bytes(), "csv", 0)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn check_noise(noise: f64) -> Result<()> {
    if noise >= 0.0 && noise.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("noise must be finite and non-negative, got {noise}")))
    }
}

fn add_noise_and_shuffle(name: &str, seed: u64, mut x: Vec<Vec<f64>>, mut y: Vec<i8>, noise: f64, rng: &mut ChaCha8Rng) -> Result<LabeledDataset> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.shuffle(rng);
    x = order.iter().map(|&i| x[i].clone()).collect();
    y = order.iter().map(|&i| y[i]).collect();
    if noise > 0.0 {
        let normal = Normal::new(0.0, noise).map_err(|e| Error::Config(e.to_string()))?;
        for v in x.iter_mut().flatten() {
            *v += normal.sample(rng);
        }
    }
    LabeledDataset::new(name, seed, x, y)
}

fn arc(count: usize, endpoint: bool) -> impl Iterator<Item = f64> {
    let denom = if endpoint { count.saturating_sub(1).max(1) } else { count.max(1) };
    let span = if endpoint { PI } else { TAU };
    (0..count).map(move |i| span * i as f64 / denom as f64)
}

/// Two Gaussian blobs on either side of the line `x1 + x2 = 0`; every blob
/// point lies on its own side, and `noise` jitters positions afterwards.
pub fn make_linear(n: usize, seed: u64, noise: f64) -> Result<LabeledDataset> {
    check_noise(noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal_dir = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label: i8 = if i < n / 2 { -1 } else { 1 };
        let s = f64::from(label);
        let mut p: Vec<f64> = normal_dir.iter().map(|c| s * c + LINEAR_BLOB_STD * rng.sample::<f64, _>(StandardNormal)).collect();
        let side = p[0] * normal_dir[0] + p[1] * normal_dir[1];
        if side * s < 0.0 {
            p[0] -= 2.0 * side * normal_dir[0];
            p[1] -= 2.0 * side * normal_dir[1];
        }
        x.push(p);
        y.push(label);
    }
    add_noise_and_shuffle("linear", seed, x, y, noise, &mut rng)
}

/// Outer ring of radius 1 labelled `−1`, inner ring of radius `factor` labelled `+1`.
pub fn make_circles(n: usize, seed: u64, noise: f64, factor: f64) -> Result<LabeledDataset> {
    check_noise(noise)?;
    if !(0.0..1.0).contains(&factor) {
        return Err(Error::Config(format!("factor must lie in [0, 1), got {factor}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_out = n / 2;
    let mut x: Vec<Vec<f64>> = arc(n_out, false).map(|t| vec![t.cos(), t.sin()]).collect();
    x.extend(arc(n - n_out, false).map(|t| vec![factor * t.cos(), factor * t.sin()]));
    let y = (0..n).map(|i| if i < n_out { -1 } else { 1 }).collect();
    add_noise_and_shuffle("circles", seed, x, y, noise, &mut rng)
}

/// Upper half-circle `(cos t, sin t)` labelled `−1`, interleaved with the
/// lower half-circle `(1 − cos t, 0.5 − sin t)` labelled `+1`.
pub fn make_moons(n: usize, seed: u64, noise: f64) -> Result<LabeledDataset> {
    check_noise(noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_out = n / 2;
    let mut x: Vec<Vec<f64>> = arc(n_out, true).map(|t| vec![t.cos(), t.sin()]).collect();
    x.extend(arc(n - n_out, true).map(|t| vec![1.0 - t.cos(), 0.5 - t.sin()]));
    let y = (0..n).map(|i| if i < n_out { -1 } else { 1 }).collect();
    add_noise_and_shuffle("moons", seed, x, y, noise, &mut rng)
}

/// Disjoint seeded split keeping the class ratio in both parts.
pub fn split(ds: &LabeledDataset, n_train: usize, n_test: usize, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if n_train + n_test > ds.len() {
        return Err(Error::Config(format!("cannot take {n_train}+{n_test} points from a dataset of {}", ds.len())));
    }
    if n_train == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..ds.len()).filter(|&i| ds.y[i] == 1).collect();
    let mut neg: Vec<usize> = (0..ds.len()).filter(|&i| ds.y[i] == -1).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let frac = pos.len() as f64 / ds.len() as f64;
    let take = |want: usize, avail_pos: usize, avail_neg: usize| {
        let p = ((want as f64 * frac).round() as usize).min(avail_pos).max(want.saturating_sub(avail_neg));
        (p, want - p)
    };
    let (tp, tn) = take(n_train, pos.len(), neg.len());
    let (sp, sn) = take(n_test, pos.len() - tp, neg.len() - tn);
    let mut train: Vec<usize> = pos[..tp].iter().chain(&neg[..tn]).copied().collect();
    let mut test: Vec<usize> = pos[tp..tp + sp].iter().chain(&neg[tn..tn + sn]).copied().collect();
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Per-feature affine map to zero mean and unit variance, fitted on training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(xs: &[Vec<f64>]) -> Result<Self> {
        let d = xs.first().ok_or(Error::EmptyDataset)?.len();
        let n = xs.len() as f64;
        let mean: Vec<f64> = (0..d).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n).collect();
        let std = (0..d)
            .map(|j| {
                let v = xs.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if v > 0.0 {
                    v.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    pub fn apply_all(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        xs.iter().map(|x| self.apply(x)).collect()
    }
}
