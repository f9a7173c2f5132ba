//! Binary classification datasets: loading, standardization, seeded splits
//! and the synthetic piecewise-linear task.

mod io;
mod synth;

pub use io::{load_csv, load_csv_unlabeled, load_libsvm, load_libsvm_with_dim, parse_libsvm, write_libsvm};
pub use synth::{gen_piecewise, gen_piecewise_with_boundary, PiecewiseBoundary};

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense feature matrix with labels in {-1, +1}.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Array1<f64>,
}

impl Dataset {
    /// Builds a dataset, checking that `n >= 1`, `d >= 1`, the label count
    /// matches and every label is exactly -1 or +1.
    pub fn new(features: Array2<f64>, labels: Array1<f64>) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 {
            return Err(Error::InvalidDataset("no samples".into()));
        }
        if d == 0 {
            return Err(Error::InvalidDataset("zero-dimensional features".into()));
        }
        if labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} samples",
                labels.len(),
                n
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidDataset(format!("label {bad} is not -1 or +1")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite feature value".into()));
        }
        Ok(Dataset { features, labels })
    }

    /// Builds a dataset from arbitrary two-valued raw labels.
    pub fn from_raw_labels(features: Array2<f64>, raw_labels: &[f64]) -> Result<Self> {
        let labels = canonical_labels(raw_labels)?;
        Dataset::new(features, Array1::from(labels))
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &Array1<f64> {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    /// Rows `indices` (in that order) as a new dataset.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: self.labels.select(Axis(0), indices),
        }
    }

    /// Same labels, features replaced. Used to apply a scaler.
    fn with_features(&self, features: Array2<f64>) -> Dataset {
        Dataset {
            features,
            labels: self.labels.clone(),
        }
    }
}

/// Maps two distinct raw label values to {-1, +1}, the smaller becoming -1.
///
/// A single distinct value is kept on its side of zero (`<= 0` maps to -1),
/// so a one-class test file still loads with meaningful labels.
pub fn canonical_labels(raw: &[f64]) -> Result<Vec<f64>> {
    let mut distinct: Vec<f64> = Vec::new();
    for &v in raw {
        if !v.is_finite() {
            return Err(Error::InvalidDataset(format!("non-finite label {v}")));
        }
        if !distinct.contains(&v) {
            distinct.push(v);
            if distinct.len() > 2 {
                return Err(Error::NotBinary {
                    found: count_distinct(raw),
                });
            }
        }
    }
    Ok(match distinct.as_slice() {
        [] => Vec::new(),
        [_] => raw.iter().map(|&v| if v > 0.0 { 1.0 } else { -1.0 }).collect(),
        [a, b] => {
            let low = a.min(*b);
            raw.iter().map(|&v| if v == low { -1.0 } else { 1.0 }).collect()
        }
        _ => unreachable!(),
    })
}

fn count_distinct(raw: &[f64]) -> usize {
    let mut sorted: Vec<f64> = raw.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted.len()
}

/// Per-dimension affine scaling `(x - mean) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ScalerParams {
    pub fn identity(dim: usize) -> Self {
        ScalerParams {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn is_identity(&self) -> bool {
        self.mean.iter().all(|&m| m == 0.0) && self.scale.iter().all(|&s| s == 1.0)
    }

    pub fn apply_in_place(&self, x: &mut [f64]) -> Result<()> {
        self.check_dim(x.len())?;
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = (*v - m) / s;
        }
        Ok(())
    }

    pub fn invert_in_place(&self, x: &mut [f64]) -> Result<()> {
        self.check_dim(x.len())?;
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = *v * s + m;
        }
        Ok(())
    }

    pub fn transform(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_dim(features.ncols())?;
        let mut out = features.clone();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_dim(features.ncols())?;
        let mut out = features.clone();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }

    /// Applies the scaler to every sample of `data`.
    pub fn transform_dataset(&self, data: &Dataset) -> Result<Dataset> {
        Ok(data.with_features(self.transform(data.features())?))
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

/// Centers each dimension and scales it to unit population standard
/// deviation. Constant dimensions are only centered.
pub fn standardize(train: &Dataset) -> (Dataset, ScalerParams) {
    let n = train.n_samples() as f64;
    let x = train.features();
    let mut mean = Vec::with_capacity(train.dim());
    let mut scale = Vec::with_capacity(train.dim());
    for col in x.columns() {
        let m = col.sum() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        let sd = var.sqrt();
        mean.push(m);
        scale.push(if sd > 1e-12 * m.abs().max(1.0) { sd } else { 1.0 });
    }
    let params = ScalerParams { mean, scale };
    let scaled = params
        .transform_dataset(train)
        .expect("scaler built from the same dataset");
    (scaled, params)
}

/// Seeded permutation of `0..n` split into `(train, test)` index sets.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_fraction} of {n} samples leaves an empty part"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    let test = perm.split_off(n_train);
    Ok((perm, test))
}

/// Random train/test split with `round(train_fraction * n)` training samples.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(data.n_samples(), train_fraction, seed)?;
    Ok((data.select(&train), data.select(&test)))
}
