//! Compressed classifier: one linear predictor per selected anchor.
//!
//! With the explicit feature maps, the dual expansion
//! `f(x) = sum_i a_i y_i sum_c beta_c k_c(x_i, x)` collapses into
//! `f(x) = sum_c phi_c(x)^T w_c` where `w_c = beta_c sum_i a_i y_i phi_c(x_i)`.
//! Evaluating `f` touches each selected anchor once, independently of the
//! number of training samples or support vectors.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ScalerParams};
use crate::error::{Error, Result};
use crate::kernels::{ConformalMap, MapScope};

pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub map: ConformalMap,
    pub w: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub c: f64,
    pub seed: u64,
    pub converged: bool,
    pub selected_kernels: usize,
    pub support_vectors: usize,
    pub training_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MllkmModel {
    version: u32,
    dim: usize,
    scope: MapScope,
    anchors: Vec<Anchor>,
    scaler: ScalerParams,
    pub metadata: TrainingMetadata,
}

/// Builds `w_c = beta_c sum_i a_i y_i phi_c(x_i)` for every kernel with
/// positive weight. `data` is in the coordinates the maps were trained in;
/// `scaler` maps raw inputs to them.
pub fn compress(
    alpha: &[f64],
    active: &[(ConformalMap, f64)],
    data: &Dataset,
    scaler: ScalerParams,
) -> Result<MllkmModel> {
    let (n, d) = (data.n_samples(), data.dim());
    if alpha.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: alpha.len(),
        });
    }
    if scaler.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: scaler.dim(),
        });
    }
    let scope = active.first().map_or(MapScope::Global, |(m, _)| m.scope());
    let support: Vec<(Vec<f64>, f64)> = alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(i, &a)| (data.sample(i).to_vec(), a * data.labels()[i]))
        .collect();
    let mut anchors = Vec::new();
    let mut phi = vec![0.0; d];
    for (map, beta) in active {
        if map.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: map.dim(),
            });
        }
        if map.scope() != scope {
            return Err(Error::InvalidModel(
                "kernels mix global and componentwise scopes".into(),
            ));
        }
        if !(*beta > 0.0) {
            continue;
        }
        let mut w = vec![0.0; d];
        for (x, coef) in &support {
            map.feature_map_into(x, &mut phi);
            for (wj, p) in w.iter_mut().zip(&phi) {
                *wj += coef * p;
            }
        }
        w.iter_mut().for_each(|v| *v *= beta);
        anchors.push(Anchor { map: map.clone(), w });
    }
    let metadata = TrainingMetadata {
        selected_kernels: anchors.len(),
        support_vectors: support.len(),
        training_samples: n,
        ..TrainingMetadata::default()
    };
    Ok(MllkmModel {
        version: MODEL_VERSION,
        dim: d,
        scope,
        anchors,
        scaler,
        metadata,
    })
}

impl MllkmModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scope(&self) -> MapScope {
        self.scope
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn scaler(&self) -> &ScalerParams {
        &self.scaler
    }

    /// Stored floating-point parameters.
    pub fn parameter_count(&self) -> usize {
        self.anchors.len() * (2 * self.dim + 1) + 2 * self.dim
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Decision value for a raw (unscaled) input.
    pub fn predict_score(&self, x: &[f64]) -> Result<f64> {
        self.predict_score_traced(x).map(|(s, _)| s)
    }

    /// Decision value plus the number of kernel feature-map evaluations
    /// it took.
    pub fn predict_score_traced(&self, x: &[f64]) -> Result<(f64, usize)> {
        self.check_dim(x)?;
        let mut z = x.to_vec();
        self.scaler.apply_in_place(&mut z)?;
        Ok(self.score_prescaled(&z))
    }

    /// Decision value for an input already in training coordinates.
    pub fn predict_score_scaled(&self, z: &[f64]) -> Result<f64> {
        self.check_dim(z)?;
        Ok(self.score_prescaled(z).0)
    }

    fn score_prescaled(&self, z: &[f64]) -> (f64, usize) {
        let mut phi = vec![0.0; self.dim];
        let mut score = 0.0;
        let mut evaluations = 0;
        for anchor in &self.anchors {
            anchor.map.feature_map_into(z, &mut phi);
            evaluations += 1;
            score += phi.iter().zip(&anchor.w).map(|(p, w)| p * w).sum::<f64>();
        }
        (score, evaluations)
    }

    /// `sign(f(x))` with `sign(0) = +1`.
    pub fn predict_label(&self, x: &[f64]) -> Result<f64> {
        Ok(label_of(self.predict_score(x)?))
    }

    /// Fraction of `data` (raw coordinates) classified correctly.
    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        let mut correct = 0usize;
        for (row, &y) in data.features().rows().into_iter().zip(data.labels()) {
            if self.predict_label(&row.to_vec())? == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.n_samples() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::InvalidModel("missing or non-integer `version` field".into()))?;
        if found != u64::from(MODEL_VERSION) {
            return Err(Error::ModelVersion {
                expected: MODEL_VERSION,
                found: u32::try_from(found).unwrap_or(u32::MAX),
            });
        }
        let model: MllkmModel = serde_json::from_value(value)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = self.to_json()?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        MllkmModel::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidModel("dimension must be >= 1".into()));
        }
        if self.scaler.mean.len() != self.dim || self.scaler.scale.len() != self.dim {
            return Err(Error::InvalidModel("scaler dimension mismatch".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.scaler.mean) || !finite(&self.scaler.scale) {
            return Err(Error::InvalidModel("non-finite scaler value".into()));
        }
        if self.scaler.scale.contains(&0.0) {
            return Err(Error::InvalidModel("zero scaler entry".into()));
        }
        for (k, a) in self.anchors.iter().enumerate() {
            if a.w.len() != self.dim || a.map.dim() != self.dim {
                return Err(Error::InvalidModel(format!("anchor {k}: dimension mismatch")));
            }
            if a.map.scope() != self.scope {
                return Err(Error::InvalidModel(format!("anchor {k}: scope differs from model")));
            }
            if !finite(&a.w) {
                return Err(Error::InvalidModel(format!("anchor {k}: non-finite weight")));
            }
        }
        Ok(())
    }
}

pub fn label_of(score: f64) -> f64 {
    if score >= 0.0 {
        1.0
    } else {
        -1.0
    }
}
