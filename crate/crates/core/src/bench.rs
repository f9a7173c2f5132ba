//! Training pipelines and the repeated random-split benchmark.

use std::io::{Read, Write};
use std::time::Instant;

use ndarray::{s, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split, standardize, Dataset, ScalerParams};
use crate::error::{Error, Result};
use crate::kernels::{CandidateSet, GammaGrid, GramBlock, MapFamily, MapScope};
use crate::mkl::{sequential_mkl_observed, IterationRecord, MklConfig, MklResult};
use crate::model::{compress, label_of, MllkmModel};
use crate::sdca::{sdca, SdcaConfig};

/// Everything needed to train one MLLKM model.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub family: MapFamily,
    pub scope: MapScope,
    pub gammas: GammaGrid,
    pub mkl: MklConfig,
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            family: MapFamily::Gauss,
            scope: MapScope::Global,
            gammas: GammaGrid::default(),
            mkl: MklConfig::default(),
            standardize: true,
        }
    }
}

/// Model plus the raw solver output it was compressed from.
#[derive(Debug)]
pub struct Trained {
    pub model: MllkmModel,
    pub result: MklResult,
}

pub fn train_mllkm(train: &Dataset, config: &TrainConfig) -> Result<Trained> {
    train_mllkm_observed(train, config, |_| {})
}

/// Trains on raw-coordinate data, streaming each outer iteration to
/// `observer`.
pub fn train_mllkm_observed(
    train: &Dataset,
    config: &TrainConfig,
    observer: impl FnMut(&IterationRecord),
) -> Result<Trained> {
    let (data, scaler) = if config.standardize {
        standardize(train)
    } else {
        (train.clone(), ScalerParams::identity(train.dim()))
    };
    let candidates = CandidateSet::for_samples(&data, config.family, config.scope, &config.gammas);
    let result = sequential_mkl_observed(&candidates, &config.mkl, observer)?;
    let active: Vec<_> = result
        .state
        .kernels()
        .iter()
        .filter(|k| k.weight > config.mkl.prune_threshold)
        .map(|k| (k.map.clone(), k.weight))
        .collect();
    let mut model = compress(result.state.dual().alpha(), &active, &data, scaler)?;
    model.metadata.c = config.mkl.sdca.c;
    model.metadata.seed = config.mkl.sdca.seed;
    model.metadata.converged = result.converged;
    Ok(Trained { model, result })
}

/// Plain linear-kernel SVM trained by the same dual solver. With `bias`
/// set, a constant feature is appended and its weight acts as the offset.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub bias: f64,
    pub scaler: ScalerParams,
    pub support_vectors: usize,
}

impl LinearModel {
    pub fn train(train: &Dataset, sdca_config: &SdcaConfig, standardize_data: bool, bias: bool) -> Result<Self> {
        let (data, scaler) = if standardize_data {
            standardize(train)
        } else {
            (train.clone(), ScalerParams::identity(train.dim()))
        };
        let (n, d) = (data.n_samples(), data.dim());
        let extra = usize::from(bias);
        let mut z = Array2::ones((n, d + extra));
        z.slice_mut(s![.., ..d]).assign(data.features());
        let mut k = z.dot(&z.t());
        for i in 0..n {
            for j in 0..i {
                k[[i, j]] = k[[j, i]];
            }
        }
        let y = data.labels().to_vec();
        let dual = sdca(&y, &GramBlock::new(k)?, sdca_config)?;
        let mut w = vec![0.0; d + extra];
        for (i, (&a, &yi)) in dual.alpha().iter().zip(&y).enumerate() {
            if a > 0.0 {
                for (wj, zj) in w.iter_mut().zip(z.row(i)) {
                    *wj += a * yi * zj;
                }
            }
        }
        let bias = if bias { w.pop().unwrap_or(0.0) } else { 0.0 };
        Ok(LinearModel {
            w,
            bias,
            scaler,
            support_vectors: dual.n_support(),
        })
    }

    pub fn predict_score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.w.len() {
            return Err(Error::DimensionMismatch {
                expected: self.w.len(),
                found: x.len(),
            });
        }
        let mut z = x.to_vec();
        self.scaler.apply_in_place(&mut z)?;
        Ok(z.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>() + self.bias)
    }
}

/// Epoch cap of the linear baseline. It is a single solve, so it runs to
/// the stall tolerance instead of sharing the warm-started budget.
pub const BASELINE_EPOCHS: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    Mllkm(TrainConfig),
    Linear {
        sdca: SdcaConfig,
        standardize: bool,
        bias: bool,
    },
}

impl Method {
    /// Linear baseline matching an MLLKM configuration's C, seed and
    /// preprocessing.
    pub fn linear_baseline(config: &TrainConfig) -> Method {
        Method::Linear {
            sdca: SdcaConfig {
                epochs: BASELINE_EPOCHS.max(config.mkl.sdca.epochs),
                ..config.mkl.sdca.clone()
            },
            standardize: config.standardize,
            bias: false,
        }
    }
}

/// One row of the benchmark table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub split: usize,
    /// Test accuracy as a fraction.
    pub accuracy: f64,
    pub train_s: f64,
    pub infer_us_per_sample: f64,
    pub kernels: usize,
    pub svs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColumnStats {
    pub accuracy: f64,
    pub train_s: f64,
    pub infer_us_per_sample: f64,
    pub kernels: f64,
    pub svs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchResult {
    pub records: Vec<SplitRecord>,
    /// Training runs that stopped without a certificate.
    pub unconverged: usize,
}

impl BenchResult {
    pub fn mean(&self) -> ColumnStats {
        self.column_stats(mean)
    }

    /// Sample standard deviation; 0 for a single split.
    pub fn std(&self) -> ColumnStats {
        self.column_stats(std_dev)
    }

    fn column_stats(&self, f: fn(&[f64]) -> f64) -> ColumnStats {
        let col = |g: fn(&SplitRecord) -> f64| f(&self.records.iter().map(g).collect::<Vec<_>>());
        ColumnStats {
            accuracy: col(|r| r.accuracy),
            train_s: col(|r| r.train_s),
            infer_us_per_sample: col(|r| r.infer_us_per_sample),
            kernels: col(|r| r.kernels as f64),
            svs: col(|r| r.svs as f64),
        }
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r).map_err(csv_error)?;
        }
        w.flush().map_err(|e| Error::InvalidDataset(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers().map_err(csv_error)?.clone();
        if header.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(Error::InvalidDataset(format!("unexpected bench header {header:?}")));
        }
        let records = r
            .deserialize()
            .collect::<std::result::Result<Vec<SplitRecord>, _>>()
            .map_err(csv_error)?;
        Ok(BenchResult {
            records,
            unconverged: 0,
        })
    }
}

pub const CSV_HEADER: [&str; 6] = ["split", "accuracy", "train_s", "infer_us_per_sample", "kernels", "svs"];

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidDataset(format!("bench csv: {e}"))
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Seed of split `index` under base seed `seed`.
pub fn split_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub splits: usize,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            splits: 10,
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

/// Repeated random train/test splits, run concurrently; rows come back in
/// split order.
pub fn run_bench(data: &Dataset, method: &Method, config: &BenchConfig) -> Result<BenchResult> {
    if config.splits == 0 {
        return Err(Error::InvalidParameter("need at least one split".into()));
    }
    let rows = (0..config.splits)
        .into_par_iter()
        .map(|i| run_split(data, method, config, i))
        .collect::<Result<Vec<_>>>()?;
    let unconverged = rows.iter().filter(|(_, ok)| !ok).count();
    Ok(BenchResult {
        records: rows.into_iter().map(|(r, _)| r).collect(),
        unconverged,
    })
}

type Scorer = Box<dyn Fn(&[f64]) -> Result<f64> + Sync>;

fn run_split(data: &Dataset, method: &Method, config: &BenchConfig, index: usize) -> Result<(SplitRecord, bool)> {
    let seed = split_seed(config.seed, index);
    let (train, test) = split(data, config.train_fraction, seed)?;
    let start = Instant::now();
    let (scorer, kernels, svs, converged): (Scorer, usize, usize, bool) = match method {
        Method::Mllkm(cfg) => {
            let mut cfg = cfg.clone();
            cfg.mkl.sdca.seed = seed;
            let trained = train_mllkm(&train, &cfg)?;
            let kernels = trained.model.anchors().len();
            let svs = trained.model.metadata.support_vectors;
            let converged = trained.result.converged;
            let model = trained.model;
            (Box::new(move |x| model.predict_score(x)), kernels, svs, converged)
        }
        Method::Linear {
            sdca: sdca_cfg,
            standardize,
            bias,
        } => {
            let mut sdca_cfg = sdca_cfg.clone();
            sdca_cfg.seed = seed;
            let model = LinearModel::train(&train, &sdca_cfg, *standardize, *bias)?;
            let svs = model.support_vectors;
            (Box::new(move |x| model.predict_score(x)), 0, svs, true)
        }
    };
    let train_s = start.elapsed().as_secs_f64();

    let rows: Vec<Vec<f64>> = test.features().rows().into_iter().map(|r| r.to_vec()).collect();
    let mut labels = Vec::with_capacity(rows.len());
    let mut best = f64::INFINITY;
    for _ in 0..3 {
        labels.clear();
        let t = Instant::now();
        for x in &rows {
            labels.push(label_of(scorer(x)?));
        }
        best = best.min(t.elapsed().as_secs_f64());
    }
    let correct = labels.iter().zip(test.labels()).filter(|(a, b)| a == b).count();
    Ok((
        SplitRecord {
            split: index,
            accuracy: correct as f64 / rows.len() as f64,
            train_s,
            infer_us_per_sample: best * 1e6 / rows.len() as f64,
            kernels,
            svs,
        },
        converged,
    ))
}
