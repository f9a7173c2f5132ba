use serde::{Deserialize, Serialize};

use super::{ConformalMap, MapFamily, MapScope};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Non-empty, strictly increasing list of positive bandwidths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaGrid(Vec<f64>);

impl GammaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty bandwidth grid".into()));
        }
        if values.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidParameter("bandwidths must be positive and finite".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "bandwidth grid must be strictly increasing".into(),
            ));
        }
        Ok(GammaGrid(values))
    }

    /// `count` values spaced evenly in log scale over `[lo, hi]`. A single
    /// value requires `lo == hi`.
    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("empty bandwidth grid".into()));
        }
        if !(lo > 0.0 && hi > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth range [{lo}, {hi}] must be positive"
            )));
        }
        if count == 1 {
            if lo != hi {
                return Err(Error::InvalidParameter(format!(
                    "a one-point grid needs equal endpoints, got [{lo}, {hi}]"
                )));
            }
            return GammaGrid::new(vec![lo]);
        }
        let (a, b) = (lo.log10(), hi.log10());
        let step = (b - a) / (count - 1) as f64;
        let values = (0..count)
            .map(|k| match k {
                0 => lo,
                k if k == count - 1 => hi,
                k => 10f64.powf(a + step * k as f64),
            })
            .collect();
        GammaGrid::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for GammaGrid {
    /// Five log-spaced values on `[0.01, 10]`.
    fn default() -> Self {
        GammaGrid::log_spaced(0.01, 10.0, 5).expect("valid default grid")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnchorSource {
    /// Row index into the training set.
    Sample(usize),
    Point(Vec<f64>),
}

/// One anchor with its family, scope and bandwidths.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSpec {
    pub anchor: AnchorSource,
    pub family: MapFamily,
    pub scope: MapScope,
    pub gammas: GammaGrid,
}

/// Ordered, lazily materialized set of candidate kernels.
///
/// Candidate `id`s run anchor-major, then bandwidth ascending. Maps are
/// built on request; nothing is cached.
#[derive(Clone, Debug)]
pub struct CandidateSet<'a> {
    data: &'a Dataset,
    specs: Vec<CandidateSpec>,
    /// `offsets[s]` is the id of the first candidate of `specs[s]`.
    offsets: Vec<usize>,
    len: usize,
}

impl<'a> CandidateSet<'a> {
    pub fn new(data: &'a Dataset, specs: Vec<CandidateSpec>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(specs.len());
        let mut len = 0;
        for spec in &specs {
            match &spec.anchor {
                AnchorSource::Sample(i) if *i >= data.n_samples() => {
                    return Err(Error::InvalidParameter(format!(
                        "anchor sample {i} out of range for {} samples",
                        data.n_samples()
                    )))
                }
                AnchorSource::Point(p) if p.len() != data.dim() => {
                    return Err(Error::DimensionMismatch {
                        expected: data.dim(),
                        found: p.len(),
                    })
                }
                _ => {}
            }
            offsets.push(len);
            len += spec.gammas.len();
        }
        Ok(CandidateSet {
            data,
            specs,
            offsets,
            len,
        })
    }

    /// One candidate per (training sample, bandwidth).
    pub fn for_samples(data: &'a Dataset, family: MapFamily, scope: MapScope, gammas: &GammaGrid) -> Self {
        let specs = (0..data.n_samples())
            .map(|i| CandidateSpec {
                anchor: AnchorSource::Sample(i),
                family,
                scope,
                gammas: gammas.clone(),
            })
            .collect();
        CandidateSet::new(data, specs).expect("sample anchors are in range")
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Builds candidate `id`.
    ///
    /// # Panics
    /// If `id >= self.len()`.
    pub fn map(&self, id: usize) -> ConformalMap {
        assert!(id < self.len, "candidate {id} out of range");
        let s = self.offsets.partition_point(|&o| o <= id) - 1;
        let spec = &self.specs[s];
        let gamma = spec.gammas.values()[id - self.offsets[s]];
        let center = match &spec.anchor {
            AnchorSource::Sample(i) => self.data.sample(*i).to_vec(),
            AnchorSource::Point(p) => p.clone(),
        };
        ConformalMap::new(spec.family, spec.scope, gamma, center).expect("validated spec")
    }

    /// The candidates in stream order.
    pub fn iter(&self) -> impl Iterator<Item = ConformalMap> + '_ {
        (0..self.len).map(|id| self.map(id))
    }
}

/// All `n * |gammas|` sample-anchored maps, produced lazily in stream order.
pub fn candidate_stream<'a>(
    data: &'a Dataset,
    family: MapFamily,
    scope: MapScope,
    gammas: &'a GammaGrid,
) -> impl Iterator<Item = ConformalMap> + 'a {
    (0..data.n_samples()).flat_map(move |i| {
        gammas
            .values()
            .iter()
            .map(move |&g| ConformalMap::new(family, scope, g, data.sample(i).to_vec()).expect("valid grid"))
    })
}
