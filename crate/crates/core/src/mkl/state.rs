use crate::error::{Error, Result};
use crate::kernels::{combine_grams, gram, CandidateSet, ConformalMap, GramBlock};
use crate::sdca::DualState;

/// Where a candidate stands relative to the active set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateStatus {
    Open,
    Active,
    /// Pruned while reprocessing is off; never probed again.
    Forgotten,
}

/// A selected kernel with its cached Gram matrix.
#[derive(Clone, Debug)]
pub struct ActiveKernel {
    /// Position in the candidate stream.
    pub id: usize,
    pub map: ConformalMap,
    pub gram: GramBlock,
    pub weight: f64,
}

/// Working set of the sequential MKL solver: selected kernels `S` with
/// simplex weights, the open candidates, and the current dual solution.
#[derive(Clone, Debug)]
pub struct ActiveKernelState {
    pub(crate) kernels: Vec<ActiveKernel>,
    pub(crate) dual: DualState,
    pub(crate) labels: Vec<f64>,
    pub(crate) status: Vec<CandidateStatus>,
    /// Next candidate id the probe looks at.
    pub(crate) cursor: usize,
    budget: usize,
    materialized: usize,
    peak_materialized: usize,
    total_materialized: usize,
}

impl ActiveKernelState {
    /// Starts from candidate `first` with weight 1 and `alpha = 0`.
    pub fn new(candidates: &CandidateSet<'_>, first: usize, budget: usize) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidParameter("empty candidate stream".into()));
        }
        if first >= candidates.len() {
            return Err(Error::InvalidParameter(format!("candidate {first} out of range")));
        }
        if budget == 0 {
            return Err(Error::InvalidParameter("cache budget must be >= 1".into()));
        }
        let mut state = ActiveKernelState {
            kernels: Vec::new(),
            dual: DualState::zeros(candidates.data().n_samples()),
            labels: candidates.data().labels().to_vec(),
            status: vec![CandidateStatus::Open; candidates.len()],
            cursor: (first + 1) % candidates.len(),
            budget,
            materialized: 0,
            peak_materialized: 0,
            total_materialized: 0,
        };
        state.insert(candidates, first, 1.0)?;
        Ok(state)
    }

    pub fn kernels(&self) -> &[ActiveKernel] {
        &self.kernels
    }

    pub fn weights(&self) -> Vec<f64> {
        self.kernels.iter().map(|k| k.weight).collect()
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn dual(&self) -> &DualState {
        &self.dual
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn status(&self, id: usize) -> CandidateStatus {
        self.status[id]
    }

    pub fn n_open(&self) -> usize {
        self.status.iter().filter(|&&s| s == CandidateStatus::Open).count()
    }

    /// Gram blocks currently held.
    pub fn materialized(&self) -> usize {
        self.materialized
    }

    /// Largest number of Gram blocks ever held at once.
    pub fn peak_materialized(&self) -> usize {
        self.peak_materialized
    }

    /// Gram blocks built over the state's lifetime.
    pub fn total_materialized(&self) -> usize {
        self.total_materialized
    }

    /// Materializes candidate `id` and appends it with `weight`. Fails when
    /// the cache is full or the candidate is not open.
    pub(crate) fn insert(&mut self, candidates: &CandidateSet<'_>, id: usize, weight: f64) -> Result<()> {
        if self.kernels.len() >= self.budget {
            return Err(Error::InvalidParameter(format!(
                "cache budget of {} Gram matrices exhausted",
                self.budget
            )));
        }
        if self.status[id] != CandidateStatus::Open {
            return Err(Error::InvalidParameter(format!("candidate {id} is not open")));
        }
        let map = candidates.map(id);
        let block = gram(&map, candidates.data())?;
        self.materialized += 1;
        self.total_materialized += 1;
        self.peak_materialized = self.peak_materialized.max(self.materialized);
        self.status[id] = CandidateStatus::Active;
        self.kernels.push(ActiveKernel {
            id,
            map,
            gram: block,
            weight,
        });
        Ok(())
    }

    /// Drops kernel at position `pos`, releasing its Gram block.
    pub(crate) fn remove(&mut self, pos: usize, reprocess: bool) -> ActiveKernel {
        let k = self.kernels.remove(pos);
        self.materialized -= 1;
        self.status[k.id] = if reprocess {
            CandidateStatus::Open
        } else {
            CandidateStatus::Forgotten
        };
        k
    }

    /// Replaces the weights. They must lie on the simplex.
    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.kernels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.kernels.len(),
                found: weights.len(),
            });
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("weights must lie on the simplex".into()));
        }
        for (k, &w) in self.kernels.iter_mut().zip(weights) {
            k.weight = w;
        }
        Ok(())
    }

    pub(crate) fn set_dual(&mut self, dual: DualState) {
        self.dual = dual;
    }

    /// `sum_m beta_m K_m` over the cached blocks.
    pub fn combined_gram(&self) -> GramBlock {
        self.combined_with(&self.weights())
    }

    pub(crate) fn combined_with(&self, weights: &[f64]) -> GramBlock {
        let blocks: Vec<(&GramBlock, f64)> = self.kernels.iter().zip(weights).map(|(k, &w)| (&k.gram, w)).collect();
        combine_grams(&blocks, self.dual.n()).expect("weights are non-negative")
    }

    pub(crate) fn renormalize(&mut self) {
        let sum: f64 = self.kernels.iter().map(|k| k.weight).sum();
        let m = self.kernels.len() as f64;
        for k in &mut self.kernels {
            k.weight = if sum > 0.0 { k.weight / sum } else { 1.0 / m };
        }
    }
}
