//! Sequential ℓ1 multiple kernel learning over a stream of candidate
//! kernels.
//!
//! The solver keeps a small active set `S` of kernels with cached Gram
//! matrices and simplex weights. Each outer iteration
//!
//! 1. solves the SVM dual on the combined kernel `sum_m beta_m K_m`,
//! 2. scans the open candidates and inserts (at weight 0) those whose
//!    alignment score `1/2 (a∘y)^T K_l (a∘y)` exceeds the largest score
//!    among positive-weight active kernels,
//! 3. re-optimizes the weights by reduced-gradient descent,
//! 4. prunes kernels whose weight dropped to zero.
//!
//! It stops when a full pass over the open candidates finds no violator
//! and the active scores are equalized, which is the KKT condition of the
//! min-max problem.

mod probe;
mod state;
mod weights;

pub use probe::{
    alignment_score, candidate_alignment, probe_and_insert, prune, violation_threshold, ProbeOutcome, PruneOutcome,
};
pub use state::{ActiveKernel, ActiveKernelState, CandidateStatus};
pub use weights::{solve_mkl_weights, LineSearch, WeightSolve};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::CandidateSet;
use crate::sdca::{sdca_warm, SdcaConfig};
use probe::SupportView;

#[derive(Clone, Debug, PartialEq)]
pub struct MklConfig {
    /// Inner solver settings (C, epochs, seed, stall tolerance).
    pub sdca: SdcaConfig,
    /// Kernels inserted per probe round at most.
    pub batch_size: usize,
    /// Gram matrices held at once at most.
    pub cache_budget: usize,
    /// Weights at or below this are treated as zero.
    pub prune_threshold: f64,
    /// Relative tolerance on alignment-score comparisons.
    pub violation_tol: f64,
    pub max_outer_iterations: usize,
    /// Reduced-gradient steps per outer iteration.
    pub max_weight_iterations: usize,
    /// Return pruned kernels to the open set instead of forgetting them.
    pub reprocess: bool,
    pub line_search: LineSearch,
}

impl Default for MklConfig {
    fn default() -> Self {
        MklConfig {
            sdca: SdcaConfig::default(),
            batch_size: 8,
            cache_budget: 64,
            prune_threshold: 1e-8,
            violation_tol: 1e-3,
            max_outer_iterations: 200,
            max_weight_iterations: 10,
            reprocess: false,
            line_search: LineSearch::Resolve,
        }
    }
}

impl MklConfig {
    pub fn validate(&self) -> Result<()> {
        self.sdca.validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be >= 1".into()));
        }
        if self.cache_budget < self.batch_size + 1 {
            return Err(Error::InvalidParameter(format!(
                "cache budget {} must exceed the batch size {}",
                self.cache_budget, self.batch_size
            )));
        }
        if !(self.prune_threshold >= 0.0) || !(self.violation_tol >= 0.0) {
            return Err(Error::InvalidParameter("tolerances must be non-negative".into()));
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::InvalidParameter("need at least one outer iteration".into()));
        }
        Ok(())
    }
}

/// Alignment score of one active kernel at the final solution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelScore {
    pub id: usize,
    pub weight: f64,
    pub score: f64,
    /// `nu - score`; zero for kernels carrying weight at an optimum.
    pub slack: f64,
}

/// Optimality certificate of a training run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KktReport {
    /// Largest alignment score among kernels with positive weight.
    pub nu: f64,
    pub active: Vec<KernelScore>,
    /// Open candidates scored (all that remain reachable).
    pub probed: usize,
    pub max_open_score: f64,
    /// Open candidates whose score exceeds the violation threshold.
    pub violators: Vec<(usize, f64)>,
    /// Admissible excess over `nu`.
    pub tolerance: f64,
    pub prune_threshold: f64,
}

impl KktReport {
    /// Open kernels respect the bound and positive-weight kernels sit at `nu`.
    pub fn certifies(&self) -> bool {
        self.violators.is_empty()
            && self
                .active
                .iter()
                .filter(|k| k.weight > self.prune_threshold)
                .all(|k| k.slack.abs() <= self.tolerance)
    }
}

/// Computes the certificate for the state's current dual solution.
pub fn kkt_report(state: &ActiveKernelState, candidates: &CandidateSet<'_>, config: &MklConfig) -> KktReport {
    let alpha = state.dual().alpha();
    let scores: Vec<f64> = state
        .kernels()
        .iter()
        .map(|k| alignment_score(alpha, state.labels(), &k.gram))
        .collect();
    let nu = state
        .kernels()
        .iter()
        .zip(&scores)
        .filter(|(k, _)| k.weight > config.prune_threshold)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let threshold = violation_threshold(nu, config.violation_tol);
    let support = SupportView::new(alpha, candidates.data());
    let open: Vec<usize> = (0..candidates.len())
        .filter(|&id| state.status(id) == CandidateStatus::Open)
        .collect();
    let open_scores: Vec<f64> = open.par_iter().map(|&id| support.score(&candidates.map(id))).collect();
    KktReport {
        nu,
        active: state
            .kernels()
            .iter()
            .zip(&scores)
            .map(|(k, &s)| KernelScore {
                id: k.id,
                weight: k.weight,
                score: s,
                slack: nu - s,
            })
            .collect(),
        probed: open.len(),
        max_open_score: open_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        violators: open
            .iter()
            .zip(&open_scores)
            .filter(|(_, &s)| s > threshold)
            .map(|(&id, &s)| (id, s))
            .collect(),
        tolerance: threshold - nu,
        prune_threshold: config.prune_threshold,
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Active kernels after this iteration's pruning.
    pub active: usize,
    pub inserted: usize,
    pub pruned: usize,
    /// `J(beta)` after the weight update.
    pub objective: f64,
    /// Largest active score `g` used by the probe.
    pub reference: f64,
    /// Largest open-candidate score seen by the probe.
    pub max_open_score: f64,
    pub weight_sum: f64,
    pub min_weight: f64,
    pub materialized: usize,
    pub support_vectors: usize,
}

#[derive(Clone, Debug)]
pub struct MklResult {
    pub state: ActiveKernelState,
    pub report: KktReport,
    /// A clean probe pass ended training and the certificate holds.
    pub converged: bool,
    /// Training stopped because violators could not fit in the cache and
    /// no kernel could be pruned.
    pub budget_exhausted: bool,
    /// An outer iteration left the state exactly as it found it.
    pub stalled: bool,
    pub outer_iterations: usize,
    /// `J(beta)` at the returned solution.
    pub objective: f64,
    pub log: Vec<IterationRecord>,
}

impl MklResult {
    pub fn weights(&self) -> Vec<f64> {
        self.state.weights()
    }
}

/// Trains on the candidate stream; see [`sequential_mkl_observed`].
pub fn sequential_mkl(candidates: &CandidateSet<'_>, config: &MklConfig) -> Result<MklResult> {
    sequential_mkl_observed(candidates, config, |_| {})
}

/// Trains on the candidate stream, calling `observer` after every outer
/// iteration.
pub fn sequential_mkl_observed(
    candidates: &CandidateSet<'_>,
    config: &MklConfig,
    mut observer: impl FnMut(&IterationRecord),
) -> Result<MklResult> {
    config.validate()?;
    let mut state = ActiveKernelState::new(candidates, 0, config.cache_budget)?;
    let y = candidates.data().labels().to_vec();
    let mut log = Vec::new();
    let mut converged = false;
    let mut budget_exhausted = false;
    let mut stalled = false;
    let mut iteration = 0;

    while iteration < config.max_outer_iterations {
        iteration += 1;
        let before = (state.weights(), state.dual().alpha().to_vec());
        let k = state.combined_gram();
        let dual = sdca_warm(&y, &k, &config.sdca, state.dual())?;
        state.set_dual(dual);

        let probe = probe_and_insert(&mut state, candidates, config)?;
        if probe.full_pass {
            let report = kkt_report(&state, candidates, config);
            if report.certifies() {
                converged = true;
                let record = record(iteration, &state, &probe, 0, &y);
                observer(&record);
                log.push(record);
                break;
            }
        }

        solve_mkl_weights(&mut state, config)?;
        let pruned = prune(&mut state, config);
        let n_pruned = pruned.dropped.len() + pruned.evicted.len();
        let record = record(iteration, &state, &probe, n_pruned, &y);
        observer(&record);
        log.push(record);
        // A full cache with nothing left to prune cannot admit violators.
        if probe.budget_blocked && n_pruned == 0 {
            budget_exhausted = true;
            break;
        }
        if probe.inserted.is_empty() && n_pruned == 0 && before == (state.weights(), state.dual().alpha().to_vec()) {
            stalled = true;
            break;
        }
    }

    let report = kkt_report(&state, candidates, config);
    let objective = state.dual().objective(&y);
    Ok(MklResult {
        state,
        report,
        converged,
        budget_exhausted,
        stalled,
        outer_iterations: iteration,
        objective,
        log,
    })
}

fn record(
    iteration: usize,
    state: &ActiveKernelState,
    probe: &ProbeOutcome,
    pruned: usize,
    y: &[f64],
) -> IterationRecord {
    let weights = state.weights();
    IterationRecord {
        iteration,
        active: state.len(),
        inserted: probe.inserted.len(),
        pruned,
        objective: state.dual().objective(y),
        reference: probe.reference,
        max_open_score: probe.max_score,
        weight_sum: weights.iter().sum(),
        min_weight: weights.iter().copied().fold(f64::INFINITY, f64::min),
        materialized: state.materialized(),
        support_vectors: state.dual().n_support(),
    }
}
