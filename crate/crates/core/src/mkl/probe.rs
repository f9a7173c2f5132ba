use rayon::prelude::*;

use super::state::{ActiveKernelState, CandidateStatus};
use super::MklConfig;
use crate::data::Dataset;
use crate::error::Result;
use crate::kernels::{CandidateSet, ConformalMap, GramBlock};

/// `1/2 (a ∘ y)^T K (a ∘ y)`, summed over support vectors only.
pub fn alignment_score(alpha: &[f64], y: &[f64], gram: &GramBlock) -> f64 {
    let sv: Vec<(usize, f64)> = alpha
        .iter()
        .zip(y)
        .enumerate()
        .filter(|(_, (&a, _))| a > 0.0)
        .map(|(i, (a, yi))| (i, a * yi))
        .collect();
    let k = gram.values();
    let mut total = 0.0;
    for &(i, wi) in &sv {
        let row = k.row(i);
        let inner: f64 = sv.iter().map(|&(j, wj)| wj * row[j]).sum();
        total += wi * inner;
    }
    0.5 * total
}

/// Score above which a candidate violates the optimality condition for the
/// current largest active score `g`.
pub fn violation_threshold(g: f64, tol: f64) -> f64 {
    if g > 0.0 {
        g * (1.0 + tol)
    } else {
        g + tol
    }
}

/// Support vectors packed for scoring candidates through their explicit
/// feature maps: `1/2 || sum_i a_i y_i phi(x_i) ||^2`.
pub(crate) struct SupportView {
    rows: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
}

impl SupportView {
    pub(crate) fn new(alpha: &[f64], data: &Dataset) -> Self {
        let dim = data.dim();
        let mut rows = Vec::new();
        let mut weights = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if a > 0.0 {
                rows.extend(data.sample(i).iter());
                weights.push(a * data.labels()[i]);
            }
        }
        SupportView { rows, weights, dim }
    }

    pub(crate) fn score(&self, map: &ConformalMap) -> f64 {
        if self.weights.is_empty() {
            return 0.0;
        }
        let mut acc = vec![0.0; self.dim];
        let mut phi = vec![0.0; self.dim];
        for (x, w) in self.rows.chunks_exact(self.dim).zip(&self.weights) {
            map.feature_map_into(x, &mut phi);
            for (a, p) in acc.iter_mut().zip(&phi) {
                *a += w * p;
            }
        }
        0.5 * acc.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Alignment score of a kernel that has no Gram matrix, computed from its
/// feature map over the support vectors of `alpha`.
pub fn candidate_alignment(map: &ConformalMap, alpha: &[f64], data: &Dataset) -> f64 {
    SupportView::new(alpha, data).score(map)
}

/// Largest score among kernels with weight above the pruning threshold.
pub(crate) fn active_reference(state: &ActiveKernelState, config: &MklConfig) -> f64 {
    state
        .kernels
        .iter()
        .filter(|k| k.weight > config.prune_threshold)
        .map(|k| alignment_score(state.dual.alpha(), &state.labels, &k.gram))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProbeOutcome {
    /// Candidate ids inserted this round, in stream order.
    pub inserted: Vec<usize>,
    /// Candidate ids examined (open or not).
    pub scanned: usize,
    /// The scan covered the whole stream without finding a violator.
    pub full_pass: bool,
    /// A violator was found but the cache had no room for it.
    pub budget_blocked: bool,
    /// Reference score `g` the candidates were compared against.
    pub reference: f64,
    /// Best open score seen during the scan.
    pub max_score: f64,
}

const SCAN_CHUNK: usize = 128;

/// Scans open candidates from the stream cursor and inserts up to
/// `batch_size` violators at weight 0.
pub fn probe_and_insert(
    state: &mut ActiveKernelState,
    candidates: &CandidateSet<'_>,
    config: &MklConfig,
) -> Result<ProbeOutcome> {
    let data = candidates.data();
    let g = active_reference(state, config);
    let threshold = violation_threshold(g, config.violation_tol);
    let room = state.budget().saturating_sub(state.len());
    let want = config.batch_size.min(room).max(1);
    let support = SupportView::new(state.dual.alpha(), data);

    let total = candidates.len();
    let mut out = ProbeOutcome {
        reference: g,
        max_score: f64::NEG_INFINITY,
        ..ProbeOutcome::default()
    };
    let mut found = Vec::new();
    let mut pos = state.cursor;
    'scan: while out.scanned < total {
        let take = SCAN_CHUNK.min(total - out.scanned);
        let ids: Vec<usize> = (0..take).map(|k| (pos + k) % total).collect();
        let scores: Vec<Option<f64>> = ids
            .par_iter()
            .map(|&id| (state.status[id] == CandidateStatus::Open).then(|| support.score(&candidates.map(id))))
            .collect();
        for (&id, score) in ids.iter().zip(scores) {
            out.scanned += 1;
            pos = (id + 1) % total;
            if let Some(s) = score {
                out.max_score = out.max_score.max(s);
                if s > threshold {
                    found.push(id);
                    if found.len() >= want {
                        break 'scan;
                    }
                }
            }
        }
    }
    state.cursor = pos;
    out.full_pass = found.is_empty() && out.scanned >= total;

    if room == 0 {
        out.budget_blocked = !found.is_empty();
        return Ok(out);
    }
    for id in found {
        state.insert(candidates, id, 0.0)?;
        out.inserted.push(id);
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PruneOutcome {
    /// Candidate ids removed for having (near) zero weight.
    pub dropped: Vec<usize>,
    /// Candidate ids evicted to respect the cache budget.
    pub evicted: Vec<usize>,
}

/// Removes kernels whose weight is at most the pruning threshold (the
/// largest-weight kernel always stays), then evicts the lightest kernels
/// while the set exceeds the cache budget. Remaining weights are
/// renormalized.
pub fn prune(state: &mut ActiveKernelState, config: &MklConfig) -> PruneOutcome {
    let mut out = PruneOutcome::default();
    let keep = state
        .kernels
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.weight.total_cmp(&b.1.weight).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i);
    let mut pos = state.kernels.len();
    while pos > 0 {
        pos -= 1;
        if Some(pos) != keep && state.kernels[pos].weight <= config.prune_threshold {
            out.dropped.push(state.remove(pos, config.reprocess).id);
        }
    }
    out.dropped.reverse();
    while state.kernels.len() > config.cache_budget.max(1) {
        let lightest = state
            .kernels
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.weight.total_cmp(&b.1.weight))
            .map(|(i, _)| i)
            .expect("non-empty");
        out.evicted.push(state.remove(lightest, config.reprocess).id);
    }
    state.renormalize();
    out
}
