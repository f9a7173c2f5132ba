//! Reduced-gradient descent on the kernel weights.
//!
//! `J(beta) = max_a D(a, beta)` is convex on the simplex with
//! `dJ/dbeta_m = -a_m`, the alignment score of kernel `m` at the inner
//! optimum. Each step moves along the reduced gradient taken against the
//! largest weight, with an Armijo backtracking search starting at the step
//! that zeroes the first weight.

use super::probe::{alignment_score, violation_threshold};
use super::state::ActiveKernelState;
use super::MklConfig;
use crate::error::Result;
use crate::sdca::{sdca_warm, DualState};

/// How trial points along the descent direction are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LineSearch {
    /// Re-solve the inner SVM (warm-started) at every trial step.
    #[default]
    Resolve,
    /// Take the maximal step and solve once; no sufficient-decrease test.
    SingleSolve,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightSolve {
    pub iterations: usize,
    pub inner_solves: usize,
    /// `J(beta)` at the returned weights.
    pub objective: f64,
    /// Per-kernel alignment scores at the returned solution.
    pub scores: Vec<f64>,
    /// Active scores equalized within tolerance.
    pub converged: bool,
    /// The line search could not find a decrease.
    pub stalled: bool,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 20;

fn inner_solve(
    state: &ActiveKernelState,
    weights: &[f64],
    warm: &DualState,
    config: &MklConfig,
) -> Result<(DualState, f64)> {
    let k = state.combined_with(weights);
    let dual = sdca_warm(&state.labels, &k, &config.sdca, warm)?;
    let objective = dual.objective(&state.labels);
    Ok((dual, objective))
}

fn scores_at(state: &ActiveKernelState, alpha: &[f64]) -> Vec<f64> {
    state
        .kernels
        .iter()
        .map(|k| alignment_score(alpha, &state.labels, &k.gram))
        .collect()
}

/// Whether `scores` satisfy the weight optimality conditions: every kernel
/// with positive weight at the common level `nu`, every other at or below.
pub(crate) fn weights_optimal(weights: &[f64], scores: &[f64], config: &MklConfig) -> bool {
    let positive = || {
        weights
            .iter()
            .zip(scores)
            .filter(|(&w, _)| w > config.prune_threshold)
            .map(|(_, &s)| s)
    };
    let nu = positive().fold(f64::NEG_INFINITY, f64::max);
    let low = positive().fold(f64::INFINITY, f64::min);
    let limit = violation_threshold(nu, config.violation_tol);
    // `limit - nu` is the admissible spread.
    let equalized = nu - low <= limit - nu;
    let zero_ok = weights
        .iter()
        .zip(scores)
        .filter(|(&w, _)| w <= config.prune_threshold)
        .all(|(_, &s)| s <= limit);
    equalized && zero_ok
}

/// Reduced-gradient direction for descent on `J`, given the scores
/// `a_m = -dJ/dbeta_m`.
fn descent_direction(weights: &[f64], scores: &[f64]) -> Vec<f64> {
    let mu = weights
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("non-empty");
    let mut dir = vec![0.0; weights.len()];
    let mut sum = 0.0;
    for m in 0..weights.len() {
        if m == mu {
            continue;
        }
        let reduced = scores[mu] - scores[m];
        if weights[m] <= 0.0 && reduced > 0.0 {
            continue;
        }
        dir[m] = -reduced;
        sum += dir[m];
    }
    dir[mu] = -sum;
    dir
}

/// Point `weights + t * dir`, projected back onto the simplex. `blocking`
/// is set exactly to zero (the coordinate that limits the step).
fn step(weights: &[f64], dir: &[f64], t: f64, blocking: Option<usize>) -> Vec<f64> {
    let mut out: Vec<f64> = weights.iter().zip(dir).map(|(w, d)| (w + t * d).max(0.0)).collect();
    if let Some(b) = blocking {
        out[b] = 0.0;
    }
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|w| *w /= sum);
    out
}

/// Optimizes the weights of the active kernels, updating `state` with the
/// new weights and the matching dual solution.
///
/// The inner solver is inexact, so `J` is only seen through lower bounds.
/// Every comparison in the line search pits points solved with the same
/// epoch budget from the same warm start against each other.
pub fn solve_mkl_weights(state: &mut ActiveKernelState, config: &MklConfig) -> Result<WeightSolve> {
    let mut weights = state.weights();
    let mut out = WeightSolve::default();
    if weights.len() == 1 {
        weights[0] = 1.0;
    }
    let mut base = state.dual.clone();
    let (mut dual, mut objective);
    loop {
        (dual, objective) = inner_solve(state, &weights, &base, config)?;
        out.inner_solves += 1;
        let scores = scores_at(state, dual.alpha());
        if weights.len() == 1 || weights_optimal(&weights, &scores, config) {
            out.converged = true;
            break;
        }
        if out.iterations >= config.max_weight_iterations {
            break;
        }
        out.iterations += 1;
        let dir = descent_direction(&weights, &scores);
        let slope: f64 = -dir.iter().zip(&scores).map(|(d, a)| d * a).sum::<f64>();
        if !(slope < 0.0) {
            break;
        }
        let (t_max, blocking) = dir
            .iter()
            .zip(&weights)
            .enumerate()
            .filter(|(_, (&d, _))| d < 0.0)
            .map(|(m, (&d, &w))| (w / -d, m))
            .fold(
                (f64::INFINITY, None),
                |best, (t, m)| if t < best.0 { (t, Some(m)) } else { best },
            );
        if !t_max.is_finite() {
            break;
        }

        match config.line_search {
            LineSearch::SingleSolve => {
                weights = step(&weights, &dir, t_max, blocking);
                base = dual;
            }
            LineSearch::Resolve => {
                let mut t = t_max;
                let mut accepted = None;
                for attempt in 0..MAX_BACKTRACKS {
                    let trial = step(&weights, &dir, t, (attempt == 0).then_some(blocking).flatten());
                    let (d, j) = inner_solve(state, &trial, &base, config)?;
                    out.inner_solves += 1;
                    if j <= objective + ARMIJO_C1 * t * slope {
                        accepted = Some((trial, d));
                        break;
                    }
                    t *= 0.5;
                }
                match accepted {
                    Some((w, d)) => {
                        weights = w;
                        base = d;
                    }
                    None => {
                        out.stalled = true;
                        break;
                    }
                }
            }
        }
    }

    out.scores = scores_at(state, dual.alpha());
    out.objective = objective;
    state.set_weights(&weights)?;
    state.set_dual(dual);
    Ok(out)
}
