//! Stochastic dual coordinate ascent for the bias-free SVM dual
//!
//! ```text
//! max_a  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij   s.t. 0 <= a_i <= C
//! ```
//!
//! Decision values `yhat = K (a ∘ y)` are maintained incrementally, so each
//! coordinate step costs one row of `K`.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::GramBlock;

/// Which decision values are refreshed after a coordinate step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum YhatUpdate {
    /// Every sample; keeps `yhat == K (a ∘ y)` exact.
    #[default]
    Full,
    /// Only samples `j >= i` in index order. Leaves earlier entries stale
    /// within an epoch; kept for reproducing that variant.
    Suffix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdcaConfig {
    pub c: f64,
    /// Epoch budget per call.
    pub epochs: usize,
    pub seed: u64,
    /// Stop early once the largest KKT violation drops to this value.
    pub stall_tol: Option<f64>,
    pub update: YhatUpdate,
}

impl Default for SdcaConfig {
    fn default() -> Self {
        SdcaConfig {
            c: 100.0,
            epochs: 10,
            seed: 0,
            stall_tol: Some(1e-3),
            update: YhatUpdate::Full,
        }
    }
}

impl SdcaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C must be positive, got {}", self.c)));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epoch budget must be >= 1".into()));
        }
        if let Some(tol) = self.stall_tol {
            if !(tol >= 0.0) {
                return Err(Error::InvalidParameter(format!("negative stall tolerance {tol}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdcaDiagnostics {
    pub epochs_run: usize,
    /// Coordinates met with `K_ii == 0` (their row of a PSD `K` is zero).
    pub zero_diagonal: usize,
    pub kkt_violation: f64,
    /// The stall criterion fired before the epoch budget ran out.
    pub converged: bool,
    /// Dual objective at the start and after every epoch.
    pub objective_trace: Vec<f64>,
}

/// Dual variables with their decision values.
#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    alpha: Vec<f64>,
    yhat: Vec<f64>,
    /// Epochs accumulated over all calls that produced this state.
    pub epochs: usize,
    pub diagnostics: SdcaDiagnostics,
}

impl DualState {
    pub fn zeros(n: usize) -> Self {
        DualState {
            alpha: vec![0.0; n],
            yhat: vec![0.0; n],
            epochs: 0,
            diagnostics: SdcaDiagnostics::default(),
        }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn yhat(&self) -> &[f64] {
        &self.yhat
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// Indices with `alpha_i > 0`.
    pub fn support(&self) -> Vec<usize> {
        self.alpha
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn n_support(&self) -> usize {
        self.alpha.iter().filter(|&&a| a > 0.0).count()
    }

    /// `sum a - 1/2 sum a_i y_i yhat_i`, which is the dual objective while
    /// `yhat` is exact.
    pub fn objective(&self, y: &[f64]) -> f64 {
        objective_from_yhat(&self.alpha, y, &self.yhat)
    }
}

fn objective_from_yhat(alpha: &[f64], y: &[f64], yhat: &[f64]) -> f64 {
    let mut lin = 0.0;
    let mut quad = 0.0;
    for ((a, yi), f) in alpha.iter().zip(y).zip(yhat) {
        lin += a;
        quad += a * yi * f;
    }
    lin - 0.5 * quad
}

/// Largest violation of the box-constrained KKT conditions, with
/// `g_i = 1 - y_i yhat_i`.
pub fn kkt_violation(alpha: &[f64], y: &[f64], yhat: &[f64], c: f64) -> f64 {
    alpha
        .iter()
        .zip(y)
        .zip(yhat)
        .map(|((&a, yi), f)| {
            let g = 1.0 - yi * f;
            if a <= 0.0 {
                g.max(0.0)
            } else if a >= c {
                (-g).max(0.0)
            } else {
                g.abs()
            }
        })
        .fold(0.0, f64::max)
}

fn check_shapes(y: &[f64], k: &GramBlock) -> Result<()> {
    if k.n() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            found: k.n(),
        });
    }
    Ok(())
}

/// Cold-start solve from `alpha = 0`.
pub fn sdca(y: &[f64], k: &GramBlock, config: &SdcaConfig) -> Result<DualState> {
    check_shapes(y, k)?;
    sdca_from(y, k, config, DualState::zeros(y.len()))
}

/// Warm-started solve. `init` supplies the starting `alpha` (clamped into
/// the box); its decision values are recomputed against `k`.
pub fn sdca_warm(y: &[f64], k: &GramBlock, config: &SdcaConfig, init: &DualState) -> Result<DualState> {
    check_shapes(y, k)?;
    if init.n() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            found: init.n(),
        });
    }
    config.validate()?;
    let alpha: Vec<f64> = init.alpha.iter().map(|a| a.clamp(0.0, config.c)).collect();
    let yhat = yhat_from_scratch(&alpha, y, k);
    let state = DualState {
        alpha,
        yhat,
        epochs: init.epochs,
        diagnostics: SdcaDiagnostics::default(),
    };
    sdca_from(y, k, config, state)
}

/// `K (a ∘ y)` recomputed in full.
pub fn yhat_from_scratch(alpha: &[f64], y: &[f64], k: &GramBlock) -> Vec<f64> {
    let weights: Vec<f64> = alpha.iter().zip(y).map(|(a, yi)| a * yi).collect();
    let support: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] != 0.0).collect();
    let kv = k.values();
    (0..alpha.len())
        .map(|q| support.iter().map(|&i| weights[i] * kv[[q, i]]).sum())
        .collect()
}

fn sdca_from(y: &[f64], k: &GramBlock, config: &SdcaConfig, mut state: DualState) -> Result<DualState> {
    config.validate()?;
    let n = y.len();
    let c = config.c;
    let kv = k.values();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut diag = SdcaDiagnostics {
        objective_trace: vec![state.objective(y)],
        ..SdcaDiagnostics::default()
    };
    let mut zero_diag = vec![false; n];

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let ai = state.alpha[i];
            let g = 1.0 - y[i] * state.yhat[i];
            if g == 0.0 || (g > 0.0 && ai >= c) || (g < 0.0 && ai <= 0.0) {
                continue;
            }
            let kii = kv[[i, i]];
            // With K_ii == 0 the objective is linear in a_i with slope g, so
            // the coordinate maximum sits on the box boundary.
            let a_new = if kii > 0.0 {
                (ai + g / kii).clamp(0.0, c)
            } else {
                zero_diag[i] = true;
                if g > 0.0 {
                    c
                } else {
                    0.0
                }
            };
            let delta = a_new - ai;
            if delta == 0.0 {
                continue;
            }
            state.alpha[i] = a_new;
            let scale = delta * y[i];
            let start = match config.update {
                YhatUpdate::Full => 0,
                YhatUpdate::Suffix => i,
            };
            let row = kv.slice(ndarray::s![i, start..]);
            for (f, kij) in state.yhat[start..].iter_mut().zip(row) {
                *f += scale * kij;
            }
        }
        diag.epochs_run += 1;
        diag.objective_trace.push(state.objective(y));
        diag.kkt_violation = kkt_violation(&state.alpha, y, &state.yhat, c);
        if let Some(tol) = config.stall_tol {
            if diag.kkt_violation <= tol {
                diag.converged = true;
                break;
            }
        }
    }
    if diag.epochs_run == 0 {
        diag.kkt_violation = kkt_violation(&state.alpha, y, &state.yhat, c);
    }
    diag.zero_diagonal = zero_diag.iter().filter(|&&z| z).count();
    state.epochs += diag.epochs_run;
    state.diagnostics = diag;
    Ok(state)
}

/// `sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
pub fn dual_objective(alpha: &[f64], y: &[f64], k: &GramBlock) -> f64 {
    let yhat = yhat_from_scratch(alpha, y, k);
    objective_from_yhat(alpha, y, &yhat)
}

/// Entry `q` is `sum_i a_i y_i K(x_i, x_q)`; `k_query` has one row per
/// query point and one column per training sample.
pub fn decision_values(alpha: &[f64], y: &[f64], k_query: &Array2<f64>) -> Result<Vec<f64>> {
    if k_query.ncols() != alpha.len() || y.len() != alpha.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.len(),
            found: k_query.ncols(),
        });
    }
    Ok(k_query
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(alpha).zip(y).map(|((k, a), yi)| a * yi * k).sum())
        .collect())
}
