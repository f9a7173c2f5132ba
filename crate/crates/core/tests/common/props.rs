//! Randomized property checks. Each returns a short summary or the first
//! failure, so the same code backs the regular tests and the acceptance
//! report.
#![allow(dead_code)]

use mllkm::data::{gen_piecewise, ScalerParams};
use mllkm::kernels::{gram, AnchorSource, CandidateSet, CandidateSpec, GammaGrid, GramBlock, MapFamily, MapScope};
use mllkm::mkl::{sequential_mkl, sequential_mkl_observed, LineSearch, MklConfig};
use mllkm::model::compress;
use mllkm::sdca::{kkt_violation, sdca, yhat_from_scratch, SdcaConfig, YhatUpdate};
use rand::seq::index::sample;
use rand::Rng;

use super::*;

pub type Outcome = Result<String, String>;

pub const FAMILIES: [MapFamily; 4] = [MapFamily::Exp, MapFamily::Gauss, MapFamily::Linear, MapFamily::Square];
pub const SCOPES: [MapScope; 2] = [MapScope::Global, MapScope::Componentwise];

/// Box feasibility, per-epoch dual ascent, `yhat` consistency and the KKT
/// certificate at stall, on random PSD problems.
pub fn sdca_properties(instances: usize, seed: u64) -> Outcome {
    let mut r = rng(seed);
    let mut stalled = 0;
    let mut worst_drop = 0.0f64;
    let mut worst_yhat = 0.0f64;
    for inst in 0..instances {
        let n = r.random_range(1..=30);
        let d = r.random_range(1..=5);
        let data = random_dataset(&mut r, n, d, -2.0, 2.0);
        let family = FAMILIES[inst % 4];
        let scope = SCOPES[(inst / 4) % 2];
        let center: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        let gamma = 10f64.powf(r.random_range(-2.0..1.0));
        let map = ConformalMap::new(family, scope, gamma, center).unwrap();
        let k = gram(&map, &data).map_err(|e| e.to_string())?;
        let c = 10f64.powf(r.random_range(-1.0..1.0));
        let tol = 1e-6;
        let config = SdcaConfig {
            c,
            epochs: r.random_range(1..=300),
            seed: r.random(),
            stall_tol: Some(tol),
            update: YhatUpdate::Full,
        };
        let y = data.labels().to_vec();
        let state = sdca(&y, &k, &config).map_err(|e| e.to_string())?;
        let alpha = state.alpha();
        if let Some(a) = alpha.iter().find(|&&a| !(0.0..=c).contains(&a)) {
            return Err(format!("instance {inst}: alpha {a} outside [0, {c}]"));
        }
        let trace = &state.diagnostics.objective_trace;
        for w in trace.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
            if w[1] < w[0] - 1e-10 {
                return Err(format!("instance {inst}: dual fell from {} to {}", w[0], w[1]));
            }
        }
        let fresh = yhat_from_scratch(alpha, &y, &k);
        let kk = oracle_gram(&map, &data);
        for i in 0..n {
            let direct: f64 = (0..n).map(|j| alpha[j] * y[j] * kk[[i, j]]).sum();
            let dev = (state.yhat()[i] - fresh[i]).abs().max((state.yhat()[i] - direct).abs());
            worst_yhat = worst_yhat.max(dev);
            if dev > 1e-8 {
                return Err(format!("instance {inst}: yhat[{i}] off by {dev}"));
            }
        }
        if state.diagnostics.converged {
            stalled += 1;
            for i in 0..n {
                let g = 1.0 - y[i] * fresh[i];
                let ok = if alpha[i] <= 0.0 {
                    g <= tol + 1e-9
                } else if alpha[i] >= c {
                    g >= -tol - 1e-9
                } else {
                    g.abs() <= tol + 1e-9
                };
                if !ok {
                    return Err(format!("instance {inst}: KKT fails at {i} (alpha {}, g {g})", alpha[i]));
                }
            }
            let v = kkt_violation(alpha, &y, state.yhat(), c);
            if v > tol {
                return Err(format!("instance {inst}: reported violation {v} above {tol}"));
            }
        }
    }
    Ok(format!(
        "{instances} instances, {stalled} stalled; max epoch drop {worst_drop:.1e}, max yhat drift {worst_yhat:.1e}"
    ))
}

/// Strict settings under which the sequential solver should reach the
/// exact min-max optimum.
pub fn precise_config(c: f64, budget: usize, batch: usize) -> MklConfig {
    MklConfig {
        sdca: SdcaConfig {
            c,
            epochs: 20_000,
            seed: 7,
            stall_tol: Some(1e-10),
            update: YhatUpdate::Full,
        },
        batch_size: batch,
        cache_budget: budget,
        prune_threshold: 1e-8,
        violation_tol: 1e-4,
        max_outer_iterations: 500,
        max_weight_iterations: 200,
        reprocess: true,
        line_search: LineSearch::Resolve,
    }
}

/// Piecewise toy set with `anchors` random sample anchors, two bandwidths
/// each.
pub fn toy_instance(
    seed: u64,
    n: usize,
    anchors: usize,
    family: MapFamily,
    scope: MapScope,
) -> (Dataset, Vec<CandidateSpec>) {
    let mut r = rng(seed);
    let data = gen_piecewise(n, r.random_range(1..=3), seed).unwrap();
    let gammas = GammaGrid::new(vec![r.random_range(0.5..2.0), r.random_range(5.0..20.0)]).unwrap();
    let specs = sample(&mut r, n, anchors)
        .into_iter()
        .map(|i| CandidateSpec {
            anchor: AnchorSource::Sample(i),
            family,
            scope,
            gammas: gammas.clone(),
        })
        .collect();
    (data, specs)
}

/// `sequential_mkl` against the brute-force min-max oracle.
pub fn mkl_oracle_equivalence(instances: usize, seed: u64) -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_gap = 0.0f64;
    for inst in 0..instances {
        let s = seed + inst as u64;
        let n = 10 + (inst % 11);
        let family = FAMILIES[inst % 4];
        let scope = SCOPES[(inst / 4) % 2];
        let (data, specs) = toy_instance(s, n, 3, family, scope);
        let candidates = CandidateSet::new(&data, specs).unwrap();
        let c = 10.0;
        let config = precise_config(c, 7, 1 + inst % 3);
        let result = sequential_mkl(&candidates, &config).map_err(|e| e.to_string())?;
        if !result.converged {
            return Err(format!("instance {inst}: solver did not converge"));
        }
        check_certificate(&result, &candidates, &config).map_err(|e| format!("instance {inst}: {e}"))?;
        let grams: Vec<_> = candidates.iter().map(|m| oracle_gram(&m, &data)).collect();
        let y = data.labels().to_vec();
        let oracle = oracle_minmax(&grams, &y, c);
        let gap = (oracle.upper - oracle.lower) / oracle.upper.abs();
        worst_gap = worst_gap.max(gap);
        if gap > 1e-4 {
            return Err(format!("instance {inst}: oracle not certified (gap {gap:.2e})"));
        }
        let rel = (result.objective - oracle.upper).abs() / oracle.upper.abs();
        worst = worst.max(rel);
        if rel > 1e-3 {
            return Err(format!(
                "instance {inst}: objective {} vs oracle {} (rel {rel:.2e})",
                result.objective, oracle.upper
            ));
        }
    }
    Ok(format!(
        "{instances} instances; max relative difference {worst:.1e}, max oracle gap {worst_gap:.1e}"
    ))
}

/// Runs training on assorted small problems and checks the certificate of
/// every run that reports convergence.
pub fn certificate_on_runs(seed: u64) -> Outcome {
    let mut converged = 0;
    let mut runs = 0;
    for (k, family) in FAMILIES.iter().enumerate() {
        for (l, scope) in SCOPES.iter().enumerate() {
            let s = seed + (k * 2 + l) as u64;
            let data = gen_piecewise(30, 3, s).unwrap();
            let candidates = CandidateSet::for_samples(&data, *family, *scope, &GammaGrid::default());
            for config in [MklConfig::default(), precise_config(10.0, 64, 8)] {
                let result = sequential_mkl(&candidates, &config).map_err(|e| e.to_string())?;
                runs += 1;
                if result.converged {
                    converged += 1;
                    check_certificate(&result, &candidates, &config).map_err(|e| format!("{family}/{scope}: {e}"))?;
                    if !result.report.certifies() {
                        return Err(format!("{family}/{scope}: report disagrees"));
                    }
                }
            }
        }
    }
    if converged == 0 {
        return Err("no run converged".into());
    }
    Ok(format!("{converged} of {runs} runs converged, all certified"))
}

/// Simplex and cache-budget invariants after every outer iteration on the
/// synthetic task.
pub fn instrumented_invariants(seed: u64) -> Outcome {
    let data = gen_piecewise(300, 4, seed).unwrap();
    let candidates = CandidateSet::for_samples(&data, MapFamily::Square, MapScope::Global, &GammaGrid::default());
    let mut iterations = 0;
    let mut checked = 0;
    for (budget, batch) in [(64, 8), (6, 5), (3, 2)] {
        let config = MklConfig {
            cache_budget: budget,
            batch_size: batch,
            max_outer_iterations: 60,
            ..MklConfig::default()
        };
        let mut failure = None;
        let result = sequential_mkl_observed(&candidates, &config, |rec| {
            checked += 1;
            if failure.is_some() {
                return;
            }
            if (rec.weight_sum - 1.0).abs() > 1e-9 {
                failure = Some(format!("iteration {}: weight sum {}", rec.iteration, rec.weight_sum));
            } else if rec.min_weight < 0.0 {
                failure = Some(format!(
                    "iteration {}: negative weight {}",
                    rec.iteration, rec.min_weight
                ));
            } else if rec.active > budget || rec.materialized > budget {
                failure = Some(format!(
                    "iteration {}: {} kernels over budget {budget}",
                    rec.iteration, rec.active
                ));
            }
        })
        .map_err(|e| e.to_string())?;
        if let Some(f) = failure {
            return Err(format!("budget {budget}: {f}"));
        }
        if result.state.peak_materialized() > budget {
            return Err(format!(
                "budget {budget}: peak {} Gram blocks",
                result.state.peak_materialized()
            ));
        }
        let w = result.weights();
        if w.iter().any(|&b| b < 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(format!("budget {budget}: final weights off the simplex"));
        }
        iterations += result.outer_iterations;
    }
    Ok(format!(
        "{checked} iteration records over {iterations} outer iterations"
    ))
}

/// Compressed predictor against the dual expansion for every family and
/// scope.
pub fn compressed_dual_equivalence(seed: u64, queries: usize) -> Outcome {
    let mut worst = 0.0f64;
    let mut r = rng(seed);
    for family in FAMILIES {
        for scope in SCOPES {
            let data = gen_piecewise(40, 3, r.random()).unwrap();
            let candidates = CandidateSet::for_samples(&data, family, scope, &GammaGrid::default());
            let result = sequential_mkl(&candidates, &MklConfig::default()).map_err(|e| e.to_string())?;
            let active: Vec<_> = result
                .state
                .kernels()
                .iter()
                .filter(|k| k.weight > 1e-8)
                .map(|k| (k.map.clone(), k.weight))
                .collect();
            let alpha = result.state.dual().alpha();
            let model = compress(alpha, &active, &data, ScalerParams::identity(2)).map_err(|e| e.to_string())?;
            for _ in 0..queries {
                let x = [r.random_range(-0.5..1.5), r.random_range(-0.5..1.5)];
                let fast = model.predict_score(&x).map_err(|e| e.to_string())?;
                let slow = dual_expansion(alpha, &data, &active, &x);
                let dev = (fast - slow).abs() / fast.abs().max(slow.abs()).max(1e-10);
                if !rel_close(fast, slow, 1e-8, 1e-10) {
                    return Err(format!("{family}/{scope}: {fast} vs {slow} at {x:?}"));
                }
                worst = worst.max(dev);
            }
        }
    }
    Ok(format!(
        "8 models x {queries} queries; max relative deviation {worst:.1e}"
    ))
}

/// Symmetry and positive semidefiniteness of Gram matrices.
pub fn gram_psd(instances_per_case: usize, seed: u64) -> Outcome {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for family in FAMILIES {
        for scope in SCOPES {
            for _ in 0..instances_per_case {
                let n = r.random_range(1..=50);
                let d = r.random_range(1..=6);
                let data = random_dataset(&mut r, n, d, -3.0, 3.0);
                let center: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
                let gamma = 10f64.powf(r.random_range(-2.0..1.5));
                let map = ConformalMap::new(family, scope, gamma, center).unwrap();
                let k: GramBlock = gram(&map, &data).map_err(|e| e.to_string())?;
                let kv = k.values();
                for i in 0..n {
                    for j in 0..n {
                        if kv[[i, j]] != kv[[j, i]] {
                            return Err(format!("{family}/{scope}: asymmetric at ({i},{j})"));
                        }
                    }
                }
                let oracle = oracle_gram(&map, &data);
                let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
                for (a, b) in kv.iter().zip(oracle.iter()) {
                    if (a - b).abs() > 1e-12 * scale {
                        return Err(format!("{family}/{scope}: entry {a} vs definition {b}"));
                    }
                }
                let min = eigenvalues(kv).into_iter().fold(f64::INFINITY, f64::min);
                let tol = 1e-10 * scale * n as f64;
                worst = worst.max(-min / scale);
                if min < -tol {
                    return Err(format!("{family}/{scope}: eigenvalue {min} (scale {scale})"));
                }
            }
        }
    }
    Ok(format!(
        "{} matrices; most negative eigenvalue {worst:.1e} of the largest entry",
        8 * instances_per_case
    ))
}
