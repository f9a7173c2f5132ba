//! Oracles written independently of the library's solvers.
#![allow(dead_code)]

pub mod props;

use mllkm::data::Dataset;
use mllkm::kernels::{CandidateSet, ConformalMap, MapFamily, MapScope};
use mllkm::mkl::{CandidateStatus, MklConfig, MklResult};
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn h(family: MapFamily, gamma: f64, r: f64) -> f64 {
    match family {
        MapFamily::Exp => (-gamma * r).exp(),
        MapFamily::Gauss => (-gamma * r * r).exp(),
        MapFamily::Linear => (1.0 - gamma * r).max(0.0),
        MapFamily::Square => (1.0 - gamma * r * r).max(0.0),
    }
}

/// Explicit feature vector, straight from the map definitions.
pub fn phi(map: &ConformalMap, x: &[f64]) -> Vec<f64> {
    let c = map.center();
    let diff: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
    match map.scope() {
        MapScope::Global => {
            let r = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
            let w = h(map.family(), map.gamma(), r);
            diff.iter().map(|v| w * v).collect()
        }
        MapScope::Componentwise => diff.iter().map(|v| h(map.family(), map.gamma(), v.abs()) * v).collect(),
    }
}

pub fn kernel(map: &ConformalMap, a: &[f64], b: &[f64]) -> f64 {
    phi(map, a).iter().zip(phi(map, b)).map(|(p, q)| p * q).sum()
}

pub fn rows(data: &Dataset) -> Vec<Vec<f64>> {
    data.features().rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn oracle_gram(map: &ConformalMap, data: &Dataset) -> Array2<f64> {
    let x = rows(data);
    let n = x.len();
    Array2::from_shape_fn((n, n), |(i, j)| kernel(map, &x[i], &x[j]))
}

pub fn half_quad(alpha: &[f64], y: &[f64], k: &Array2<f64>) -> f64 {
    let n = alpha.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += alpha[i] * alpha[j] * y[i] * y[j] * k[[i, j]];
        }
    }
    0.5 * s
}

pub fn dual_value(alpha: &[f64], y: &[f64], k: &Array2<f64>) -> f64 {
    alpha.iter().sum::<f64>() - half_quad(alpha, y, k)
}

pub fn max_eigenvalue(k: &Array2<f64>) -> f64 {
    eigenvalues(k).into_iter().fold(0.0, f64::max)
}

pub fn eigenvalues(k: &Array2<f64>) -> Vec<f64> {
    let n = k.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| k[[i, j]]);
    SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
}

/// Box-constrained SVM dual by accelerated projected gradient with
/// adaptive restart.
pub fn fista_svm(k: &Array2<f64>, y: &[f64], c: f64, warm: Option<&[f64]>) -> Vec<f64> {
    let n = y.len();
    let q = Array2::from_shape_fn((n, n), |(i, j)| y[i] * y[j] * k[[i, j]]);
    let lip = max_eigenvalue(&q);
    if lip <= 1e-300 {
        return vec![c; n];
    }
    let grad = |a: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| 1.0 - (0..n).map(|j| q[[i, j]] * a[j]).sum::<f64>())
            .collect()
    };
    let clip = |v: f64| v.clamp(0.0, c);
    let mut x: Vec<f64> = warm.map_or_else(|| vec![0.0; n], |w| w.iter().map(|&v| clip(v)).collect());
    let mut v = x.clone();
    let mut t = 1.0f64;
    for _ in 0..400_000 {
        let g = grad(&v);
        let next: Vec<f64> = v.iter().zip(&g).map(|(a, b)| clip(a + b / lip)).collect();
        // restart when momentum points uphill
        let uphill: f64 = g.iter().zip(next.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        if uphill < 0.0 {
            t = 1.0;
            v = x.clone();
            continue;
        }
        let beta = (t - 1.0) / t_next;
        v = next.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
        x = next;
        t = t_next;
        if projected_gradient(&x, &grad(&x), c) <= 1e-10 {
            break;
        }
    }
    x
}

pub fn projected_gradient(a: &[f64], g: &[f64], c: f64) -> f64 {
    a.iter()
        .zip(g)
        .map(|(&ai, &gi)| {
            if ai <= 0.0 {
                gi.max(0.0)
            } else if ai >= c {
                (-gi).max(0.0)
            } else {
                gi.abs()
            }
        })
        .fold(0.0, f64::max)
}

pub fn combine(grams: &[Array2<f64>], beta: &[f64]) -> Array2<f64> {
    let n = grams[0].nrows();
    let mut k = Array2::zeros((n, n));
    for (g, &b) in grams.iter().zip(beta) {
        k.scaled_add(b, g);
    }
    k
}

#[derive(Clone, Debug)]
pub struct MinMax {
    /// Smallest `J(beta)` found: an upper bound on the optimum.
    pub upper: f64,
    /// `max_a min_m D(a, e_m)` over the duals visited: a lower bound.
    pub lower: f64,
    pub beta: Vec<f64>,
}

struct MinMaxSearch<'a> {
    grams: &'a [Array2<f64>],
    y: &'a [f64],
    c: f64,
    best: MinMax,
}

impl MinMaxSearch<'_> {
    fn j(&mut self, beta: &[f64]) -> (f64, Vec<f64>) {
        let k = combine(self.grams, beta);
        let alpha = fista_svm(&k, self.y, self.c, None);
        let value = dual_value(&alpha, self.y, &k);
        let scores: Vec<f64> = self.grams.iter().map(|g| half_quad(&alpha, self.y, g)).collect();
        let lower = alpha.iter().sum::<f64>() - scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if value < self.best.upper {
            self.best.upper = value;
            self.best.beta = beta.to_vec();
        }
        self.best.lower = self.best.lower.max(lower);
        (value, scores)
    }

    fn edge(&mut self, a: usize, b: usize) {
        let m = self.grams.len();
        let point = |t: f64| {
            let mut beta = vec![0.0; m];
            beta[a] = t;
            beta[b] = 1.0 - t;
            beta
        };
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let values: Vec<f64> = grid.iter().map(|&t| self.j(&point(t)).0).collect();
        let best = (0..grid.len())
            .min_by(|&i, &j| values[i].total_cmp(&values[j]))
            .unwrap();
        let (mut lo, mut hi) = (grid[best.saturating_sub(1)], grid[(best + 1).min(20)]);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        while hi - lo > 1e-7 {
            let (t1, t2) = (hi - g * (hi - lo), lo + g * (hi - lo));
            if self.j(&point(t1)).0 <= self.j(&point(t2)).0 {
                hi = t2;
            } else {
                lo = t1;
            }
        }
    }
}

/// Solves `min_beta max_a D(a, beta)` by brute force: every vertex and
/// edge of the simplex by grid plus golden section, then exponentiated
/// gradient over the whole simplex.
pub fn oracle_minmax(grams: &[Array2<f64>], y: &[f64], c: f64) -> MinMax {
    let m = grams.len();
    let mut s = MinMaxSearch {
        grams,
        y,
        c,
        best: MinMax {
            upper: f64::INFINITY,
            lower: f64::NEG_INFINITY,
            beta: vec![1.0 / m as f64; m],
        },
    };
    for a in 0..m {
        for b in a + 1..m {
            s.edge(a, b);
        }
    }
    if m == 1 {
        s.j(&[1.0]);
    }
    let mut beta: Vec<f64> = s.best.beta.iter().map(|b| 0.9 * b + 0.1 / m as f64).collect();
    for it in 0..400 {
        let (_, scores) = s.j(&beta);
        let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(1e-300);
        let eta = 2.0 / (1.0 + it as f64).sqrt() / top;
        for (b, a) in beta.iter_mut().zip(&scores) {
            *b *= (eta * (a - top)).exp();
        }
        let sum: f64 = beta.iter().sum();
        beta.iter_mut().for_each(|b| *b /= sum);
    }
    s.best
}

/// Dual expansion `sum_i a_i y_i sum_c beta_c k_c(x_i, x)` with kernels
/// evaluated from the definitions.
pub fn dual_expansion(alpha: &[f64], data: &Dataset, active: &[(ConformalMap, f64)], x: &[f64]) -> f64 {
    let y = data.labels();
    rows(data)
        .iter()
        .enumerate()
        .map(|(i, xi)| alpha[i] * y[i] * active.iter().map(|(map, beta)| beta * kernel(map, xi, x)).sum::<f64>())
        .sum()
}

/// Re-derives the termination certificate of a converged run from the
/// kernel definitions.
pub fn check_certificate(result: &MklResult, candidates: &CandidateSet<'_>, config: &MklConfig) -> Result<(), String> {
    if !result.converged {
        return Err("run did not converge".into());
    }
    let data = candidates.data();
    let y = data.labels().to_vec();
    let alpha = result.state.dual().alpha();
    let score = |map: &ConformalMap| half_quad(alpha, &y, &oracle_gram(map, data));
    let active: Vec<(f64, f64)> = result
        .state
        .kernels()
        .iter()
        .map(|k| (k.weight, score(&k.map)))
        .collect();
    let nu = active
        .iter()
        .filter(|(w, _)| *w > config.prune_threshold)
        .map(|(_, s)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = if nu > 0.0 {
        nu * config.violation_tol
    } else {
        config.violation_tol
    };
    // room for summation-order differences between the two score paths
    let tol = tol + 1e-9 * nu.abs().max(1.0);
    for (w, s) in &active {
        if *w > config.prune_threshold && (nu - s).abs() > tol {
            return Err(format!("active score {s} differs from nu {nu} by more than {tol}"));
        }
    }
    for id in 0..candidates.len() {
        if result.state.status(id) == CandidateStatus::Open {
            let s = score(&candidates.map(id));
            if s > nu + tol {
                return Err(format!("open candidate {id} scores {s} > nu {nu} + {tol}"));
            }
        }
    }
    Ok(())
}

/// Uniform points in `[lo, hi]^d` with random labels of both signs.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, lo: f64, hi: f64) -> Dataset {
    loop {
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(lo..hi));
        let y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        if n == 1 || (y.contains(&1.0) && y.contains(&-1.0)) {
            return Dataset::new(x, y.into()).unwrap();
        }
    }
}

pub fn rel_close(a: f64, b: f64, rel: f64, abs_floor: f64) -> bool {
    (a - b).abs() <= (rel * a.abs().max(b.abs())).max(abs_floor)
}
