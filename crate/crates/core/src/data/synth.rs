use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// Continuous piecewise-linear curve `y = b(x)` over `x` in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseBoundary {
    /// Knot abscissae, strictly increasing from 0 to 1.
    pub knots_x: Vec<f64>,
    pub knots_y: Vec<f64>,
}

impl PiecewiseBoundary {
    /// Knots alternate between a low band and a high band so that every
    /// segment changes slope direction. The inner abscissae are jittered.
    fn random(num_segments: usize, rng: &mut impl Rng) -> Self {
        let s = num_segments as f64;
        let knots_x = (0..=num_segments)
            .map(|j| match j {
                0 => 0.0,
                j if j == num_segments => 1.0,
                j => (j as f64 + rng.random_range(-0.3..0.3)) / s,
            })
            .collect();
        let knots_y = (0..=num_segments)
            .map(|j| {
                if j % 2 == 0 {
                    rng.random_range(0.15..0.45)
                } else {
                    rng.random_range(0.55..0.85)
                }
            })
            .collect();
        PiecewiseBoundary { knots_x, knots_y }
    }

    pub fn num_segments(&self) -> usize {
        self.knots_x.len() - 1
    }

    /// Height of the boundary at `x` (clamped to `[0, 1]`).
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let seg = self
            .knots_x
            .windows(2)
            .position(|w| x <= w[1])
            .unwrap_or(self.num_segments() - 1);
        let (x0, x1) = (self.knots_x[seg], self.knots_x[seg + 1]);
        let (y0, y1) = (self.knots_y[seg], self.knots_y[seg + 1]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// +1 above the curve, -1 on or below it.
    pub fn label(&self, point: [f64; 2]) -> f64 {
        if point[1] > self.eval(point[0]) {
            1.0
        } else {
            -1.0
        }
    }
}

/// Uniform points on the unit square labelled by a random piecewise-linear
/// boundary with `num_segments` segments.
pub fn gen_piecewise(n: usize, num_segments: usize, seed: u64) -> Result<Dataset> {
    gen_piecewise_with_boundary(n, num_segments, seed).map(|(data, _)| data)
}

/// As [`gen_piecewise`], also returning the boundary that labelled the data.
///
/// Draws are repeated from the same seeded stream until both classes occur.
pub fn gen_piecewise_with_boundary(n: usize, num_segments: usize, seed: u64) -> Result<(Dataset, PiecewiseBoundary)> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples, got {n}")));
    }
    if num_segments == 0 {
        return Err(Error::InvalidParameter("num_segments must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let boundary = PiecewiseBoundary::random(num_segments, &mut rng);
        let features = Array2::from_shape_fn((n, 2), |_| rng.random::<f64>());
        let labels: Array1<f64> = features
            .rows()
            .into_iter()
            .map(|r| boundary.label([r[0], r[1]]))
            .collect();
        let positives = labels.iter().filter(|&&y| y > 0.0).count();
        if positives > 0 && positives < n {
            return Ok((Dataset::new(features, labels)?, boundary));
        }
    }
}
