use ndarray::Array2;

use super::ConformalMap;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// A symmetric `n x n` matrix of kernel values over a training set.
#[derive(Clone, Debug, PartialEq)]
pub struct GramBlock {
    values: Array2<f64>,
}

impl GramBlock {
    /// Wraps a precomputed matrix. It must be square and exactly symmetric.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, m) = values.dim();
        if n != m {
            return Err(Error::DimensionMismatch { expected: n, found: m });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if values[[i, j]] != values[[j, i]] {
                    return Err(Error::InvalidParameter(format!(
                        "Gram matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let values = if values.is_standard_layout() {
            values
        } else {
            values.as_standard_layout().into_owned()
        };
        Ok(GramBlock { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.values[[i, i]]
    }

    /// Bytes held by the matrix values.
    pub fn size_bytes(&self) -> usize {
        self.values.len() * std::mem::size_of::<f64>()
    }
}

/// Rows `phi(x_i)` for every sample of `data`.
pub fn feature_matrix(map: &ConformalMap, data: &Dataset) -> Result<Array2<f64>> {
    if data.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            found: data.dim(),
        });
    }
    let mut phi = Array2::zeros(data.features().raw_dim());
    let mut x = vec![0.0; data.dim()];
    for (src, mut dst) in data.features().rows().into_iter().zip(phi.rows_mut()) {
        x.iter_mut().zip(src.iter()).for_each(|(a, b)| *a = *b);
        map.feature_map_into(&x, dst.as_slice_mut().expect("standard layout"));
    }
    Ok(phi)
}

/// Mirrors the upper triangle onto the lower one.
fn symmetrize_upper(values: &mut Array2<f64>) {
    let n = values.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            values[[j, i]] = values[[i, j]];
        }
    }
}

/// Gram matrix of one locally linear kernel over `data`.
pub fn gram(map: &ConformalMap, data: &Dataset) -> Result<GramBlock> {
    let phi = feature_matrix(map, data)?;
    let mut values = phi.dot(&phi.t());
    symmetrize_upper(&mut values);
    Ok(GramBlock { values })
}

/// `sum_m weight_m * gram(map_m)`, evaluated from the maps.
pub fn combined_gram(active: &[(ConformalMap, f64)], data: &Dataset) -> Result<GramBlock> {
    let blocks = active
        .iter()
        .map(|(m, w)| Ok((gram(m, data)?, *w)))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<(&GramBlock, f64)> = blocks.iter().map(|(g, w)| (g, *w)).collect();
    combine_grams(&refs, data.n_samples())
}

/// `sum_m weight_m * block_m` over already materialized blocks.
///
/// `n` sizes the result when `blocks` is empty.
pub fn combine_grams(blocks: &[(&GramBlock, f64)], n: usize) -> Result<GramBlock> {
    let mut values = Array2::zeros((n, n));
    for (block, w) in blocks {
        if !(*w >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel weights must be non-negative, got {w}"
            )));
        }
        if block.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: block.n(),
            });
        }
        if *w > 0.0 {
            values.scaled_add(*w, &block.values);
        }
    }
    Ok(GramBlock { values })
}
