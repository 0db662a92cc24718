//! Linear (PCA) dimensionality reduction fit on training embeddings.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Centred projection onto the leading principal axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reducer {
    pub mean: Vec<f64>,
    /// `target_dim` rows of length `input_dim`, ordered by decreasing variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl Reducer {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Validation(format!(
                "reducer expects dimension {}, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(x.iter().zip(&self.mean)).map(|(w, (v, m))| w * (v - m)).sum())
            .collect())
    }

    pub fn apply_all(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        xs.iter().map(|x| self.apply(x)).collect()
    }

    /// Maps reduced coordinates back into the input space.
    pub fn reconstruct(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, zi) in self.components.iter().zip(z) {
            out.iter_mut().zip(c).for_each(|(o, w)| *o += zi * w);
        }
        out
    }
}

/// Fits a PCA projection to `target_dim` axes. Returns `None` when
/// `target_dim` equals the input dimension (identity).
pub fn fit_reducer(x: &[Vec<f64>], target_dim: usize) -> Result<Option<Reducer>> {
    let dim = x.first().map(Vec::len).ok_or_else(|| Error::Argument("no rows to fit".into()))?;
    if target_dim == 0 || target_dim > dim {
        return Err(Error::Argument(format!(
            "target dimension {target_dim} must lie in 1..={dim}"
        )));
    }
    if target_dim == dim {
        return Ok(None);
    }
    pca(x, target_dim).map(Some)
}

pub(crate) fn pca(x: &[Vec<f64>], target_dim: usize) -> Result<Reducer> {
    let n = x.len();
    let dim = x[0].len();
    if x.iter().any(|r| r.len() != dim) {
        return Err(Error::Validation("rows have inconsistent dimensions".into()));
    }
    let mean: Vec<f64> = (0..dim).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centred = DMatrix::from_fn(n, dim, |i, j| x[i][j] - mean[j]);
    let cov = centred.transpose() * &centred / n as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut components = Vec::with_capacity(target_dim);
    let mut explained_variance = Vec::with_capacity(target_dim);
    for &j in order.iter().take(target_dim) {
        let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
        // sign convention: the largest-magnitude entry is positive
        let pivot = v
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(_, x)| x)
            .unwrap_or(1.0);
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance.push(eig.eigenvalues[j].max(0.0));
    }
    Ok(Reducer {
        mean,
        components,
        explained_variance,
    })
}
