//! Two-dimensional projection of the GDS space for plotting.

use serde::{Deserialize, Serialize};

use super::reducer::{pca, Reducer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapProjection {
    /// `None` when the space is already at most two-dimensional.
    pca: Option<Reducer>,
    dim: usize,
}

impl MapProjection {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let dim = x.first().map(Vec::len).ok_or_else(|| Error::Argument("no rows to fit".into()))?;
        let pca = if dim >= 2 { Some(pca(x, 2)?) } else { None };
        Ok(Self { pca, dim })
    }

    pub fn project(&self, p: &[f64]) -> Result<(f64, f64)> {
        if p.len() != self.dim {
            return Err(Error::Validation(format!(
                "map projection expects dimension {}, got {}",
                self.dim,
                p.len()
            )));
        }
        match &self.pca {
            Some(r) => {
                let z = r.apply(p)?;
                Ok((z[0], z[1]))
            }
            None => Ok((p[0], 0.0)),
        }
    }

    pub fn project_all(&self, points: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
        points.iter().map(|p| self.project(p)).collect()
    }
}
