//! Utterance embeddings and recency-weighted pooling into dialogue vectors.

mod provider;

pub use provider::{CachedProvider, EmbeddingProvider, HttpEmbedder, StubEmbedder};

use serde::{Deserialize, Serialize};

use crate::corpus::Dialogue;
use crate::error::{Error, Result};

/// Row-per-utterance embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: Vec<Vec<f64>>,
    dim: usize,
}

impl EmbeddingMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Argument("embedding matrix has no rows".into()))?;
        if dim == 0 {
            return Err(Error::Argument("embedding dimension is zero".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::Validation(format!(
                    "row {i} has dimension {}, expected {dim}",
                    r.len()
                )));
            }
            if r.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation(format!("row {i} has non-finite entries")));
            }
        }
        Ok(Self { rows, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolingConfig {
    /// Recency weight. 0 pools uniformly; larger values favour later utterances.
    pub beta: f64,
    /// Rescale the pooled vector to unit length.
    pub normalize: bool,
    /// Rescale every utterance vector to unit length before pooling.
    #[serde(default)]
    pub normalize_utterances: bool,
}

impl Default for PoolingConfig {
    fn default() -> Self {
        Self {
            beta: 0.3,
            normalize: true,
            normalize_utterances: false,
        }
    }
}

/// Softmax over `n` evenly spaced points on `[0, beta]`, endpoints included.
pub fn recency_weights(n: usize, beta: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Argument("recency weights need at least one utterance".into()));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::Argument(format!("recency weight must be finite and >= 0, got {beta}")));
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let step = beta / (n - 1) as f64;
    // shift by the max (the last point) for stability
    let exps: Vec<f64> = (0..n).map(|i| (i as f64 * step - beta).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [f64]) -> Result<()> {
    let norm = l2_norm(v);
    if !(norm > 0.0) {
        return Err(Error::Validation("cannot normalise a zero vector".into()));
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(())
}

/// `Uᵀ · recency_weights(|U|, beta)`, optionally unit-normalised.
pub fn pool_dialogue(u: &EmbeddingMatrix, cfg: &PoolingConfig) -> Result<Vec<f64>> {
    pool_rows(u.rows(), cfg)
}

fn pool_rows(rows: &[Vec<f64>], cfg: &PoolingConfig) -> Result<Vec<f64>> {
    let weights = recency_weights(rows.len(), cfg.beta)?;
    let dim = rows[0].len();
    let mut out = vec![0.0; dim];
    for (row, w) in rows.iter().zip(&weights) {
        if cfg.normalize_utterances {
            let norm = l2_norm(row);
            if norm > 0.0 {
                out.iter_mut().zip(row).for_each(|(o, x)| *o += w * x / norm);
            }
        } else {
            out.iter_mut().zip(row).for_each(|(o, x)| *o += w * x);
        }
    }
    if cfg.normalize {
        normalize(&mut out)?;
    }
    Ok(out)
}

/// Utterance vectors of a whole dialogue, in order.
pub fn embed_utterances(d: &Dialogue, provider: &dyn EmbeddingProvider) -> Result<EmbeddingMatrix> {
    let texts: Vec<String> = d.utterances.iter().map(|u| u.text.clone()).collect();
    let rows = provider.embed(&texts).map_err(|e| match e {
        Error::Provider(m) => Error::Provider(format!(
            "embedding utterances 0..{} of dialogue {:?}: {m}",
            texts.len(),
            d.id
        )),
        other => other,
    })?;
    EmbeddingMatrix::new(rows)
}

/// Pooled embedding of utterances `1..=turn`.
pub fn embed_dialogue_prefix(
    d: &Dialogue,
    turn: usize,
    provider: &dyn EmbeddingProvider,
    cfg: &PoolingConfig,
) -> Result<Vec<f64>> {
    if turn == 0 || turn > d.len() {
        return Err(Error::Argument(format!(
            "turn {turn} out of range 1..={} for dialogue {:?}",
            d.len(),
            d.id
        )));
    }
    let texts: Vec<String> = d.utterances[..turn].iter().map(|u| u.text.clone()).collect();
    let rows = provider.embed(&texts).map_err(|e| match e {
        Error::Provider(m) => Error::Provider(format!("turn {turn} of dialogue {:?}: {m}", d.id)),
        other => other,
    })?;
    pool_rows(EmbeddingMatrix::new(rows)?.rows(), cfg)
}

/// Pooled embeddings of every prefix `1..=|U|`.
pub fn prefix_embeddings(u: &EmbeddingMatrix, cfg: &PoolingConfig) -> Result<Vec<Vec<f64>>> {
    (1..=u.len()).map(|t| pool_rows(&u.rows()[..t], cfg)).collect()
}
