//! Progression function: how close an ongoing dialogue sits to clusters of
//! successful versus unsuccessful complete dialogues.

use serde::{Deserialize, Serialize};

use crate::corpus::{Dialogue, Utterance};
use crate::embedding::{embed_utterances, EmbeddingMatrix, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::gds::{GdsModel, Metric};
use crate::http::HttpClient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbScaling {
    /// Raw `vᵀp`.
    None,
    /// `vᵀp / Σp`.
    Sum,
    /// `vᵀ softmax(p)`: membership scores are re-normalised by a softmax.
    Softmax,
}

impl std::str::FromStr for ProbScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(ProbScaling::None),
            "sum" => Ok(ProbScaling::Sum),
            "softmax" => Ok(ProbScaling::Softmax),
            other => Err(Error::Argument(format!("unknown probability scaling {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProximityConfig {
    /// Euclidean proximity is `1/d` instead of `-d`. Ignored for cosine.
    pub inverse_distance: bool,
    /// z-score proximities across clusters before the softmax.
    pub standardized: bool,
    pub prob_scaling: ProbScaling,
}

impl Default for ProximityConfig {
    fn default() -> Self {
        Self {
            inverse_distance: true,
            standardized: false,
            prob_scaling: ProbScaling::Sum,
        }
    }
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Population z-scores; all zeros when the values are constant.
pub fn z_scores(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if std > 0.0 {
        x.iter().map(|v| (v - mean) / std).collect()
    } else {
        vec![0.0; x.len()]
    }
}

fn one_hot(k: usize, i: usize) -> Vec<f64> {
    let mut p = vec![0.0; k];
    p[i] = 1.0;
    p
}

/// Softmax over centroid proximities. An exact hit on a centroid under
/// inverse Euclidean distance puts all mass on that centroid.
fn centroid_softmax(model: &GdsModel, distances: &[f64], cfg: &ProximityConfig, standardize: bool) -> Vec<f64> {
    let prox: Vec<f64> = match model.config.metric {
        Metric::Euclidean if cfg.inverse_distance => {
            if let Some(hit) = distances.iter().position(|d| *d == 0.0) {
                return one_hot(distances.len(), hit);
            }
            distances.iter().map(|d| 1.0 / d).collect()
        }
        Metric::Euclidean => distances.iter().map(|d| -d).collect(),
        // similarity = 1 - distance
        Metric::Cosine => distances.iter().map(|d| 1.0 - d).collect(),
    };
    if standardize {
        softmax(&z_scores(&prox))
    } else {
        softmax(&prox)
    }
}

/// Cluster-membership vector for an embedding.
///
/// k-means: a probability vector (Σ = 1). HDBSCAN: the centroid softmax scaled
/// by the out-of-sample membership strength, so noise points carry total mass
/// below 1.
pub fn membership_probs(model: &GdsModel, u: &[f64], cfg: &ProximityConfig) -> Result<Vec<f64>> {
    if model.is_degenerate() {
        return Err(Error::Validation("model has no clusters".into()));
    }
    let distances = model.distances(u)?;
    if !model.config.method.is_hdbscan() {
        return Ok(centroid_softmax(model, &distances, cfg, cfg.standardized));
    }
    let strength = model.assign(u)?.probability;
    Ok(centroid_softmax(model, &distances, cfg, false)
        .into_iter()
        .map(|q| q * strength)
        .collect())
}

/// Progression for membership `p` over cluster aggregates `v`.
pub fn progression(p: &[f64], v: &[f64], cfg: &ProximityConfig) -> Result<f64> {
    if p.len() != v.len() || p.is_empty() {
        return Err(Error::Argument(format!(
            "membership has length {}, aggregates {}",
            p.len(),
            v.len()
        )));
    }
    let dot = |w: &[f64]| w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    match cfg.prob_scaling {
        ProbScaling::None => Ok(dot(p)),
        ProbScaling::Sum => {
            let total: f64 = p.iter().sum();
            if !(total > 0.0) {
                return Err(Error::NoMembership);
            }
            let w: Vec<f64> = p.iter().map(|x| x / total).collect();
            Ok(dot(&w))
        }
        ProbScaling::Softmax => {
            let scores = if cfg.standardized { z_scores(p) } else { p.to_vec() };
            Ok(dot(&softmax(&scores)))
        }
    }
}

/// Progression of one embedding under a model.
pub fn progression_at(model: &GdsModel, u: &[f64], cfg: &ProximityConfig) -> Result<f64> {
    let p = membership_probs(model, u, cfg)?;
    progression(&p, &model.aggregates, cfg)
}

/// Least-squares line through `(t, values[t-1])` for `t = 1..=n`.
/// A single point has slope 0 and intercept equal to its value.
pub fn least_squares(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    if n == 1 {
        return (0.0, values[0]);
    }
    let x_mean = (n as f64 + 1.0) / 2.0;
    let y_mean = values.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in values.iter().enumerate() {
        let dx = (i + 1) as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    (slope, y_mean - slope * x_mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressionTrace {
    pub turn_values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

impl ProgressionTrace {
    pub fn from_values(turn_values: Vec<f64>) -> Self {
        let (slope, intercept) = least_squares(&turn_values);
        Self {
            turn_values,
            slope,
            intercept,
        }
    }

    pub fn final_value(&self) -> f64 {
        *self.turn_values.last().expect("trace is non-empty")
    }

    /// `turn,value,fit` rows with the regression line alongside.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("turn,value,fit\n");
        for (i, v) in self.turn_values.iter().enumerate() {
            let t = (i + 1) as f64;
            out.push_str(&format!("{},{},{}\n", i + 1, v, self.intercept + self.slope * t));
        }
        out
    }
}

/// Progression over prefix features. Turns with no membership mass reuse the
/// previous value (leading gaps take the first defined value).
pub fn trace_from_features(model: &GdsModel, features: &[Vec<f64>], cfg: &ProximityConfig) -> Result<ProgressionTrace> {
    let mut values: Vec<Option<f64>> = Vec::with_capacity(features.len());
    for u in features {
        match progression_at(model, u, cfg) {
            Ok(v) => values.push(Some(v)),
            Err(Error::NoMembership) => values.push(None),
            Err(e) => return Err(e),
        }
    }
    let first = values.iter().flatten().next().copied().ok_or(Error::NoMembership)?;
    let mut last = first;
    let filled = values
        .into_iter()
        .map(|v| {
            if let Some(v) = v {
                last = v;
            }
            last
        })
        .collect();
    Ok(ProgressionTrace::from_values(filled))
}

pub fn progression_curve_from_embeddings(
    model: &GdsModel,
    utterances: &EmbeddingMatrix,
    cfg: &ProximityConfig,
) -> Result<ProgressionTrace> {
    trace_from_features(model, &model.featurize_prefixes(utterances)?, cfg)
}

/// Progression after every utterance of `d`.
pub fn progression_curve(
    d: &Dialogue,
    model: &GdsModel,
    provider: &dyn EmbeddingProvider,
    cfg: &ProximityConfig,
) -> Result<ProgressionTrace> {
    let u = embed_utterances(d, provider)?;
    progression_curve_from_embeddings(model, &u, cfg)
}

/// Anything that scores a dialogue history with a progression value.
pub trait ProgressionScorer: Send + Sync {
    fn score(&self, history: &[Utterance]) -> Result<f64>;

    fn score_batch(&self, histories: &[Vec<Utterance>]) -> Result<Vec<f64>> {
        histories.iter().map(|h| self.score(h)).collect()
    }
}

/// The clustering-based progression function.
pub struct UnsupervisedPf<'a> {
    pub model: &'a GdsModel,
    pub provider: &'a dyn EmbeddingProvider,
    pub proximity: ProximityConfig,
}

impl ProgressionScorer for UnsupervisedPf<'_> {
    fn score(&self, history: &[Utterance]) -> Result<f64> {
        if history.is_empty() {
            return Err(Error::Argument("cannot score an empty history".into()));
        }
        let texts: Vec<String> = history.iter().map(|u| u.text.clone()).collect();
        let u = EmbeddingMatrix::new(self.provider.embed(&texts)?)?;
        progression_at(self.model, &self.model.featurize(&u)?, &self.proximity)
    }
}

#[derive(Serialize)]
struct ProgressRequest<'a> {
    history: &'a [Utterance],
}

#[derive(Deserialize)]
struct ProgressResponse {
    value: f64,
}

/// Remote progression model reached over `POST /progress`.
pub struct HttpPf {
    client: HttpClient,
}

impl HttpPf {
    pub fn new(client: HttpClient) -> Self {
        Self { client }
    }
}

impl ProgressionScorer for HttpPf {
    fn score(&self, history: &[Utterance]) -> Result<f64> {
        let resp: ProgressResponse = self.client.post("/progress", &ProgressRequest { history })?;
        if !resp.value.is_finite() {
            return Err(Error::Provider(format!("/progress returned {}", resp.value)));
        }
        Ok(resp.value)
    }
}
