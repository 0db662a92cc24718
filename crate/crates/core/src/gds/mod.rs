//! Global dialogue state (GDS) space: dialogue embeddings clustered into
//! final-outcome classes, each carrying an aggregate acceptability score.

pub mod aggregate;
pub mod hdbscan;
pub mod kmeans;
pub mod map;
pub mod reducer;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use aggregate::{cluster_aggregates, trimmed_mean, AggregationRule};
pub use hdbscan::{fit_hdbscan, CondensedCluster, HdbscanFit};
pub use kmeans::{fit_kmeans, KMeansFit};
pub use map::MapProjection;
pub use reducer::{fit_reducer, Reducer};

use crate::corpus::{read_json, write_json};
use crate::embedding::{normalize, pool_dialogue, EmbeddingMatrix, PoolingConfig};
use crate::error::{Error, Result};

pub(crate) fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    sq_euclidean(a, b).sqrt()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    /// Distance is `1 - cosine similarity`.
    Cosine,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => euclidean(a, b),
            Metric::Cosine => 1.0 - cosine_similarity(a, b),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::Argument(format!("unknown metric {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum ClusterMethod {
    Kmeans { k: usize, n_init: usize },
    Hdbscan {
        min_cluster_size: usize,
        /// Defaults to `min_cluster_size`.
        #[serde(default)]
        min_samples: Option<usize>,
    },
}

impl ClusterMethod {
    pub fn is_hdbscan(&self) -> bool {
        matches!(self, ClusterMethod::Hdbscan { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdsConfig {
    pub pooling: PoolingConfig,
    /// Target dimension; `None` or the embedding dimension means no reduction.
    #[serde(default)]
    pub reduce_dim: Option<usize>,
    pub metric: Metric,
    pub method: ClusterMethod,
    /// Defaults to a 10% trimmed mean for k-means and the probability-weighted mean for HDBSCAN.
    #[serde(default)]
    pub aggregation: Option<AggregationRule>,
    /// Multiplier on each HDBSCAN cluster's member radius when classifying new points as noise.
    #[serde(default = "default_noise_scale")]
    pub noise_radius_scale: f64,
}

fn default_noise_scale() -> f64 {
    1.0
}

impl Default for GdsConfig {
    /// k-means with k = 21, β = 0.3, normalised, Euclidean, no reduction.
    fn default() -> Self {
        Self {
            pooling: PoolingConfig::default(),
            reduce_dim: None,
            metric: Metric::Euclidean,
            method: ClusterMethod::Kmeans { k: 21, n_init: 10 },
            aggregation: None,
            noise_radius_scale: 1.0,
        }
    }
}

impl GdsConfig {
    pub fn aggregation_rule(&self) -> AggregationRule {
        self.aggregation.unwrap_or(match self.method {
            ClusterMethod::Kmeans { .. } => AggregationRule::TrimmedMean { fraction: 0.1 },
            ClusterMethod::Hdbscan { .. } => AggregationRule::ProbabilityWeighted,
        })
    }
}

/// Cluster membership of one embedding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// `None` is noise (HDBSCAN only).
    pub cluster: Option<usize>,
    pub probability: f64,
    /// Nearest centroid and its distance under the model metric.
    pub nearest: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdsModel {
    pub config: GdsConfig,
    pub input_dim: usize,
    pub reducer: Option<Reducer>,
    /// k-means centroids, or HDBSCAN simulated centroids (mean of exemplars).
    pub centroids: Vec<Vec<f64>>,
    /// Aggregate acceptability per cluster.
    pub aggregates: Vec<f64>,
    /// HDBSCAN only: maximum member distance from each simulated centroid.
    #[serde(default)]
    pub noise_radii: Vec<f64>,
    pub train_labels: Vec<Option<usize>>,
    pub train_probabilities: Vec<f64>,
    #[serde(default)]
    pub exemplars: Vec<Vec<usize>>,
    #[serde(default)]
    pub tree: Vec<CondensedCluster>,
    #[serde(default)]
    pub inertia: Option<f64>,
    pub map: MapProjection,
    pub train_map_points: Vec<(f64, f64)>,
    pub seed: u64,
}

impl GdsModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// True for an HDBSCAN fit where every point was noise.
    pub fn is_degenerate(&self) -> bool {
        self.k() == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.reducer.as_ref().map_or(self.input_dim, Reducer::output_dim)
    }

    /// Pools utterance vectors, applies the reducer, then normalises if configured.
    pub fn featurize(&self, utterances: &EmbeddingMatrix) -> Result<Vec<f64>> {
        featurize_dialogue(&self.config.pooling, self.reducer.as_ref(), utterances)
    }

    /// Features for every prefix `1..=|U|`.
    pub fn featurize_prefixes(&self, utterances: &EmbeddingMatrix) -> Result<Vec<Vec<f64>>> {
        (1..=utterances.len())
            .map(|t| self.featurize(&EmbeddingMatrix::new(utterances.rows()[..t].to_vec())?))
            .collect()
    }

    /// Distances from `u` to every centroid under the model metric.
    pub fn distances(&self, u: &[f64]) -> Result<Vec<f64>> {
        if self.is_degenerate() {
            return Err(Error::Validation("model has no clusters".into()));
        }
        if u.len() != self.feature_dim() {
            return Err(Error::Validation(format!(
                "embedding has dimension {}, model expects {}",
                u.len(),
                self.feature_dim()
            )));
        }
        Ok(self.centroids.iter().map(|c| self.config.metric.distance(u, c)).collect())
    }

    /// Nearest centroid, lowest index on ties. Under HDBSCAN a point beyond the
    /// scaled member radius is noise and its probability is `radius / distance`.
    pub fn assign(&self, u: &[f64]) -> Result<ClusterAssignment> {
        let d = self.distances(u)?;
        let mut nearest = 0;
        for (j, dj) in d.iter().enumerate() {
            if *dj < d[nearest] {
                nearest = j;
            }
        }
        let distance = d[nearest];
        if !self.config.method.is_hdbscan() {
            return Ok(ClusterAssignment {
                cluster: Some(nearest),
                probability: 1.0,
                nearest,
                distance,
            });
        }
        let radius = self.noise_radii[nearest] * self.config.noise_radius_scale;
        Ok(if distance <= radius {
            ClusterAssignment {
                cluster: Some(nearest),
                probability: 1.0,
                nearest,
                distance,
            }
        } else {
            ClusterAssignment {
                cluster: None,
                probability: radius / distance,
                nearest,
                distance,
            }
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }
}

/// Pools utterance vectors, applies the reducer, then normalises if configured.
pub fn featurize_dialogue(pooling: &PoolingConfig, reducer: Option<&Reducer>, u: &EmbeddingMatrix) -> Result<Vec<f64>> {
    let raw = pool_dialogue(
        u,
        &PoolingConfig {
            normalize: false,
            ..*pooling
        },
    )?;
    let mut x = match reducer {
        Some(r) => r.apply(&raw)?,
        None => raw,
    };
    if pooling.normalize {
        normalize(&mut x)?;
    }
    Ok(x)
}

/// Fits the reducer on unnormalised pooled training vectors; `None` when no
/// reduction is requested or the target equals the embedding dimension.
pub fn fit_feature_reducer(
    pooling: &PoolingConfig,
    reduce_dim: Option<usize>,
    train: &[EmbeddingMatrix],
) -> Result<Option<Reducer>> {
    let Some(first) = train.first() else {
        return Err(Error::Argument("no training dialogues".into()));
    };
    match reduce_dim {
        Some(d) if d != first.dim() => {
            let raw_cfg = PoolingConfig {
                normalize: false,
                ..*pooling
            };
            let raw: Vec<Vec<f64>> = train.iter().map(|u| pool_dialogue(u, &raw_cfg)).collect::<Result<_>>()?;
            fit_reducer(&raw, d)
        }
        _ => Ok(None),
    }
}

/// Fits a GDS model on complete training dialogues.
pub fn fit_gds(
    config: &GdsConfig,
    train: &[EmbeddingMatrix],
    acceptability: &[f64],
    seed: u64,
) -> Result<GdsModel> {
    if train.is_empty() {
        return Err(Error::Argument("no training dialogues".into()));
    }
    if train.len() != acceptability.len() {
        return Err(Error::Argument(format!(
            "{} dialogues but {} acceptability values",
            train.len(),
            acceptability.len()
        )));
    }
    let input_dim = train[0].dim();
    let reducer = fit_feature_reducer(&config.pooling, config.reduce_dim, train)?;
    let features: Vec<Vec<f64>> = train
        .iter()
        .map(|u| featurize_dialogue(&config.pooling, reducer.as_ref(), u))
        .collect::<Result<_>>()?;
    fit_gds_features(config, input_dim, reducer, &features, acceptability, seed)
}

/// Clusters precomputed dialogue features.
pub fn fit_gds_features(
    config: &GdsConfig,
    input_dim: usize,
    reducer: Option<Reducer>,
    features: &[Vec<f64>],
    acceptability: &[f64],
    seed: u64,
) -> Result<GdsModel> {
    let map = MapProjection::fit(features)?;
    let train_map_points = map.project_all(features)?;
    let rule = config.aggregation_rule();

    let mut model = GdsModel {
        config: *config,
        input_dim,
        reducer,
        centroids: Vec::new(),
        aggregates: Vec::new(),
        noise_radii: Vec::new(),
        train_labels: Vec::new(),
        train_probabilities: Vec::new(),
        exemplars: Vec::new(),
        tree: Vec::new(),
        inertia: None,
        map,
        train_map_points,
        seed,
    };

    match config.method {
        ClusterMethod::Kmeans { k, n_init } => {
            let fit = fit_kmeans(features, k, n_init, seed)?;
            model.train_labels = fit.labels.iter().map(|&l| Some(l)).collect();
            model.train_probabilities = vec![1.0; features.len()];
            model.centroids = fit.centroids;
            model.inertia = Some(fit.inertia);
        }
        ClusterMethod::Hdbscan {
            min_cluster_size,
            min_samples,
        } => {
            let fit = fit_hdbscan(features, min_cluster_size, min_samples)?;
            model.centroids = fit
                .exemplars
                .iter()
                .map(|ex| {
                    let mut c = vec![0.0; features[0].len()];
                    for &i in ex {
                        c.iter_mut().zip(&features[i]).for_each(|(a, b)| *a += b);
                    }
                    c.iter_mut().for_each(|a| *a /= ex.len() as f64);
                    c
                })
                .collect();
            model.noise_radii = (0..fit.n_clusters())
                .map(|c| {
                    features
                        .iter()
                        .zip(&fit.labels)
                        .filter(|(_, l)| **l == Some(c))
                        .map(|(f, _)| config.metric.distance(f, &model.centroids[c]))
                        .fold(0.0, f64::max)
                })
                .collect();
            model.train_labels = fit.labels;
            model.train_probabilities = fit.probabilities;
            model.exemplars = fit.exemplars;
            model.tree = fit.tree;
        }
    }

    model.aggregates = cluster_aggregates(
        model.k(),
        &model.train_labels,
        &model.train_probabilities,
        acceptability,
        rule,
    )?;
    if model.aggregates.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite cluster aggregate".into()));
    }
    Ok(model)
}
