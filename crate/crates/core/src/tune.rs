//! Hyperparameter grid search for the unsupervised progression model.
//!
//! Configurations are enumerated in nested-loop order: β, d, normalisation and
//! metric on the outside, then a k-means sub-grid (k, inverse distance,
//! standardised proximity) followed by an HDBSCAN sub-grid (minimum cluster
//! size, soft aggregation, probability scaling, standardised proximity).
//! Each is scored by the Pearson r between validation PF slopes and
//! acceptability.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingMatrix, PoolingConfig};
use crate::error::{Error, Result};
use crate::gds::{
    featurize_dialogue, fit_feature_reducer, fit_gds, fit_gds_features, AggregationRule, ClusterMethod, GdsConfig,
    GdsModel, Metric, Reducer,
};
use crate::progression::{trace_from_features, ProbScaling, ProximityConfig};
use crate::stats::pearson_r;

fn betas() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 10.0).collect()
}
fn dims() -> Vec<usize> {
    vec![2, 16, 32, 64, 128, 768]
}
fn both() -> Vec<bool> {
    vec![true, false]
}
fn metrics() -> Vec<Metric> {
    vec![Metric::Cosine, Metric::Euclidean]
}
fn ks() -> Vec<usize> {
    (2..=30).collect()
}
fn min_cluster_sizes() -> Vec<usize> {
    (1..=10).map(|i| i * 10).collect()
}
fn scalings() -> Vec<ProbScaling> {
    vec![ProbScaling::None, ProbScaling::Softmax, ProbScaling::Sum]
}
fn n_init() -> usize {
    10
}

/// Search space. Omitted fields take the full default grid. An empty `ks` or
/// `min_cluster_sizes` switches that clustering family off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(default = "betas")]
    pub betas: Vec<f64>,
    /// Target dimensions; values at or above the embedding size mean no reduction.
    #[serde(default = "dims")]
    pub dims: Vec<usize>,
    #[serde(default = "both")]
    pub normalize: Vec<bool>,
    #[serde(default = "metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default = "ks")]
    pub ks: Vec<usize>,
    #[serde(default = "both")]
    pub inverse_distance: Vec<bool>,
    #[serde(default = "both")]
    pub standardized: Vec<bool>,
    #[serde(default = "min_cluster_sizes")]
    pub min_cluster_sizes: Vec<usize>,
    #[serde(default = "both")]
    pub soft_aggregation: Vec<bool>,
    #[serde(default = "scalings")]
    pub prob_scaling: Vec<ProbScaling>,
    #[serde(default = "n_init")]
    pub n_init: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            betas: betas(),
            dims: dims(),
            normalize: both(),
            metrics: metrics(),
            ks: ks(),
            inverse_distance: both(),
            standardized: both(),
            min_cluster_sizes: min_cluster_sizes(),
            soft_aggregation: both(),
            prob_scaling: scalings(),
            n_init: n_init(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    pub gds: GdsConfig,
    pub proximity: ProximityConfig,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let outer = [
            ("betas", self.betas.is_empty()),
            ("dims", self.dims.is_empty()),
            ("normalize", self.normalize.is_empty()),
            ("metrics", self.metrics.is_empty()),
            ("standardized", self.standardized.is_empty()),
        ];
        if let Some((name, _)) = outer.iter().find(|(_, empty)| *empty) {
            return Err(Error::Argument(format!("grid axis {name} is empty")));
        }
        if self.kmeans_size() == 0 && self.hdbscan_size() == 0 {
            return Err(Error::Argument("grid has neither k-means nor HDBSCAN configurations".into()));
        }
        if self.betas.iter().any(|b| !b.is_finite() || *b < 0.0) || self.dims.contains(&0) || self.n_init == 0 {
            return Err(Error::Argument("grid values out of range".into()));
        }
        Ok(())
    }

    fn kmeans_size(&self) -> usize {
        self.ks.len() * self.inverse_distance.len() * self.standardized.len()
    }

    fn hdbscan_size(&self) -> usize {
        self.min_cluster_sizes.len() * self.soft_aggregation.len() * self.prob_scaling.len() * self.standardized.len()
    }

    fn outer(&self) -> Vec<(f64, usize, bool, Metric)> {
        let mut out = Vec::new();
        for &b in &self.betas {
            for &d in &self.dims {
                for &n in &self.normalize {
                    for &m in &self.metrics {
                        out.push((b, d, n, m));
                    }
                }
            }
        }
        out
    }

    /// Number of configurations the loops visit.
    pub fn len(&self) -> usize {
        self.betas.len() * self.dims.len() * self.normalize.len() * self.metrics.len() * (self.kmeans_size() + self.hdbscan_size())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn inner(&self, beta: f64, d: usize, normalize: bool, metric: Metric) -> Vec<TuneConfig> {
        let pooling = PoolingConfig {
            beta,
            normalize,
            normalize_utterances: false,
        };
        let base = GdsConfig {
            pooling,
            reduce_dim: Some(d),
            metric,
            ..GdsConfig::default()
        };
        let mut out = Vec::with_capacity(self.kmeans_size() + self.hdbscan_size());
        for &k in &self.ks {
            for &inverse_distance in &self.inverse_distance {
                for &standardized in &self.standardized {
                    out.push(TuneConfig {
                        gds: GdsConfig {
                            method: ClusterMethod::Kmeans { k, n_init: self.n_init },
                            ..base
                        },
                        proximity: ProximityConfig {
                            inverse_distance,
                            standardized,
                            prob_scaling: ProbScaling::Sum,
                        },
                    });
                }
            }
        }
        for &min_cluster_size in &self.min_cluster_sizes {
            for &soft in &self.soft_aggregation {
                for &prob_scaling in &self.prob_scaling {
                    for &standardized in &self.standardized {
                        out.push(TuneConfig {
                            gds: GdsConfig {
                                method: ClusterMethod::Hdbscan {
                                    min_cluster_size,
                                    min_samples: None,
                                },
                                aggregation: Some(if soft {
                                    AggregationRule::ProbabilityWeighted
                                } else {
                                    AggregationRule::Mean
                                }),
                                ..base
                            },
                            proximity: ProximityConfig {
                                inverse_distance: true,
                                standardized,
                                prob_scaling,
                            },
                        });
                    }
                }
            }
        }
        out
    }

    /// Every configuration, in loop order.
    pub fn configs(&self) -> Vec<TuneConfig> {
        self.outer()
            .into_iter()
            .flat_map(|(b, d, n, m)| self.inner(b, d, n, m))
            .collect()
    }
}

/// Embedded training and validation dialogues.
pub struct TuneData<'a> {
    pub train: &'a [EmbeddingMatrix],
    pub train_acceptability: &'a [f64],
    pub val: &'a [EmbeddingMatrix],
    pub val_acceptability: &'a [f64],
    pub seed: u64,
}

impl TuneData<'_> {
    fn validate(&self) -> Result<()> {
        if self.train.is_empty() || self.val.is_empty() {
            return Err(Error::Argument("tuning needs training and validation dialogues".into()));
        }
        if self.train.len() != self.train_acceptability.len() || self.val.len() != self.val_acceptability.len() {
            return Err(Error::Argument("acceptability count does not match dialogue count".into()));
        }
        Ok(())
    }
}

/// Features shared by every configuration with the same pooling and reduction.
struct Features {
    input_dim: usize,
    reducer: Option<Reducer>,
    train: Vec<Vec<f64>>,
    val_prefixes: Vec<Vec<Vec<f64>>>,
}

fn features(data: &TuneData<'_>, pooling: &PoolingConfig, d: usize) -> Result<Features> {
    let input_dim = data.train[0].dim();
    let reduce_dim = (d < input_dim).then_some(d);
    let reducer = fit_feature_reducer(pooling, reduce_dim, data.train)?;
    let train = data
        .train
        .iter()
        .map(|u| featurize_dialogue(pooling, reducer.as_ref(), u))
        .collect::<Result<_>>()?;
    let val_prefixes = data
        .val
        .iter()
        .map(|u| {
            (1..=u.len())
                .map(|t| featurize_dialogue(pooling, reducer.as_ref(), &EmbeddingMatrix::new(u.rows()[..t].to_vec())?))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(Features {
        input_dim,
        reducer,
        train,
        val_prefixes,
    })
}

fn score(cfg: &TuneConfig, f: &Features, data: &TuneData<'_>) -> Result<f64> {
    let mut gds = cfg.gds;
    if gds.reduce_dim.is_some_and(|d| d >= f.input_dim) {
        gds.reduce_dim = None;
    }
    let model = fit_gds_features(&gds, f.input_dim, f.reducer.clone(), &f.train, data.train_acceptability, data.seed)?;
    if model.is_degenerate() {
        return Err(Error::Validation("no clusters found".into()));
    }
    let slopes: Vec<f64> = f
        .val_prefixes
        .iter()
        .map(|p| trace_from_features(&model, p, &cfg.proximity).map(|t| t.slope))
        .collect::<Result<_>>()?;
    let r = pearson_r(&slopes, data.val_acceptability)?.r;
    Ok(r)
}

/// Scores one configuration; `None` marks a degenerate or failing configuration.
pub fn evaluate_config(cfg: &TuneConfig, data: &TuneData<'_>) -> Result<Option<f64>> {
    data.validate()?;
    let d = cfg.gds.reduce_dim.unwrap_or(data.train[0].dim());
    let f = features(data, &cfg.gds.pooling, d)?;
    Ok(score(cfg, &f, data).ok())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    /// Position in loop order.
    pub index: usize,
    pub config: TuneConfig,
    /// Validation r; `None` for degenerate configurations, which rank last.
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub evaluations: usize,
    /// Best first; ties keep loop order.
    pub ranked: Vec<GridResult>,
}

impl GridReport {
    pub fn best(&self) -> Option<&GridResult> {
        self.ranked.first().filter(|r| r.score.is_some())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,index,method,beta,dim,normalize,metric,k_or_min_size,inverse,standardized,aggregation,scaling,score\n");
        for (rank, r) in self.ranked.iter().enumerate() {
            let g = &r.config.gds;
            let (method, size) = match g.method {
                ClusterMethod::Kmeans { k, .. } => ("kmeans", k),
                ClusterMethod::Hdbscan { min_cluster_size, .. } => ("hdbscan", min_cluster_size),
            };
            let agg = match g.aggregation_rule() {
                AggregationRule::TrimmedMean { .. } => "trimmed",
                AggregationRule::ProbabilityWeighted => "soft",
                AggregationRule::Mean => "mean",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{:?},{},{},{},{},{:?},{}\n",
                rank + 1,
                r.index,
                method,
                g.pooling.beta,
                g.reduce_dim.map_or_else(String::new, |d| d.to_string()),
                g.pooling.normalize,
                g.metric,
                size,
                r.config.proximity.inverse_distance,
                r.config.proximity.standardized,
                agg,
                r.config.proximity.prob_scaling,
                r.score.map_or_else(|| "-inf".to_string(), |s| s.to_string()),
            ));
        }
        out
    }
}

/// Evaluates every configuration. With `parallel`, configurations sharing
/// pooled features fan out across threads; results are still ordered by index.
pub fn grid_search(spec: &GridSpec, data: &TuneData<'_>, parallel: bool) -> Result<GridReport> {
    spec.validate()?;
    data.validate()?;
    let counter = AtomicUsize::new(0);
    let mut results = Vec::with_capacity(spec.len());
    for (b, d, n, m) in spec.outer() {
        let inner = spec.inner(b, d, n, m);
        let base = results.len();
        let pooling = inner[0].gds.pooling;
        let shared = features(data, &pooling, d);
        let run = |(i, cfg): (usize, &TuneConfig)| {
            counter.fetch_add(1, Ordering::Relaxed);
            let outcome = match &shared {
                Ok(f) => score(cfg, f, data),
                Err(e) => Err(Error::Validation(e.to_string())),
            };
            if let Err(e) = &outcome {
                log::warn!("config {} scored -inf: {e}", base + i);
            }
            GridResult {
                index: base + i,
                config: *cfg,
                score: outcome.as_ref().ok().copied(),
                error: outcome.err().map(|e| e.to_string()),
            }
        };
        if parallel {
            results.extend(inner.par_iter().enumerate().map(run).collect::<Vec<_>>());
        } else {
            results.extend(inner.iter().enumerate().map(run));
        }
    }
    let key = |r: &GridResult| r.score.unwrap_or(f64::NEG_INFINITY);
    results.sort_by(|a, b| key(b).total_cmp(&key(a)).then(a.index.cmp(&b.index)));
    Ok(GridReport {
        evaluations: counter.into_inner(),
        ranked: results,
    })
}

/// Refits a configuration on the full training set.
pub fn retrain(cfg: &TuneConfig, train: &[EmbeddingMatrix], acceptability: &[f64], seed: u64) -> Result<GdsModel> {
    let mut gds = cfg.gds;
    let input_dim = train.first().map_or(0, EmbeddingMatrix::dim);
    if gds.reduce_dim.is_some_and(|d| d >= input_dim) {
        gds.reduce_dim = None;
    }
    fit_gds(&gds, train, acceptability, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::StubEmbedder;
    use crate::embedding::{embed_utterances, EmbeddingProvider};
    use crate::synthetic::{generate_corpus, SyntheticSpec, PRIMARY_ATTRIBUTE};

    fn singleton() -> GridSpec {
        GridSpec {
            betas: vec![0.3],
            dims: vec![768],
            normalize: vec![true],
            metrics: vec![Metric::Euclidean],
            ks: vec![5],
            inverse_distance: vec![true],
            standardized: vec![false],
            min_cluster_sizes: vec![],
            soft_aggregation: vec![true],
            prob_scaling: vec![ProbScaling::Sum],
            n_init: 3,
        }
    }

    #[test]
    fn default_grid_matches_the_published_search_space() {
        let g = GridSpec::default();
        assert_eq!(g.betas.len(), 21);
        assert!((g.betas[3] - 0.3).abs() < 1e-15 && g.betas[20] == 2.0);
        assert_eq!(g.dims, vec![2, 16, 32, 64, 128, 768]);
        assert_eq!(g.ks.first(), Some(&2));
        assert_eq!(g.ks.last(), Some(&30));
        assert_eq!(g.min_cluster_sizes, vec![10, 20, 30, 40, 50, 60, 70, 80, 90, 100]);
        // 21·6·2·2 outer × (29·2·2 + 10·2·3·2) inner
        assert_eq!(g.len(), 504 * (116 + 120));
        let from_json: GridSpec = serde_json::from_str("{}").unwrap();
        assert_eq!(from_json, g);
    }

    #[test]
    fn enumeration_follows_loop_order() {
        let g = GridSpec {
            betas: vec![0.0, 1.0],
            ks: vec![2, 3],
            min_cluster_sizes: vec![10],
            soft_aggregation: vec![true],
            prob_scaling: vec![ProbScaling::Sum, ProbScaling::Softmax],
            inverse_distance: vec![true],
            standardized: vec![false],
            dims: vec![4],
            normalize: vec![true],
            metrics: vec![Metric::Euclidean],
            n_init: 1,
        };
        let c = g.configs();
        assert_eq!(c.len(), g.len());
        assert_eq!(c.len(), 2 * (2 + 2));
        assert!(matches!(c[1].gds.method, ClusterMethod::Kmeans { k: 3, .. }));
        assert!(c[2].gds.method.is_hdbscan());
        assert_eq!(c[3].proximity.prob_scaling, ProbScaling::Softmax);
        assert_eq!(c[4].gds.pooling.beta, 1.0);
    }

    #[test]
    fn empty_axes_are_rejected() {
        let mut g = singleton();
        g.betas.clear();
        assert!(g.validate().is_err());
        let mut g = singleton();
        g.ks.clear();
        assert!(g.validate().is_err());
    }

    #[test]
    fn small_search_runs_and_ranks() {
        let spec = SyntheticSpec { dialogues: 60, ..Default::default() };
        let s = generate_corpus(&spec, 2).unwrap();
        let emb = StubEmbedder::new(64);
        let u: Vec<EmbeddingMatrix> = s.corpus.dialogues.iter().map(|d| embed_utterances(d, &emb).unwrap()).collect();
        assert_eq!(emb.dim(), 64);
        let acc = s.corpus.attribute_column(PRIMARY_ATTRIBUTE).unwrap();
        let data = TuneData {
            train: &u[..45],
            train_acceptability: &acc[..45],
            val: &u[45..],
            val_acceptability: &acc[45..],
            seed: 1,
        };
        let mut g = singleton();
        g.ks = vec![1, 5, 100];
        g.min_cluster_sizes = vec![10];
        g.prob_scaling = vec![ProbScaling::Softmax];
        let seq = grid_search(&g, &data, false).unwrap();
        assert_eq!(seq.evaluations, 4);
        // k = 100 exceeds the training set and k = 1 has a constant slope
        let last = &seq.ranked[2..];
        assert!(last.iter().all(|r| r.score.is_none()));
        assert!(seq.best().unwrap().score.unwrap() > 0.5);
        let par = grid_search(&g, &data, true).unwrap();
        assert_eq!(par, seq);
        let best = seq.best().unwrap();
        assert_eq!(evaluate_config(&best.config, &data).unwrap(), best.score);
        assert!(seq.to_csv().lines().count() == 5);
    }
}
