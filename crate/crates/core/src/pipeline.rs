//! End-to-end helpers: split, standardise, score acceptability, embed, fit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acceptability::{acceptability, fit_profile, AcceptabilityProfile};
use crate::corpus::{apply_standardizer, fit_standardizer, split_train_test, Corpus, Standardizer};
use crate::embedding::{embed_utterances, EmbeddingMatrix, EmbeddingProvider};
use crate::error::Result;
use crate::gds::{fit_gds, GdsConfig, GdsModel};
use crate::progression::{progression_curve_from_embeddings, ProgressionTrace, ProximityConfig};

/// A train/test split with standardised attributes and acceptability scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prepared {
    pub train: Corpus,
    pub test: Corpus,
    pub standardizer: Standardizer,
    pub profile: AcceptabilityProfile,
    pub train_acceptability: Vec<f64>,
    pub test_acceptability: Vec<f64>,
}

/// Splits, standardises with train statistics and fits the acceptability
/// profile on the training side only.
pub fn prepare(corpus: &Corpus, primary: &str, test_fraction: f64, seed: u64) -> Result<Prepared> {
    let (train_raw, test_raw) = split_train_test(corpus, test_fraction, seed)?;
    let standardizer = fit_standardizer(&train_raw)?;
    let train = apply_standardizer(&standardizer, &train_raw);
    let test = apply_standardizer(&standardizer, &test_raw);
    let profile = fit_profile(&train, primary, &format!("train split, seed {seed}"))?;
    let score = |c: &Corpus| -> Result<Vec<f64>> {
        c.dialogues.iter().map(|d| acceptability(&d.attributes, &profile)).collect()
    };
    Ok(Prepared {
        train_acceptability: score(&train)?,
        test_acceptability: score(&test)?,
        train,
        test,
        standardizer,
        profile,
    })
}

/// Embeds every dialogue's utterances; requests fan out across dialogues but
/// results keep corpus order.
pub fn embed_corpus(corpus: &Corpus, provider: &dyn EmbeddingProvider) -> Result<Vec<EmbeddingMatrix>> {
    corpus.dialogues.par_iter().map(|d| embed_utterances(d, provider)).collect()
}

pub fn train_model(
    config: &GdsConfig,
    train: &[EmbeddingMatrix],
    acceptability: &[f64],
    seed: u64,
) -> Result<GdsModel> {
    fit_gds(config, train, acceptability, seed)
}

pub fn curves(model: &GdsModel, dialogues: &[EmbeddingMatrix], proximity: &ProximityConfig) -> Result<Vec<ProgressionTrace>> {
    dialogues
        .par_iter()
        .map(|u| progression_curve_from_embeddings(model, u, proximity))
        .collect()
}
