//! Planted-structure corpora and scripted generator trees for offline runs.
//!
//! Every dialogue follows one archetype. Early utterances are mostly generic
//! small talk; later ones draw increasingly on the archetype's own
//! vocabulary, so dialogue embeddings drift toward the archetype's region.
//! The outcome attribute is a noisy function of the archetype.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dialogue, Speaker, Utterance};
use crate::error::{Error, Result};
use crate::planner::{ScriptedBranch, ScriptedGenerator};
use crate::seed::SeedStream;

pub const PRIMARY_ATTRIBUTE: &str = "donation";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dialogues: usize,
    pub archetypes: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub tokens_per_utterance: usize,
    pub vocab_per_archetype: usize,
    pub generic_vocab: usize,
    /// Standard deviation of the outcome noise.
    pub noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            dialogues: 300,
            archetypes: 5,
            min_len: 10,
            max_len: 14,
            tokens_per_utterance: 8,
            vocab_per_archetype: 12,
            generic_vocab: 40,
            noise: 0.2,
        }
    }
}

impl SyntheticSpec {
    /// Outcome level of archetype `c`, evenly spaced over [0, 2].
    pub fn level(&self, c: usize) -> f64 {
        if self.archetypes == 1 {
            1.0
        } else {
            2.0 * c as f64 / (self.archetypes - 1) as f64
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dialogues == 0 || self.archetypes == 0 || self.tokens_per_utterance == 0 {
            return Err(Error::Argument("synthetic corpus sizes must be positive".into()));
        }
        if self.min_len < 2 || self.min_len > self.max_len {
            return Err(Error::Argument(format!(
                "dialogue length range {}..={} is invalid",
                self.min_len, self.max_len
            )));
        }
        if self.vocab_per_archetype == 0 || self.generic_vocab == 0 || !(self.noise >= 0.0) {
            return Err(Error::Argument("vocabularies must be non-empty and noise non-negative".into()));
        }
        Ok(())
    }
}

fn archetype_word(c: usize, j: usize) -> String {
    format!("topic{c}word{j}")
}

fn generic_word(j: usize) -> String {
    format!("chat{j}")
}

fn utterance_text(rng: &mut impl Rng, spec: &SyntheticSpec, c: usize, specific: f64) -> String {
    (0..spec.tokens_per_utterance)
        .map(|_| {
            if rng.gen::<f64>() < specific {
                archetype_word(c, rng.gen_range(0..spec.vocab_per_archetype))
            } else {
                generic_word(rng.gen_range(0..spec.generic_vocab))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Archetype of each dialogue, in corpus order.
    pub archetypes: Vec<usize>,
}

/// Generates a corpus whose dialogues cycle through the archetypes in a
/// shuffled order. Attributes: the primary outcome, two sentiment-like
/// attributes correlated with it, and one unrelated trait.
pub fn generate_corpus(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let seeds = SeedStream::new(seed);
    let mut order: Vec<usize> = (0..spec.dialogues).map(|i| i % spec.archetypes).collect();
    order.shuffle(&mut seeds.rng("archetype-order"));
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::Argument(e.to_string()))?;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let mut dialogues = Vec::with_capacity(spec.dialogues);
    for (i, &c) in order.iter().enumerate() {
        let mut rng = seeds.rng(&format!("dialogue-{i}"));
        let len = rng.gen_range(spec.min_len..=spec.max_len);
        let utterances = (0..len)
            .map(|t| {
                let specific = 0.05 + 0.85 * t as f64 / (len - 1) as f64;
                let speaker = if t % 2 == 0 { Speaker::ER } else { Speaker::EE };
                Utterance::new(speaker, utterance_text(&mut rng, spec, c, specific))
            })
            .collect();
        let level = spec.level(c);
        let mut attributes = BTreeMap::new();
        attributes.insert(PRIMARY_ATTRIBUTE.to_string(), level + noise.sample(&mut rng));
        attributes.insert("er_sentiment".to_string(), 0.5 * level + noise.sample(&mut rng));
        attributes.insert("ee_sentiment".to_string(), 0.4 * level + noise.sample(&mut rng));
        attributes.insert("agreeableness".to_string(), unit.sample(&mut rng));
        dialogues.push(Dialogue {
            id: format!("syn-{i:04}"),
            utterances,
            attributes,
        });
    }
    Ok(SyntheticCorpus {
        corpus: Corpus::new(dialogues)?,
        archetypes: order,
    })
}

/// Two-branch scripted tree: branch 0 speaks the highest-outcome archetype's
/// vocabulary, branch 1 the lowest.
pub fn scripted_tree(spec: &SyntheticSpec, seed: u64) -> Result<ScriptedGenerator> {
    spec.validate()?;
    let seeds = SeedStream::new(seed);
    let branch = |c: usize, label: &str| {
        let mut rng = seeds.rng(label);
        let lines = |rng: &mut rand_chacha::ChaCha8Rng, suffix: &str| -> Vec<String> {
            (0..3)
                .map(|_| format!("{}{suffix}", utterance_text(rng, spec, c, 1.0)))
                .collect()
        };
        let er = lines(&mut rng, "");
        let ee = lines(&mut rng, if c + 1 == spec.archetypes { " i will donate" } else { "" });
        ScriptedBranch { er, ee }
    };
    ScriptedGenerator::new(vec![branch(spec.archetypes - 1, "good-branch"), branch(0, "bad-branch")])
}

/// Two 20-point Gaussian blobs (σ = 0.3) centred 20 apart, followed by three
/// far-off stragglers at indices 40..43.
pub fn two_blobs_with_stragglers(seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.3).expect("valid normal");
    let mut x = Vec::new();
    for center in [[0.0, 0.0], [20.0, 0.0]] {
        for _ in 0..20 {
            x.push(vec![center[0] + noise.sample(&mut rng), center[1] + noise.sample(&mut rng)]);
        }
    }
    x.extend([vec![10.0, 40.0], vec![-40.0, -30.0], vec![60.0, 30.0]]);
    x
}

/// Points around `centers` with isotropic noise `sigma`; returns points and planted labels.
pub fn gaussian_blobs(centers: &[Vec<f64>], per_blob: usize, sigma: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("valid normal");
    let mut x = Vec::with_capacity(centers.len() * per_blob);
    let mut labels = Vec::with_capacity(centers.len() * per_blob);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            x.push(center.iter().map(|v| v + noise.sample(&mut rng)).collect());
            labels.push(c);
        }
    }
    (x, labels)
}
