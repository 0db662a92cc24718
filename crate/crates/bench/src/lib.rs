//! Shared fixtures for the benchmarks.

use dialprog_core::embedding::StubEmbedder;
use dialprog_core::pipeline::embed_corpus;
use dialprog_core::synthetic::{generate_corpus, SyntheticSpec, PRIMARY_ATTRIBUTE};
use dialprog_core::EmbeddingMatrix;

/// Stub-embedded synthetic dialogues with their outcome values.
pub struct Fixture {
    pub dialogues: Vec<EmbeddingMatrix>,
    pub outcomes: Vec<f64>,
}

pub fn fixture(dialogues: usize, dim: usize, seed: u64) -> Fixture {
    let spec = SyntheticSpec {
        dialogues,
        ..SyntheticSpec::default()
    };
    let corpus = generate_corpus(&spec, seed).expect("valid synthetic spec").corpus;
    Fixture {
        dialogues: embed_corpus(&corpus, &StubEmbedder::new(dim)).expect("stub embedding cannot fail"),
        outcomes: corpus.attribute_column(PRIMARY_ATTRIBUTE).expect("synthetic outcome present"),
    }
}
