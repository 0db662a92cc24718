//! Dialogue progression: a global dialogue state space built from clustered
//! dialogue embeddings, a progression function over it, and a rollout planner
//! that uses that function to pick responses.

pub mod acceptability;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod gds;
pub mod http;
pub mod eval;
pub mod pipeline;
pub mod planner;
pub mod plot;
pub mod progression;
pub mod seed;
pub mod stats;
pub mod synthetic;
pub mod tune;

pub use acceptability::AcceptabilityProfile;
pub use corpus::{Attributes, Corpus, Dialogue, Speaker, Utterance};
pub use embedding::{EmbeddingMatrix, EmbeddingProvider, PoolingConfig};
pub use error::{Error, Result};
pub use gds::{ClusterMethod, GdsConfig, GdsModel, Metric};
pub use planner::{GenerationParams, GeneratorProvider, RolloutConfig};
pub use progression::{ProbScaling, ProgressionScorer, ProgressionTrace, ProximityConfig};
pub use seed::SeedStream;
