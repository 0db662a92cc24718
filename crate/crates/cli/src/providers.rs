//! Provider selection: HTTP when a URL is configured, deterministic stubs otherwise.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use dialprog_core::embedding::{CachedProvider, HttpEmbedder, StubEmbedder};
use dialprog_core::http::HttpClient;
use dialprog_core::EmbeddingProvider;
use serde::Serialize;

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProviderArgs {
    /// Base URL of the embedding/generation/sentiment provider.
    #[arg(long, env = "DP_PROVIDER_URL")]
    pub provider_url: Option<String>,
    /// Dimension of the offline hashed bag-of-words embedder used without a provider URL.
    #[arg(long, default_value_t = 128)]
    pub stub_dim: usize,
    /// Embedding cache (JSONL); read if present and rewritten after the command.
    #[arg(long)]
    #[serde(skip)]
    pub cache: Option<PathBuf>,
    /// Maximum concurrent embedding requests.
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
}

pub enum Embedder {
    Stub(StubEmbedder),
    Http(HttpEmbedder),
}

impl EmbeddingProvider for Embedder {
    fn id(&self) -> String {
        match self {
            Embedder::Stub(e) => e.id(),
            Embedder::Http(e) => e.id(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Embedder::Stub(e) => e.dim(),
            Embedder::Http(e) => e.dim(),
        }
    }

    fn embed(&self, texts: &[String]) -> dialprog_core::Result<Vec<Vec<f64>>> {
        match self {
            Embedder::Stub(e) => e.embed(texts),
            Embedder::Http(e) => e.embed(texts),
        }
    }
}

pub struct Embedding {
    pub provider: CachedProvider<Embedder>,
    cache: Option<PathBuf>,
}

impl Embedding {
    pub fn open(args: &ProviderArgs) -> Result<Self> {
        let inner = match &args.provider_url {
            Some(url) => Embedder::Http(HttpEmbedder::connect(HttpClient::new(url.clone()))?.max_in_flight(args.max_in_flight)),
            None => {
                if args.stub_dim == 0 {
                    return Err(dialprog_core::Error::Argument("--stub-dim must be positive".into()).into());
                }
                log::info!("no provider URL; using the {}-dim stub embedder", args.stub_dim);
                Embedder::Stub(StubEmbedder::new(args.stub_dim))
            }
        };
        let provider = CachedProvider::new(inner);
        if let Some(path) = args.cache.as_ref().filter(|p| p.exists()) {
            let n = provider.load(path)?;
            log::info!("loaded {n} cached embeddings from {}", path.display());
        }
        Ok(Self {
            provider,
            cache: args.cache.clone(),
        })
    }

    pub fn save(&self) -> Result<()> {
        if let Some(path) = &self.cache {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            self.provider.save(path)?;
        }
        Ok(())
    }
}

pub fn client(url: &str) -> HttpClient {
    HttpClient::new(url.to_string())
}
