use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::http::HttpClient;

/// Maps texts to fixed-dimension vectors. The same text must map to the same
/// vector for the lifetime of a provider.
pub trait EmbeddingProvider: Send + Sync {
    /// Stable identifier, used to key caches.
    fn id(&self) -> String;

    fn dim(&self) -> usize;

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>>;
}

/// Hashed bag-of-words embedder: lowercase alphanumeric tokens are counted
/// into `dim` buckets and the count vector is L2-normalised.
#[derive(Debug, Clone)]
pub struct StubEmbedder {
    dim: usize,
}

impl StubEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "stub embedder dimension must be positive");
        Self { dim }
    }

    fn bucket(&self, token: &str) -> usize {
        let digest = Sha256::digest(token.as_bytes());
        let h = u64::from_le_bytes(digest[..8].try_into().expect("32-byte digest"));
        (h % self.dim as u64) as usize
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for token in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            v[self.bucket(&token.to_lowercase())] += 1.0;
        }
        let norm = super::l2_norm(&v);
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl EmbeddingProvider for StubEmbedder {
    fn id(&self) -> String {
        format!("stub-bow-{}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    vector: Vec<f64>,
}

/// Memoising wrapper keyed by `(provider id, sha256(text))`, persisted as JSONL.
pub struct CachedProvider<P> {
    inner: P,
    entries: RwLock<HashMap<String, Vec<f64>>>,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn key(&self, text: &str) -> String {
        format!("{}:{}", self.inner.id(), hex::encode(Sha256::digest(text.as_bytes())))
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Merges entries from a cache file. Lines from other providers are kept
    /// but never hit.
    pub fn load(&self, path: impl AsRef<Path>) -> Result<usize> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = self.entries.write().expect("cache lock");
        let mut n = 0;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: CacheLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.insert(entry.key, entry.vector);
            n += 1;
        }
        Ok(n)
    }

    /// Writes all entries sorted by key.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let entries = self.entries.read().expect("cache lock");
        let sorted: BTreeMap<&String, &Vec<f64>> = entries.iter().collect();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (key, vector) in sorted {
            serde_json::to_writer(
                &mut w,
                &CacheLine {
                    key: key.clone(),
                    vector: vector.clone(),
                },
            )?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let keys: Vec<String> = texts.iter().map(|t| self.key(t)).collect();
        let mut out: Vec<Option<Vec<f64>>> = {
            let entries = self.entries.read().expect("cache lock");
            keys.iter().map(|k| entries.get(k).cloned()).collect()
        };
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        if !missing.is_empty() {
            let request: Vec<String> = missing.iter().map(|&i| texts[i].clone()).collect();
            let fresh = self.inner.embed(&request)?;
            let mut entries = self.entries.write().expect("cache lock");
            for (&i, v) in missing.iter().zip(fresh) {
                entries.insert(keys[i].clone(), v.clone());
                out[i] = Some(v);
            }
        }
        Ok(out.into_iter().map(|v| v.expect("filled above")).collect())
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
    dim: usize,
}

/// Client for `POST /embed`. Requests are split into batches and at most
/// `max_in_flight` batches are outstanding at once.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    client: HttpClient,
    dim: usize,
    batch_size: usize,
    max_in_flight: usize,
}

impl HttpEmbedder {
    /// Probes the endpoint once to learn the embedding dimension.
    pub fn connect(client: HttpClient) -> Result<Self> {
        let probe: EmbedResponse = client.post("/embed", &EmbedRequest { texts: &["dimension probe".to_string()] })?;
        Ok(Self::with_dim(client, probe.dim))
    }

    pub fn with_dim(client: HttpClient, dim: usize) -> Self {
        Self {
            client,
            dim,
            batch_size: 32,
            max_in_flight: 4,
        }
    }

    pub fn batch_size(mut self, n: usize) -> Self {
        self.batch_size = n.max(1);
        self
    }

    pub fn max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = n.max(1);
        self
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let resp: EmbedResponse = self.client.post("/embed", &EmbedRequest { texts })?;
        if resp.vectors.len() != texts.len() {
            return Err(Error::Provider(format!(
                "/embed returned {} vectors for {} texts",
                resp.vectors.len(),
                texts.len()
            )));
        }
        if resp.dim != self.dim || resp.vectors.iter().any(|v| v.len() != self.dim) {
            return Err(Error::Provider(format!(
                "/embed returned dimension {}, expected {}",
                resp.dim, self.dim
            )));
        }
        if resp.vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Provider("/embed returned non-finite values".into()));
        }
        Ok(resp.vectors)
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn id(&self) -> String {
        format!("http:{}", self.client.base_url())
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let batches: Vec<&[String]> = texts.chunks(self.batch_size).collect();
        let mut out = Vec::with_capacity(texts.len());
        for wave in batches.chunks(self.max_in_flight) {
            let results: Vec<Result<Vec<Vec<f64>>>> = std::thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|batch| s.spawn(move || self.embed_batch(batch)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("embedding worker panicked"))
                    .collect()
            });
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }
}
