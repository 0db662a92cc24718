//! Response generators: the remote model client and deterministic test doubles.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Speaker, Utterance};
use crate::error::{Error, Result};
use crate::http::HttpClient;
use crate::seed::derive_seed;

/// Sampling parameters sent with every request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub num_beams: usize,
    pub top_k: usize,
    pub top_p: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub history: &'a [Utterance],
    pub speaker: Speaker,
    pub params: SamplingParams,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedUtterance {
    pub text: String,
    /// Token count reported by the generator's tokenizer, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_count: Option<usize>,
}

pub trait GeneratorProvider: Send + Sync {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<GeneratedUtterance>;
}

#[derive(Serialize)]
struct GenerateBody<'a> {
    history: &'a [Utterance],
    speaker: Speaker,
    params: SamplingParams,
    seed: u64,
}

/// Client for `POST /generate`.
pub struct HttpGenerator {
    client: HttpClient,
}

impl HttpGenerator {
    pub fn new(client: HttpClient) -> Self {
        Self { client }
    }
}

impl GeneratorProvider for HttpGenerator {
    fn generate(&self, r: &GenerationRequest<'_>) -> Result<GeneratedUtterance> {
        let out: GeneratedUtterance = self.client.post(
            "/generate",
            &GenerateBody {
                history: r.history,
                speaker: r.speaker,
                params: r.params,
                seed: r.seed,
            },
        )?;
        if out.text.trim().is_empty() {
            return Err(Error::Provider("/generate returned an empty utterance".into()));
        }
        Ok(out)
    }
}

/// One scripted storyline: the lines each role speaks while on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedBranch {
    pub er: Vec<String>,
    pub ee: Vec<String>,
}

impl ScriptedBranch {
    fn lines(&self, speaker: Speaker) -> &[String] {
        match speaker {
            Speaker::ER => &self.er,
            Speaker::EE => &self.ee,
        }
    }

    fn contains(&self, text: &str) -> bool {
        self.er.iter().chain(&self.ee).any(|l| l == text)
    }
}

/// Deterministic playback tree.
///
/// With no branch line in the history, the branch is `seed mod branches`.
/// Once a branch line appears, the conversation stays on that branch and the
/// line is `(lines already spoken by this role on the branch + seed) mod len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedGenerator {
    pub branches: Vec<ScriptedBranch>,
}

impl ScriptedGenerator {
    pub fn new(branches: Vec<ScriptedBranch>) -> Result<Self> {
        if branches.is_empty() || branches.iter().any(|b| b.er.is_empty() || b.ee.is_empty()) {
            return Err(Error::Argument("every scripted branch needs lines for both roles".into()));
        }
        Ok(Self { branches })
    }

    /// Index of the branch the history is on, if any.
    pub fn branch_of(&self, history: &[Utterance]) -> Option<usize> {
        history
            .iter()
            .rev()
            .find_map(|u| self.branches.iter().position(|b| b.contains(&u.text)))
    }
}

impl GeneratorProvider for ScriptedGenerator {
    fn generate(&self, r: &GenerationRequest<'_>) -> Result<GeneratedUtterance> {
        let text = match self.branch_of(r.history) {
            Some(b) => {
                let branch = &self.branches[b];
                let lines = branch.lines(r.speaker);
                let spoken = r
                    .history
                    .iter()
                    .filter(|u| u.speaker == r.speaker && branch.contains(&u.text))
                    .count() as u64;
                lines[(spoken.wrapping_add(r.seed) % lines.len() as u64) as usize].clone()
            }
            None => {
                let b = (r.seed % self.branches.len() as u64) as usize;
                self.branches[b].lines(r.speaker)[0].clone()
            }
        };
        Ok(GeneratedUtterance { text, token_count: None })
    }
}

/// Offline stand-in: replays a corpus utterance of the requested role,
/// picked by hashing the seed.
pub struct CorpusSampler {
    er: Vec<String>,
    ee: Vec<String>,
}

impl CorpusSampler {
    pub fn new(corpus: &Corpus) -> Result<Self> {
        let pick = |s: Speaker| -> Vec<String> {
            corpus
                .dialogues
                .iter()
                .flat_map(|d| d.utterances.iter())
                .filter(|u| u.speaker == s)
                .map(|u| u.text.clone())
                .collect()
        };
        let (er, ee) = (pick(Speaker::ER), pick(Speaker::EE));
        if er.is_empty() || ee.is_empty() {
            return Err(Error::Argument("corpus needs utterances from both roles".into()));
        }
        Ok(Self { er, ee })
    }
}

impl GeneratorProvider for CorpusSampler {
    fn generate(&self, r: &GenerationRequest<'_>) -> Result<GeneratedUtterance> {
        let pool = match r.speaker {
            Speaker::ER => &self.er,
            Speaker::EE => &self.ee,
        };
        let i = derive_seed(r.seed, "corpus-sampler") % pool.len() as u64;
        Ok(GeneratedUtterance {
            text: pool[i as usize].clone(),
            token_count: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub history_len: usize,
    pub speaker: Speaker,
    pub temperature: f64,
    pub seed: u64,
}

/// Wraps a generator and logs every call.
pub struct Recording<G> {
    inner: G,
    log: Mutex<Vec<GenerationRecord>>,
}

impl<G> Recording<G> {
    pub fn new(inner: G) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> usize {
        self.log.lock().expect("log lock").len()
    }

    pub fn records(&self) -> Vec<GenerationRecord> {
        self.log.lock().expect("log lock").clone()
    }

    pub fn reset(&self) {
        self.log.lock().expect("log lock").clear();
    }
}

impl<G: GeneratorProvider> GeneratorProvider for Recording<G> {
    fn generate(&self, r: &GenerationRequest<'_>) -> Result<GeneratedUtterance> {
        self.log.lock().expect("log lock").push(GenerationRecord {
            history_len: r.history.len(),
            speaker: r.speaker,
            temperature: r.params.temperature,
            seed: r.seed,
        });
        self.inner.generate(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn branch(tag: &str) -> ScriptedBranch {
        ScriptedBranch {
            er: (0..3).map(|i| format!("{tag} er {i}")).collect(),
            ee: (0..3).map(|i| format!("{tag} ee {i}")).collect(),
        }
    }

    fn req<'a>(history: &'a [Utterance], speaker: Speaker, seed: u64) -> GenerationRequest<'a> {
        GenerationRequest {
            history,
            speaker,
            params: SamplingParams { num_beams: 6, top_k: 50, top_p: 0.95, temperature: 1.5 },
            seed,
        }
    }

    #[test]
    fn scripted_branching() {
        let g = ScriptedGenerator::new(vec![branch("good"), branch("bad")]).unwrap();
        let ctx = vec![Utterance::new(Speaker::ER, "hello"), Utterance::new(Speaker::EE, "hi")];
        assert_eq!(g.generate(&req(&ctx, Speaker::ER, 10)).unwrap().text, "good er 0");
        assert_eq!(g.generate(&req(&ctx, Speaker::ER, 11)).unwrap().text, "bad er 0");

        let mut h = ctx.clone();
        h.push(Utterance::new(Speaker::ER, "bad er 0"));
        assert_eq!(g.branch_of(&h), Some(1));
        assert_eq!(g.generate(&req(&h, Speaker::EE, 0)).unwrap().text, "bad ee 0");
        assert_eq!(g.generate(&req(&h, Speaker::ER, 0)).unwrap().text, "bad er 1");
        assert_eq!(g.generate(&req(&h, Speaker::ER, 1)).unwrap().text, "bad er 2");
        assert!(ScriptedGenerator::new(vec![]).is_err());
    }

    #[test]
    fn recording_counts_calls() {
        let g = Recording::new(ScriptedGenerator::new(vec![branch("a")]).unwrap());
        let ctx = vec![Utterance::new(Speaker::ER, "x")];
        for s in 0..4 {
            g.generate(&req(&ctx, Speaker::EE, s)).unwrap();
        }
        assert_eq!(g.calls(), 4);
        assert_eq!(g.records()[2].seed, 2);
        g.reset();
        assert_eq!(g.calls(), 0);
    }
}
