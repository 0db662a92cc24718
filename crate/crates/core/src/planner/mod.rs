//! Rollout-based response selection and the self-play harness.
//!
//! For each of `c` candidate responses the planner simulates `s` continuations
//! of `n` utterances (both roles), scores the end of every continuation with a
//! progression function, and picks the candidate with the best mean score.

mod generator;
pub mod selfplay;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use generator::{
    CorpusSampler, GeneratedUtterance, GenerationRecord, GenerationRequest, GeneratorProvider, HttpGenerator,
    Recording, SamplingParams, ScriptedBranch, ScriptedGenerator,
};
pub use selfplay::{self_play, SelfPlayOptions, SelfPlayReport, SelfPlaySummary, Transcript};

use crate::corpus::{Speaker, Utterance};
use crate::error::{Error, Result};
use crate::progression::ProgressionScorer;
use crate::seed::derive_seed;

/// Generation settings with a temperature that rises with history length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub num_beams: usize,
    pub top_k: usize,
    pub top_p: f64,
    pub temperature_base: f64,
    pub temperature_per_token: f64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            num_beams: 6,
            top_k: 50,
            top_p: 0.95,
            temperature_base: 1.5,
            temperature_per_token: 0.002,
        }
    }
}

impl GenerationParams {
    pub fn temperature(&self, history_tokens: usize) -> f64 {
        self.temperature_base + self.temperature_per_token * history_tokens as f64
    }

    pub fn sampling(&self, history_tokens: usize) -> SamplingParams {
        SamplingParams {
            num_beams: self.num_beams,
            top_k: self.top_k,
            top_p: self.top_p,
            temperature: self.temperature(history_tokens),
        }
    }
}

/// `candidates x rollouts x utterances`, e.g. `2x2x3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RolloutConfig {
    pub candidates: usize,
    pub rollouts: usize,
    pub utterances: usize,
}

impl RolloutConfig {
    pub fn new(candidates: usize, rollouts: usize, utterances: usize) -> Result<Self> {
        if candidates == 0 || rollouts == 0 || utterances == 0 {
            return Err(Error::Argument(format!(
                "rollout config {candidates}x{rollouts}x{utterances} must be positive"
            )));
        }
        Ok(Self {
            candidates,
            rollouts,
            utterances,
        })
    }

    /// Generator calls for one planned turn: each candidate plus its rollout utterances.
    pub fn calls_per_turn(&self) -> usize {
        self.candidates * (1 + self.rollouts * self.utterances)
    }
}

impl fmt::Display for RolloutConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.candidates, self.rollouts, self.utterances)
    }
}

impl FromStr for RolloutConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('x').collect();
        let nums: Option<Vec<usize>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
        match nums.as_deref() {
            Some([c, r, n]) => RolloutConfig::new(*c, *r, *n),
            _ => Err(Error::Argument(format!("expected CxSxN rollout mode, got {s:?}"))),
        }
    }
}

/// Parses `none` as no rollouts, anything else as a [`RolloutConfig`].
pub fn parse_mode(s: &str) -> Result<Option<RolloutConfig>> {
    if s.eq_ignore_ascii_case("none") || s.eq_ignore_ascii_case("no-ro") {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

/// Dialogue history with per-utterance token counts for the temperature schedule.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub utterances: Vec<Utterance>,
    token_counts: Vec<usize>,
}

impl History {
    pub fn new(utterances: Vec<Utterance>) -> Self {
        let token_counts = utterances.iter().map(Utterance::token_count).collect();
        Self {
            utterances,
            token_counts,
        }
    }

    pub fn tokens(&self) -> usize {
        self.token_counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn next_speaker(&self) -> Speaker {
        self.utterances.last().map_or(Speaker::ER, |u| u.speaker.other())
    }

    /// Appends a generated utterance, preferring the generator's own token count.
    pub fn push(&mut self, speaker: Speaker, g: GeneratedUtterance) {
        let n = g.token_count.unwrap_or_else(|| g.text.split_whitespace().count());
        self.utterances.push(Utterance::new(speaker, g.text));
        self.token_counts.push(n);
    }

    pub fn generate(
        &self,
        gen: &dyn GeneratorProvider,
        speaker: Speaker,
        params: &GenerationParams,
        seed: u64,
    ) -> Result<GeneratedUtterance> {
        gen.generate(&GenerationRequest {
            history: &self.utterances,
            speaker,
            params: params.sampling(self.tokens()),
            seed,
        })
    }
}

/// Simulates `rollouts` continuations after `candidate`. Each continuation holds
/// the candidate followed by `utterances` generated lines alternating roles.
pub fn rollout(
    history: &History,
    candidate: &GeneratedUtterance,
    speaker: Speaker,
    rollouts: usize,
    utterances: usize,
    gen: &dyn GeneratorProvider,
    params: &GenerationParams,
    seed: u64,
) -> Result<Vec<History>> {
    if rollouts == 0 || utterances == 0 {
        return Err(Error::Argument("rollouts and utterances per rollout must be at least 1".into()));
    }
    (0..rollouts)
        .map(|r| {
            let mut h = history.clone();
            h.push(speaker, candidate.clone());
            for j in 0..utterances {
                let next = h.next_speaker();
                let g = h
                    .generate(gen, next, params, derive_seed(seed, &format!("rollout-{r}-utt-{j}")))
                    .map_err(|e| Error::Provider(format!("rollout {r}: {e}")))?;
                h.push(next, g);
            }
            Ok(h)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub text: String,
    pub rollout_scores: Vec<f64>,
    /// Mean rollout score; `None` when generation or scoring failed.
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub chosen: usize,
    pub candidates: Vec<CandidateScore>,
    #[serde(skip)]
    pub(crate) chosen_utterance: Option<GeneratedUtterance>,
}

impl Selection {
    pub fn chosen_text(&self) -> &str {
        &self.candidates[self.chosen].text
    }
}

const DEDUP_RETRIES: u64 = 3;

/// Generates `c` distinct candidates (candidate `i` uses seed `seed + i`;
/// duplicates are re-requested up to three times with fresh seeds).
fn generate_candidates(
    history: &History,
    speaker: Speaker,
    c: usize,
    gen: &dyn GeneratorProvider,
    params: &GenerationParams,
    seed: u64,
) -> Vec<Result<GeneratedUtterance>> {
    let mut out: Vec<Result<GeneratedUtterance>> = Vec::with_capacity(c);
    let mut extra = 0u64;
    for i in 0..c {
        let mut g = history.generate(gen, speaker, params, seed.wrapping_add(i as u64));
        let mut tries = 0;
        while tries < DEDUP_RETRIES {
            let dup = matches!(&g, Ok(cand) if out.iter().flatten().any(|o| o.text == cand.text));
            if !dup {
                break;
            }
            g = history.generate(gen, speaker, params, seed.wrapping_add(c as u64 + extra));
            extra += 1;
            tries += 1;
        }
        out.push(g.map_err(|e| Error::Provider(format!("candidate {i}: {e}"))));
    }
    out
}

/// Picks the candidate whose rollouts end with the highest mean progression.
/// Ties go to the lowest candidate index. Candidates are evaluated in parallel
/// and reduced in index order.
pub fn select_response(
    history: &History,
    speaker: Speaker,
    config: &RolloutConfig,
    gen: &dyn GeneratorProvider,
    pf: &dyn ProgressionScorer,
    params: &GenerationParams,
    seed: u64,
) -> Result<Selection> {
    let candidates = generate_candidates(history, speaker, config.candidates, gen, params, seed);
    let scored: Vec<(CandidateScore, Option<GeneratedUtterance>)> = candidates
        .into_par_iter()
        .enumerate()
        .map(|(i, cand)| {
            let evaluate = |cand: &GeneratedUtterance| -> Result<Vec<f64>> {
                let sims = rollout(
                    history,
                    cand,
                    speaker,
                    config.rollouts,
                    config.utterances,
                    gen,
                    params,
                    derive_seed(seed, &format!("candidate-{i}")),
                )
                .map_err(|e| Error::Provider(format!("candidate {i}, {e}")))?;
                sims.iter().map(|h| pf.score(&h.utterances)).collect()
            };
            match cand {
                Ok(cand) => match evaluate(&cand) {
                    Ok(scores) => {
                        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
                        (
                            CandidateScore {
                                text: cand.text.clone(),
                                rollout_scores: scores,
                                score: Some(mean),
                                error: None,
                            },
                            Some(cand),
                        )
                    }
                    Err(e) => (
                        CandidateScore {
                            text: cand.text.clone(),
                            rollout_scores: Vec::new(),
                            score: None,
                            error: Some(e.to_string()),
                        },
                        None,
                    ),
                },
                Err(e) => (
                    CandidateScore {
                        text: String::new(),
                        rollout_scores: Vec::new(),
                        score: None,
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();

    let mut chosen: Option<usize> = None;
    for (i, (c, _)) in scored.iter().enumerate() {
        if let Some(s) = c.score {
            if chosen.is_none_or(|j| s > scored[j].0.score.expect("chosen has a score")) {
                chosen = Some(i);
            }
        }
    }
    let Some(chosen) = chosen else {
        let reasons: Vec<String> = scored.iter().filter_map(|(c, _)| c.error.clone()).collect();
        return Err(Error::Provider(format!("every candidate failed: {}", reasons.join("; "))));
    };
    let (candidates, utterances): (Vec<_>, Vec<_>) = scored.into_iter().unzip();
    Ok(Selection {
        chosen,
        chosen_utterance: utterances[chosen].clone(),
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    /// Scores a history by its final utterance using a fixed table.
    struct TableScorer(HashMap<String, f64>);

    impl ProgressionScorer for TableScorer {
        fn score(&self, history: &[Utterance]) -> Result<f64> {
            let last = &history.last().expect("non-empty").text;
            Ok(*self.0.get(last).unwrap_or(&0.0))
        }
    }

    fn single_line(tag: &str) -> ScriptedBranch {
        ScriptedBranch { er: vec![format!("{tag} er")], ee: vec![format!("{tag} ee")] }
    }

    fn ctx(tokens: usize) -> History {
        let words = vec!["w"; tokens].join(" ");
        History::new(vec![Utterance::new(Speaker::ER, words.clone()), Utterance::new(Speaker::EE, "ok")])
    }

    #[test]
    fn temperature_schedule() {
        let p = GenerationParams::default();
        assert!((p.temperature(100) - 1.7).abs() < 1e-12);
        assert_eq!(p.temperature(0), 1.5);

        let gen = Recording::new(ScriptedGenerator::new(vec![single_line("a")]).unwrap());
        let h = History::new(vec![Utterance::new(Speaker::ER, vec!["w"; 100].join(" "))]);
        let cand = h.generate(&gen, Speaker::EE, &p, 0).unwrap();
        rollout(&h, &cand, Speaker::EE, 1, 2, &gen, &p, 0).unwrap();
        let temps: Vec<f64> = gen.records().iter().map(|r| r.temperature).collect();
        // candidate at T=100, then T grows by the two-token lines "a ee" / "a er"
        assert!((temps[0] - 1.7).abs() < 1e-12);
        assert!((temps[1] - (1.5 + 0.002 * 102.0)).abs() < 1e-12);
        assert!((temps[2] - (1.5 + 0.002 * 104.0)).abs() < 1e-12);
    }

    #[test]
    fn provider_token_counts_take_precedence() {
        let mut h = History::new(vec![]);
        h.push(Speaker::ER, GeneratedUtterance { text: "one two".into(), token_count: Some(7) });
        h.push(Speaker::EE, GeneratedUtterance { text: "one two three".into(), token_count: None });
        assert_eq!(h.tokens(), 10);
    }

    #[test]
    fn rollouts_alternate_and_are_deterministic() {
        let gen = ScriptedGenerator::new(vec![single_line("a")]).unwrap();
        let h = ctx(3);
        let cand = GeneratedUtterance { text: "a er".into(), token_count: None };
        let sims = rollout(&h, &cand, Speaker::ER, 3, 4, &gen, &GenerationParams::default(), 9).unwrap();
        assert_eq!(sims.len(), 3);
        assert!(sims.iter().all(|s| *s == sims[0]));
        let speakers: Vec<Speaker> = sims[0].utterances[2..].iter().map(|u| u.speaker).collect();
        assert_eq!(speakers, [Speaker::ER, Speaker::EE, Speaker::ER, Speaker::EE, Speaker::ER]);
        assert!(rollout(&h, &cand, Speaker::ER, 1, 0, &gen, &GenerationParams::default(), 9).is_err());
    }

    #[test]
    fn selects_by_mean_rollout_score() {
        // good branch rollouts end on "good ee"/"good er"; bad on the bad lines
        let gen = ScriptedGenerator::new(vec![single_line("good"), single_line("bad")]).unwrap();
        let scores: HashMap<String, f64> = [("good er", 0.9), ("good ee", 0.8), ("bad er", 0.1), ("bad ee", 0.2)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let pf = TableScorer(scores);
        let cfg = RolloutConfig::new(2, 2, 1).unwrap();
        for seed in [0u64, 1, 2, 3] {
            let sel = select_response(&ctx(2), Speaker::ER, &cfg, &gen, &pf, &GenerationParams::default(), seed).unwrap();
            assert_eq!(sel.chosen_text(), "good er");
            let good = sel.candidates.iter().find(|c| c.text == "good er").unwrap();
            let bad = sel.candidates.iter().find(|c| c.text == "bad er").unwrap();
            assert!((good.score.unwrap() - 0.8).abs() < 1e-12);
            assert!((bad.score.unwrap() - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn single_candidate_and_ties() {
        let gen = ScriptedGenerator::new(vec![single_line("good"), single_line("bad")]).unwrap();
        let flat = TableScorer(HashMap::new());
        let sel = select_response(&ctx(2), Speaker::ER, &RolloutConfig::new(1, 1, 1).unwrap(), &gen, &flat, &GenerationParams::default(), 1)
            .unwrap();
        assert_eq!(sel.chosen, 0);
        assert_eq!(sel.chosen_text(), "bad er");
        let sel = select_response(&ctx(2), Speaker::ER, &RolloutConfig::new(2, 1, 1).unwrap(), &gen, &flat, &GenerationParams::default(), 1)
            .unwrap();
        assert_eq!(sel.chosen, 0);
    }

    struct Failing;

    impl GeneratorProvider for Failing {
        fn generate(&self, _: &GenerationRequest<'_>) -> Result<GeneratedUtterance> {
            Err(Error::Provider("down".into()))
        }
    }

    #[test]
    fn all_candidates_failing_is_an_error() {
        let err = select_response(
            &ctx(1),
            Speaker::ER,
            &RolloutConfig::new(2, 1, 1).unwrap(),
            &Failing,
            &TableScorer(HashMap::new()),
            &GenerationParams::default(),
            0,
        )
        .unwrap_err();
        assert!(err.is_provider());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(parse_mode("none").unwrap(), None);
        assert_eq!(parse_mode("2x2x3").unwrap(), Some(RolloutConfig::new(2, 2, 3).unwrap()));
        assert_eq!("3x3x5".parse::<RolloutConfig>().unwrap().to_string(), "3x3x5");
        assert!(parse_mode("2x0x3").is_err());
        assert!(parse_mode("2x2").is_err());
        assert_eq!(RolloutConfig::new(2, 2, 3).unwrap().calls_per_turn(), 14);
    }
}
