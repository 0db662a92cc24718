//! Self-play: the generator continues real dialogue prefixes in both roles,
//! planning with rollouts on persuader turns only.

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{select_response, GenerationParams, GeneratorProvider, History, RolloutConfig};
use crate::corpus::{speaker_sentiment, Dialogue, SentimentProvider, Speaker, Utterance};
use crate::error::{Error, Result};
use crate::progression::ProgressionScorer;
use crate::seed::derive_seed;

pub const DEFAULT_INTENT_PATTERN: &str =
    r"(?i)\b(i('ll| will)|i('d| would) like to|happy to|count me in)\b.*\b(donat\w*|give|contribut\w*|pledge)\b|\$\s*\d+";

pub struct SelfPlayOptions<'a> {
    /// Utterances taken from each seed dialogue as context.
    pub context: usize,
    /// Utterances generated after the context.
    pub turns: usize,
    pub params: GenerationParams,
    pub seed: u64,
    pub sentiment: Option<&'a dyn SentimentProvider>,
    /// Regex stand-in for a donation-intent classifier, applied to generated EE lines.
    pub intent_pattern: Option<Regex>,
}

impl Default for SelfPlayOptions<'_> {
    fn default() -> Self {
        Self {
            context: 10,
            turns: 10,
            params: GenerationParams::default(),
            seed: 0,
            sentiment: None,
            intent_pattern: Some(Regex::new(DEFAULT_INTENT_PATTERN).expect("valid intent pattern")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub dialogue_id: String,
    pub utterances: Vec<Utterance>,
    pub context_len: usize,
    pub final_progression: Option<f64>,
    pub er_sentiment: Option<f64>,
    pub ee_sentiment: Option<f64>,
    pub ee_donation_intent: Option<bool>,
    pub generator_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfPlaySummary {
    pub dialogues: usize,
    pub failed: usize,
    pub mean_progression: Option<f64>,
    pub std_progression: Option<f64>,
    pub mean_er_sentiment: Option<f64>,
    pub mean_ee_sentiment: Option<f64>,
    /// Percentage of dialogues where a generated EE line signals donation intent.
    pub ee_donation_percent: Option<f64>,
    /// How intent was detected.
    pub intent_source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfPlayReport {
    pub mode: String,
    pub seed: u64,
    pub transcripts: Vec<Transcript>,
    pub summary: SelfPlaySummary,
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    (Some(mean), Some(std))
}

/// Counts generator calls made through it.
struct Counted<'a> {
    inner: &'a dyn GeneratorProvider,
    calls: std::sync::atomic::AtomicUsize,
}

impl GeneratorProvider for Counted<'_> {
    fn generate(&self, r: &super::GenerationRequest<'_>) -> Result<super::GeneratedUtterance> {
        self.calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        self.inner.generate(r)
    }
}

fn play_one(
    seed_dialogue: &Dialogue,
    mode: Option<&RolloutConfig>,
    gen: &dyn GeneratorProvider,
    pf: &dyn ProgressionScorer,
    opts: &SelfPlayOptions<'_>,
) -> Transcript {
    let counted = Counted {
        inner: gen,
        calls: 0.into(),
    };
    let context_len = opts.context.min(seed_dialogue.len());
    let mut history = History::new(seed_dialogue.utterances[..context_len].to_vec());
    let mut transcript = Transcript {
        dialogue_id: seed_dialogue.id.clone(),
        utterances: Vec::new(),
        context_len,
        final_progression: None,
        er_sentiment: None,
        ee_sentiment: None,
        ee_donation_intent: None,
        generator_calls: 0,
        error: None,
    };

    let run = |history: &mut History| -> Result<()> {
        if seed_dialogue.len() < opts.context {
            return Err(Error::Validation(format!(
                "dialogue has {} utterances, {} needed as context",
                seed_dialogue.len(),
                opts.context
            )));
        }
        for turn in 0..opts.turns {
            let speaker = history.next_speaker();
            let seed = derive_seed(opts.seed, &format!("{}/turn-{turn}", seed_dialogue.id));
            let next = match (speaker, mode) {
                (Speaker::ER, Some(cfg)) => {
                    let sel = select_response(history, speaker, cfg, &counted, pf, &opts.params, seed)?;
                    sel.chosen_utterance.expect("chosen candidate has an utterance")
                }
                _ => history.generate(&counted, speaker, &opts.params, seed)?,
            };
            history.push(speaker, next);
        }
        Ok(())
    };

    let outcome = run(&mut history).and_then(|()| {
        transcript.final_progression = Some(pf.score(&history.utterances)?);
        let generated = &history.utterances[context_len..];
        if let Some(sp) = opts.sentiment {
            transcript.er_sentiment = speaker_sentiment(generated, Speaker::ER, sp)?;
            transcript.ee_sentiment = speaker_sentiment(generated, Speaker::EE, sp)?;
        }
        if let Some(re) = &opts.intent_pattern {
            transcript.ee_donation_intent = Some(
                generated
                    .iter()
                    .any(|u| u.speaker == Speaker::EE && re.is_match(&u.text)),
            );
        }
        Ok(())
    });
    if let Err(e) = outcome {
        transcript.error = Some(e.to_string());
    }
    transcript.utterances = history.utterances;
    transcript.generator_calls = counted.calls.into_inner();
    transcript
}

/// Runs self-play over every seed dialogue. Failures are recorded per dialogue.
pub fn self_play(
    seeds: &[Dialogue],
    mode: Option<&RolloutConfig>,
    gen: &dyn GeneratorProvider,
    pf: &dyn ProgressionScorer,
    opts: &SelfPlayOptions<'_>,
) -> SelfPlayReport {
    let transcripts: Vec<Transcript> = seeds.iter().map(|d| play_one(d, mode, gen, pf, opts)).collect();
    let ok: Vec<&Transcript> = transcripts.iter().filter(|t| t.error.is_none()).collect();
    let collect = |f: fn(&Transcript) -> Option<f64>| ok.iter().filter_map(|t| f(t)).collect::<Vec<f64>>();
    let (mean_progression, std_progression) = mean_std(&collect(|t| t.final_progression));
    let intents: Vec<bool> = ok.iter().filter_map(|t| t.ee_donation_intent).collect();
    let summary = SelfPlaySummary {
        dialogues: transcripts.len(),
        failed: transcripts.len() - ok.len(),
        mean_progression,
        std_progression,
        mean_er_sentiment: mean_std(&collect(|t| t.er_sentiment)).0,
        mean_ee_sentiment: mean_std(&collect(|t| t.ee_sentiment)).0,
        ee_donation_percent: (!intents.is_empty())
            .then(|| 100.0 * intents.iter().filter(|b| **b).count() as f64 / intents.len() as f64),
        intent_source: if opts.intent_pattern.is_some() { "regex-stub" } else { "none" }.to_string(),
    };
    SelfPlayReport {
        mode: mode.map_or_else(|| "none".to_string(), |m| m.to_string()),
        seed: opts.seed,
        transcripts,
        summary,
    }
}
