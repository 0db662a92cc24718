//! Dialogue corpora: loading, filtering, train/test splitting and
//! attribute standardisation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Conversation role. `ER` solicits, `EE` is solicited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speaker {
    ER,
    EE,
}

impl Speaker {
    pub fn other(self) -> Speaker {
        match self {
            Speaker::ER => Speaker::EE,
            Speaker::EE => Speaker::ER,
        }
    }
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Speaker::ER => "ER",
            Speaker::EE => "EE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
}

impl Utterance {
    pub fn new(speaker: Speaker, text: impl Into<String>) -> Self {
        Self {
            speaker,
            text: text.into(),
        }
    }

    /// Number of sentences, counting runs of terminal punctuation. Always at least 1.
    pub fn sentence_count(&self) -> usize {
        let mut count = 0;
        let mut in_terminator = false;
        for ch in self.text.trim().chars() {
            let term = matches!(ch, '.' | '!' | '?');
            if term && !in_terminator {
                count += 1;
            }
            in_terminator = term;
        }
        if !in_terminator && !self.text.trim().is_empty() {
            count += 1;
        }
        count.max(1)
    }

    pub fn token_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

pub type Attributes = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    pub utterances: Vec<Utterance>,
    #[serde(default, deserialize_with = "unique_attributes")]
    pub attributes: Attributes,
}

impl Dialogue {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn attribute(&self, name: &str) -> Option<f64> {
        self.attributes.get(name).copied()
    }

    fn validate(&self) -> Result<()> {
        if self.utterances.is_empty() {
            return Err(Error::Validation(format!(
                "dialogue {:?} has no utterances",
                self.id
            )));
        }
        if let Some(i) = self.utterances.iter().position(|u| u.text.trim().is_empty()) {
            return Err(Error::Validation(format!(
                "dialogue {:?} utterance {} is empty",
                self.id, i
            )));
        }
        Ok(())
    }
}

fn unique_attributes<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Attributes, D::Error> {
    struct UniqueMap;

    impl<'de> Visitor<'de> for UniqueMap {
        type Value = Attributes;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a map of attribute names to numbers")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Attributes, A::Error> {
            let mut out = Attributes::new();
            while let Some((k, v)) = map.next_entry::<String, f64>()? {
                if out.insert(k.clone(), v).is_some() {
                    return Err(serde::de::Error::custom(format!("duplicate attribute {k:?}")));
                }
            }
            Ok(out)
        }
    }

    de.deserialize_map(UniqueMap)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub dialogues: Vec<Dialogue>,
    pub attribute_schema: Vec<String>,
}

impl Corpus {
    /// Builds a corpus, deriving the attribute schema (sorted) from the dialogues.
    pub fn new(dialogues: Vec<Dialogue>) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &dialogues {
            d.validate()?;
            if !seen.insert(d.id.as_str()) {
                return Err(Error::Validation(format!("duplicate dialogue id {:?}", d.id)));
            }
        }
        let attribute_schema = schema_of(&dialogues);
        Ok(Self {
            dialogues,
            attribute_schema,
        })
    }

    pub fn len(&self) -> usize {
        self.dialogues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dialogues.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.dialogues.iter().map(|d| d.id.as_str()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&Dialogue> {
        self.dialogues.iter().find(|d| d.id == id)
    }

    /// Values of `name` in dialogue order; errors if any dialogue lacks it.
    pub fn attribute_column(&self, name: &str) -> Result<Vec<f64>> {
        self.dialogues
            .iter()
            .map(|d| {
                d.attribute(name).ok_or_else(|| {
                    Error::Validation(format!("dialogue {:?} is missing attribute {name:?}", d.id))
                })
            })
            .collect()
    }

    fn refresh_schema(&mut self) {
        self.attribute_schema = schema_of(&self.dialogues);
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for d in &self.dialogues {
            serde_json::to_writer(&mut w, d)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn schema_of(dialogues: &[Dialogue]) -> Vec<String> {
    dialogues
        .iter()
        .flat_map(|d| d.attributes.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Loads a JSONL corpus: one dialogue object per line, blank lines ignored.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file), path)
}

pub fn parse_corpus(reader: impl BufRead, path: &Path) -> Result<Corpus> {
    let mut dialogues = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let d: Dialogue = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        d.validate().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        dialogues.push(d);
    }
    Corpus::new(dialogues)
}

pub const DEFAULT_PLEDGE_PATTERN: &str = r"(?i)\$\s*(\d+(?:\.\d+)?)|\b(\d+(?:\.\d+)?|one|two|three|four|five|six|seven|eight|nine|ten|twenty|fifty|hundred)\s*(?:dollars?|bucks|cents)\b";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRules {
    pub primary_attribute: String,
    pub lower: f64,
    pub upper: f64,
    /// Attribute checked against pledges; defaults to the primary attribute.
    #[serde(default)]
    pub donation_attribute: Option<String>,
    /// Pattern over EE utterances that detects a pledged amount. `None` disables the check.
    #[serde(default)]
    pub pledge_pattern: Option<String>,
}

impl FilterRules {
    /// Donation between $0 and $2 with broken-promise removal.
    pub fn persuasion_default(primary: impl Into<String>) -> Self {
        Self {
            primary_attribute: primary.into(),
            lower: 0.0,
            upper: 2.0,
            donation_attribute: None,
            pledge_pattern: Some(DEFAULT_PLEDGE_PATTERN.to_string()),
        }
    }
}

fn pledges_nonzero(re: &Regex, text: &str) -> bool {
    re.captures_iter(text).any(|caps| {
        caps.iter()
            .skip(1)
            .flatten()
            .any(|m| match m.as_str().parse::<f64>() {
                Ok(v) => v > 0.0,
                // spelled-out amounts in the default pattern are all nonzero
                Err(_) => !m.as_str().eq_ignore_ascii_case("zero"),
            })
    })
}

pub fn filter_dialogues(corpus: &Corpus, rules: &FilterRules) -> Result<Corpus> {
    if rules.lower > rules.upper {
        return Err(Error::Argument(format!(
            "filter bounds inverted: [{}, {}]",
            rules.lower, rules.upper
        )));
    }
    let pattern = rules
        .pledge_pattern
        .as_deref()
        .map(Regex::new)
        .transpose()
        .map_err(|e| Error::Argument(format!("bad pledge pattern: {e}")))?;
    let donation_attr = rules
        .donation_attribute
        .as_deref()
        .unwrap_or(&rules.primary_attribute);

    let mut kept = Vec::new();
    for d in &corpus.dialogues {
        let prim = d.attribute(&rules.primary_attribute).ok_or_else(|| {
            Error::Validation(format!(
                "dialogue {:?} is missing primary attribute {:?}",
                d.id, rules.primary_attribute
            ))
        })?;
        if !(rules.lower..=rules.upper).contains(&prim) {
            continue;
        }
        if let Some(re) = &pattern {
            let donated = d.attribute(donation_attr).unwrap_or(0.0);
            let pledged = d
                .utterances
                .iter()
                .filter(|u| u.speaker == Speaker::EE)
                .any(|u| pledges_nonzero(re, &u.text));
            if pledged && donated == 0.0 {
                continue;
            }
        }
        kept.push(d.clone());
    }
    let mut out = Corpus {
        dialogues: kept,
        attribute_schema: Vec::new(),
    };
    out.refresh_schema();
    Ok(out)
}

/// Number of test dialogues for `n` dialogues: nearest integer, ties toward test,
/// clamped so both sides are non-empty.
pub fn test_count(n: usize, test_fraction: f64) -> usize {
    let raw = (n as f64 * test_fraction + 0.5).floor() as usize;
    raw.clamp(1, n - 1)
}

/// Seeded disjoint partition into (train, test). Each side keeps input order.
pub fn split_train_test(corpus: &Corpus, test_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = corpus.len();
    if n < 2 {
        return Err(Error::Argument(format!("cannot split a corpus of {n} dialogues")));
    }
    let n_test = test_count(n, test_fraction);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_test = vec![false; n];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (d, t) in corpus.dialogues.iter().zip(is_test) {
        if t {
            test.push(d.clone());
        } else {
            train.push(d.clone());
        }
    }
    let mk = |dialogues| {
        let mut c = Corpus {
            dialogues,
            attribute_schema: Vec::new(),
        };
        c.refresh_schema();
        c
    };
    Ok((mk(train), mk(test)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeScale {
    pub mean: f64,
    pub std: f64,
}

/// Train-set z-score parameters per attribute (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub attributes: BTreeMap<String, AttributeScale>,
}

impl Standardizer {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }

    pub fn transform(&self, name: &str, value: f64) -> Option<f64> {
        self.attributes.get(name).map(|s| (value - s.mean) / s.std)
    }
}

pub fn fit_standardizer(train: &Corpus) -> Result<Standardizer> {
    let mut attributes = BTreeMap::new();
    for name in &train.attribute_schema {
        let values: Vec<f64> = train
            .dialogues
            .iter()
            .filter_map(|d| d.attribute(name))
            .collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 1e-12) {
            return Err(Error::Validation(format!(
                "attribute {name:?} has zero variance in the training set"
            )));
        }
        attributes.insert(name.clone(), AttributeScale { mean, std });
    }
    Ok(Standardizer { attributes })
}

/// Applies train statistics. Attributes known to the standardiser but missing
/// from a dialogue are imputed as 0 (the train mean). Unknown attributes pass through.
pub fn apply_standardizer(s: &Standardizer, corpus: &Corpus) -> Corpus {
    let dialogues = corpus
        .dialogues
        .iter()
        .map(|d| {
            let mut d = d.clone();
            for (name, scale) in &s.attributes {
                let z = d
                    .attributes
                    .get(name)
                    .map(|v| (v - scale.mean) / scale.std)
                    .unwrap_or(0.0);
                d.attributes.insert(name.clone(), z);
            }
            d
        })
        .collect();
    let mut out = Corpus {
        dialogues,
        attribute_schema: Vec::new(),
    };
    out.refresh_schema();
    out
}

/// Maps (neg, neu, pos) class probabilities onto [-1, 1].
pub fn sentiment_score(probs: [f64; 3]) -> Result<f64> {
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Validation(format!("invalid sentiment probabilities {probs:?}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Validation(format!(
            "sentiment probabilities sum to {total}, expected 1"
        )));
    }
    Ok(-probs[0] + probs[2])
}

/// Dialogue-level sentiment: the mean of utterance scores.
pub fn dialogue_sentiment(utterance_probs: &[[f64; 3]]) -> Result<f64> {
    if utterance_probs.is_empty() {
        return Err(Error::Argument("no utterances to score".into()));
    }
    let mut total = 0.0;
    for p in utterance_probs {
        total += sentiment_score(*p)?;
    }
    Ok(total / utterance_probs.len() as f64)
}

/// Per-text (neg, neu, pos) class probabilities.
pub trait SentimentProvider: Send + Sync {
    fn class_probs(&self, texts: &[String]) -> Result<Vec<[f64; 3]>>;
}

#[derive(Serialize)]
struct SentimentRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct SentimentResponse {
    probs: Vec<[f64; 3]>,
}

/// Client for `POST /sentiment`.
pub struct HttpSentiment {
    client: crate::http::HttpClient,
}

impl HttpSentiment {
    pub fn new(client: crate::http::HttpClient) -> Self {
        Self { client }
    }
}

impl SentimentProvider for HttpSentiment {
    fn class_probs(&self, texts: &[String]) -> Result<Vec<[f64; 3]>> {
        let resp: SentimentResponse = self.client.post("/sentiment", &SentimentRequest { texts })?;
        if resp.probs.len() != texts.len() {
            return Err(Error::Provider(format!(
                "/sentiment returned {} rows for {} texts",
                resp.probs.len(),
                texts.len()
            )));
        }
        Ok(resp.probs)
    }
}

/// Mean sentiment of the utterances spoken by `speaker`, `None` if they never speak.
pub fn speaker_sentiment(
    utterances: &[Utterance],
    speaker: Speaker,
    provider: &dyn SentimentProvider,
) -> Result<Option<f64>> {
    let texts: Vec<String> = utterances
        .iter()
        .filter(|u| u.speaker == speaker)
        .map(|u| u.text.clone())
        .collect();
    if texts.is_empty() {
        return Ok(None);
    }
    let probs = provider.class_probs(&texts)?;
    dialogue_sentiment(&probs).map(Some)
}

/// Adds `er_sentiment` and `ee_sentiment` attributes from a sentiment provider.
pub fn annotate_sentiment(corpus: &Corpus, provider: &dyn SentimentProvider) -> Result<Corpus> {
    let mut dialogues = corpus.dialogues.clone();
    for d in &mut dialogues {
        for (speaker, name) in [(Speaker::ER, "er_sentiment"), (Speaker::EE, "ee_sentiment")] {
            if let Some(s) = speaker_sentiment(&d.utterances, speaker, provider)? {
                d.attributes.insert(name.to_string(), s);
            }
        }
    }
    Corpus::new(dialogues)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}
