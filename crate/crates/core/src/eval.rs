//! Automatic metrics against acceptability and agreement with manual ratings.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::progression::{least_squares, ProgressionTrace};
use crate::stats::{mae, pearson_r, Correlation};

/// One annotator's ratings for one dialogue: per utterance, per sentence, in {−1, 0, 1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub dialogue_id: String,
    pub annotator: String,
    pub ratings: Vec<Vec<i64>>,
}

impl Annotation {
    /// Sentence ratings averaged per utterance.
    pub fn utterance_ratings(&self) -> Vec<f64> {
        self.ratings
            .iter()
            .map(|s| if s.is_empty() { 0.0 } else { s.iter().sum::<i64>() as f64 / s.len() as f64 })
            .collect()
    }

    /// Cumulative sum of the utterance ratings.
    pub fn ground_truth_curve(&self) -> Vec<f64> {
        self.utterance_ratings()
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    /// annotator → dialogue id → annotation
    pub by_annotator: BTreeMap<String, BTreeMap<String, Annotation>>,
}

impl AnnotationSet {
    pub fn new(items: Vec<Annotation>) -> Result<Self> {
        let mut set = AnnotationSet::default();
        for a in items {
            if let Some(bad) = a.ratings.iter().flatten().find(|r| !(-1..=1).contains(*r)) {
                return Err(Error::Validation(format!(
                    "rating {bad} outside {{-1, 0, 1}} in {} by {}",
                    a.dialogue_id, a.annotator
                )));
            }
            let slot = set.by_annotator.entry(a.annotator.clone()).or_default();
            if slot.contains_key(&a.dialogue_id) {
                return Err(Error::Validation(format!(
                    "{} annotated {} twice",
                    a.annotator, a.dialogue_id
                )));
            }
            slot.insert(a.dialogue_id.clone(), a);
        }
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut items = Vec::new();
        for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            items.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        Self::new(items)
    }

    pub fn annotators(&self) -> Vec<&str> {
        self.by_annotator.keys().map(String::as_str).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManualScores {
    /// PF value vs cumulative rating, over all utterances.
    pub utt: f64,
    /// Step differences of both curves.
    pub utt_sl: f64,
    /// Per-dialogue regression slopes of both curves.
    pub dlg_sl: f64,
    /// PF slope vs final cumulative rating.
    pub dlg_sl_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManualReport {
    pub per_annotator: BTreeMap<String, ManualScores>,
    /// Average over annotators.
    pub mean: ManualScores,
}

fn annotator_scores(traces: &BTreeMap<String, ProgressionTrace>, ann: &BTreeMap<String, Annotation>) -> Result<ManualScores> {
    let (mut pf, mut gt) = (Vec::new(), Vec::new());
    let (mut pf_step, mut gt_step) = (Vec::new(), Vec::new());
    let (mut pf_slope, mut gt_slope, mut gt_final) = (Vec::new(), Vec::new(), Vec::new());
    for (id, a) in ann {
        let trace = &traces[id];
        let curve = a.ground_truth_curve();
        if curve.len() != trace.turn_values.len() {
            return Err(Error::Validation(format!(
                "{id}: {} rated utterances but the trace has {}",
                curve.len(),
                trace.turn_values.len()
            )));
        }
        pf.extend_from_slice(&trace.turn_values);
        gt.extend_from_slice(&curve);
        for t in 1..curve.len() {
            pf_step.push(trace.turn_values[t] - trace.turn_values[t - 1]);
            gt_step.push(curve[t] - curve[t - 1]);
        }
        pf_slope.push(trace.slope);
        gt_slope.push(least_squares(&curve).0);
        gt_final.push(*curve.last().unwrap_or(&0.0));
    }
    let r = |x: &[f64], y: &[f64]| pearson_r(x, y).map(|c| c.r);
    Ok(ManualScores {
        utt: r(&pf, &gt)?,
        utt_sl: r(&pf_step, &gt_step)?,
        dlg_sl: r(&pf_slope, &gt_slope)?,
        dlg_sl_f: r(&pf_slope, &gt_final)?,
    })
}

/// Correlates PF curves with cumulative manual ratings, per annotator and averaged.
pub fn manual_metrics(traces: &BTreeMap<String, ProgressionTrace>, ann: &AnnotationSet) -> Result<ManualReport> {
    if ann.by_annotator.is_empty() {
        return Err(Error::Argument("no annotations".into()));
    }
    let mut missing: Vec<&str> = ann
        .by_annotator
        .values()
        .flat_map(|m| m.keys())
        .filter(|id| !traces.contains_key(*id))
        .map(String::as_str)
        .collect();
    missing.sort_unstable();
    missing.dedup();
    if !missing.is_empty() {
        return Err(Error::Validation(format!(
            "annotated dialogues without progression traces: {}",
            missing.join(", ")
        )));
    }
    let mut per_annotator = BTreeMap::new();
    for (name, a) in &ann.by_annotator {
        let s = annotator_scores(traces, a).map_err(|e| Error::Validation(format!("annotator {name}: {e}")))?;
        per_annotator.insert(name.clone(), s);
    }
    let n = per_annotator.len() as f64;
    let avg = |f: fn(&ManualScores) -> f64| per_annotator.values().map(f).sum::<f64>() / n;
    let mean = ManualScores {
        utt: avg(|s| s.utt),
        utt_sl: avg(|s| s.utt_sl),
        dlg_sl: avg(|s| s.dlg_sl),
        dlg_sl_f: avg(|s| s.dlg_sl_f),
    };
    Ok(ManualReport { per_annotator, mean })
}

/// PF values at the end of each ER+EE exchange (a trailing half turn counts).
pub fn turn_values(utterance_values: &[f64]) -> Vec<f64> {
    utterance_values
        .chunks(2)
        .map(|c| *c.last().expect("chunks are non-empty"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoMetrics {
    pub dialogues: usize,
    /// Final PF value vs acceptability.
    pub mae: f64,
    /// Utterance-indexed PF slope vs acceptability.
    pub slope_r: Correlation,
    /// Exchange-indexed PF slope vs acceptability.
    pub turn_slope_r: Correlation,
    pub final_r: Correlation,
}

pub fn auto_metrics(traces: &[ProgressionTrace], acceptability: &[f64]) -> Result<AutoMetrics> {
    if traces.len() != acceptability.len() {
        return Err(Error::Argument(format!(
            "{} traces but {} acceptability values",
            traces.len(),
            acceptability.len()
        )));
    }
    let finals: Vec<f64> = traces.iter().map(ProgressionTrace::final_value).collect();
    let slopes: Vec<f64> = traces.iter().map(|t| t.slope).collect();
    let turn_slopes: Vec<f64> = traces.iter().map(|t| least_squares(&turn_values(&t.turn_values)).0).collect();
    Ok(AutoMetrics {
        dialogues: traces.len(),
        mae: mae(&finals, acceptability)?,
        slope_r: pearson_r(&slopes, acceptability)?,
        turn_slope_r: pearson_r(&turn_slopes, acceptability)?,
        final_r: pearson_r(&finals, acceptability)?,
    })
}
