//! Per-cluster acceptability aggregates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum AggregationRule {
    /// Drop ⌊fraction·n⌋ values from each end, then average. Plain mean when n < 3.
    TrimmedMean { fraction: f64 },
    /// Σ p·acc / Σ p over cluster members.
    ProbabilityWeighted,
    Mean,
}

pub fn trimmed_mean(values: &[f64], fraction: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Argument("trimmed mean of an empty list".into()));
    }
    if !(0.0..0.5).contains(&fraction) {
        return Err(Error::Argument(format!("trim fraction {fraction} outside [0, 0.5)")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = if sorted.len() < 3 {
        0
    } else {
        (fraction * sorted.len() as f64).floor() as usize
    };
    let kept = &sorted[cut..sorted.len() - cut];
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

/// Aggregates per cluster. `labels[i]` is `None` for noise, which is ignored.
pub fn cluster_aggregates(
    k: usize,
    labels: &[Option<usize>],
    probabilities: &[f64],
    acceptability: &[f64],
    rule: AggregationRule,
) -> Result<Vec<f64>> {
    if labels.len() != acceptability.len() || labels.len() != probabilities.len() {
        return Err(Error::Argument(format!(
            "{} labels, {} probabilities and {} acceptability values",
            labels.len(),
            probabilities.len(),
            acceptability.len()
        )));
    }
    let mut members: Vec<Vec<(f64, f64)>> = vec![Vec::new(); k];
    for ((l, p), a) in labels.iter().zip(probabilities).zip(acceptability) {
        if let Some(c) = l {
            members[*c].push((*a, *p));
        }
    }
    members
        .iter()
        .enumerate()
        .map(|(c, m)| {
            if m.is_empty() {
                return Err(Error::Validation(format!("cluster {c} has no members")));
            }
            match rule {
                AggregationRule::TrimmedMean { fraction } => {
                    trimmed_mean(&m.iter().map(|(a, _)| *a).collect::<Vec<_>>(), fraction)
                }
                AggregationRule::Mean => Ok(m.iter().map(|(a, _)| a).sum::<f64>() / m.len() as f64),
                AggregationRule::ProbabilityWeighted => {
                    let total: f64 = m.iter().map(|(_, p)| p).sum();
                    if !(total > 0.0) {
                        return Err(Error::Validation(format!(
                            "cluster {c} has zero total membership probability"
                        )));
                    }
                    Ok(m.iter().map(|(a, p)| a * p).sum::<f64>() / total)
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn trimmed_examples() {
        assert_eq!(trimmed_mean(&[0.0; 7], 0.1).unwrap(), 0.0);
        let mut v: Vec<f64> = (1..=9).map(f64::from).collect();
        v.push(100.0);
        // sort-and-slice: drop one from each end of 10 values
        let mut s = v.clone();
        s.sort_by(f64::total_cmp);
        let oracle = s[1..9].iter().sum::<f64>() / 8.0;
        assert_eq!(oracle, 5.5);
        assert_eq!(trimmed_mean(&v, 0.1).unwrap(), oracle);
        assert_eq!(trimmed_mean(&[1.0, 5.0], 0.1).unwrap(), 3.0);
    }

    #[test]
    fn weighted_example() {
        let v = cluster_aggregates(
            1,
            &[Some(0), Some(0), None],
            &[1.0, 0.5, 0.0],
            &[1.0, 3.0, 99.0],
            AggregationRule::ProbabilityWeighted,
        )
        .unwrap();
        assert!((v[0] - 2.5 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_cluster_is_named() {
        let err = cluster_aggregates(2, &[Some(0), Some(1)], &[1.0, 0.0], &[1.0, 2.0], AggregationRule::ProbabilityWeighted)
            .unwrap_err();
        assert!(err.to_string().contains("cluster 1"));
    }

    proptest! {
        #[test]
        fn trimmed_mean_bounds(v in prop::collection::vec(-1e3f64..1e3, 1..50), c in -10.0f64..10.0) {
            let t = trimmed_mean(&v, 0.1).unwrap();
            let lo = v.iter().cloned().fold(f64::MAX, f64::min);
            let hi = v.iter().cloned().fold(f64::MIN, f64::max);
            prop_assert!(t >= lo - 1e-9 && t <= hi + 1e-9);
            let constant = vec![c; v.len()];
            prop_assert!((trimmed_mean(&constant, 0.1).unwrap() - c).abs() < 1e-12);
        }
    }
}
