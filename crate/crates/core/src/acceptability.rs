//! Acceptability: the primary outcome attribute plus every other dialogue
//! attribute weighted by its covariance with the primary one.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{read_json, write_json, Attributes, Corpus};
use crate::error::{Error, Result};

/// Attribute under which computed scores are stored on each dialogue.
pub const ACCEPTABILITY_ATTRIBUTE: &str = "acceptability";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptabilityProfile {
    pub primary_attribute: String,
    /// Covariance of each non-primary attribute with the primary attribute.
    pub weights: BTreeMap<String, f64>,
    /// Identifier of the training set the weights came from.
    pub derived_from: String,
}

impl AcceptabilityProfile {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }

    /// Weights sorted by descending value, as `attribute,weight` CSV lines.
    pub fn weights_csv(&self) -> String {
        let mut rows: Vec<(&String, &f64)> = self.weights.iter().collect();
        rows.sort_by(|a, b| b.1.total_cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let mut out = String::from("attribute,weight\n");
        for (name, w) in rows {
            out.push_str(&format!("{name},{w}\n"));
        }
        out
    }
}

/// Population covariances of the (already standardised) primary attribute
/// with every other attribute. On z-scored data these are Pearson correlations.
pub fn fit_profile(train: &Corpus, primary: &str, derived_from: &str) -> Result<AcceptabilityProfile> {
    let prim = train.attribute_column(primary)?;
    let n = prim.len() as f64;
    let mean = prim.iter().sum::<f64>() / n;
    let var = prim.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if mean.abs() > 1e-6 || (var - 1.0).abs() > 1e-3 {
        return Err(Error::Validation(format!(
            "primary attribute {primary:?} is not standardised (mean {mean:.3e}, variance {var:.6})"
        )));
    }

    let mut weights = BTreeMap::new();
    for name in &train.attribute_schema {
        if name == primary || name == ACCEPTABILITY_ATTRIBUTE {
            continue;
        }
        let mut sum = 0.0;
        for (d, p) in train.dialogues.iter().zip(&prim) {
            sum += p * d.attribute(name).unwrap_or(0.0);
        }
        let w = sum / n;
        if !w.is_finite() {
            return Err(Error::Validation(format!("non-finite covariance for {name:?}")));
        }
        weights.insert(name.clone(), w);
    }
    Ok(AcceptabilityProfile {
        primary_attribute: primary.to_string(),
        weights,
        derived_from: derived_from.to_string(),
    })
}

/// `prim + Σ w_i · attr_i` for one dialogue's standardised attributes.
pub fn acceptability(attrs: &Attributes, profile: &AcceptabilityProfile) -> Result<f64> {
    let prim = attrs.get(&profile.primary_attribute).copied().ok_or_else(|| {
        Error::Validation(format!(
            "missing primary attribute {:?}",
            profile.primary_attribute
        ))
    })?;
    Ok(prim
        + profile
            .weights
            .iter()
            .map(|(name, w)| w * attrs.get(name).copied().unwrap_or(0.0))
            .sum::<f64>())
}

/// Stores the acceptability score on every dialogue.
pub fn annotate(corpus: &Corpus, profile: &AcceptabilityProfile) -> Result<Corpus> {
    let mut dialogues = corpus.dialogues.clone();
    for d in &mut dialogues {
        let acc = acceptability(&d.attributes, profile).map_err(|e| match e {
            Error::Validation(m) => Error::Validation(format!("dialogue {:?}: {m}", d.id)),
            other => other,
        })?;
        d.attributes.insert(ACCEPTABILITY_ATTRIBUTE.to_string(), acc);
    }
    Corpus::new(dialogues)
}
