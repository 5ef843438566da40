//! Rhythm triage: a deterministic rule table and four trainable
//! classifiers (CART tree, k-nearest neighbours, softmax regression and a
//! one-vs-rest linear SVM) over [`FeatureVector`]s.

mod knn;
pub mod linear;
mod model;
mod rules;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

pub use knn::Knn;
pub use model::{fit, load_model, predict, save_model, Hyperparams, ModelKind, ModelParams, Normalizer, TrainedModel, MODEL_MAGIC};
pub use rules::{rule_classify, Band, PRequirement, PrRequirement, RuleTable, RuleRow};
pub use tree::{gini, DecisionTree, TreeNode};

/// Rhythm label, ordered from benign to most severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rhythm {
    #[serde(rename = "NotSVT")]
    NotSvt,
    #[serde(rename = "NCSVT")]
    Ncsvt,
    #[serde(rename = "AF")]
    Af,
    #[serde(rename = "WPW")]
    Wpw,
}

pub const N_CLASSES: usize = 4;

impl Rhythm {
    /// Fixed label order used by scores and confusion matrices.
    pub const ALL: [Rhythm; N_CLASSES] = [Rhythm::NotSvt, Rhythm::Ncsvt, Rhythm::Af, Rhythm::Wpw];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Rhythm {
        Rhythm::ALL[i]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Rhythm::NotSvt => "NotSVT",
            Rhythm::Ncsvt => "NCSVT",
            Rhythm::Af => "AF",
            Rhythm::Wpw => "WPW",
        }
    }
}

impl fmt::Display for Rhythm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rhythm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Rhythm::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown rhythm label {s:?}")))
    }
}

/// A classification outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhythmClass {
    pub label: Rhythm,
    /// Per-label scores in [`Rhythm::ALL`] order.
    pub scores: [f64; N_CLASSES],
    /// Set when the rule table had no matching row and fell back to NCSVT.
    pub low_confidence: bool,
}

impl RhythmClass {
    pub fn certain(label: Rhythm) -> Self {
        let mut scores = [0.0; N_CLASSES];
        scores[label.index()] = 1.0;
        RhythmClass {
            label,
            scores,
            low_confidence: false,
        }
    }

    /// Label with the highest score; ties go to the lower index.
    pub fn from_scores(scores: [f64; N_CLASSES]) -> Self {
        let best = (1..N_CLASSES).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
        RhythmClass {
            label: Rhythm::from_index(best),
            scores,
            low_confidence: false,
        }
    }
}

/// A labeled training or evaluation example.
pub type Example = (FeatureVector, Rhythm);

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_round_trip() {
        for r in Rhythm::ALL {
            assert_eq!(r.as_str().parse::<Rhythm>().unwrap(), r);
            assert_eq!(Rhythm::from_index(r.index()), r);
        }
        assert!("VT".parse::<Rhythm>().is_err());
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        assert_eq!(softmax(&[0.0; 4]), vec![0.25; 4]);
        let s: f64 = softmax(&[1000.0, -3.0, 2.5, 0.0]).iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn score_ties_prefer_lower_index() {
        let c = RhythmClass::from_scores([0.1, 0.4, 0.4, 0.1]);
        assert_eq!(c.label, Rhythm::Ncsvt);
    }
}
