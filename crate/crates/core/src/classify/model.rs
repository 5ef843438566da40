use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::knn::Knn;
use crate::classify::linear::{fit_logreg, fit_svm, LinearModel};
use crate::classify::tree::DecisionTree;
use crate::classify::{softmax, Example, Rhythm, RhythmClass, N_CLASSES};
use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// First line of every model file.
pub const MODEL_MAGIC: &str = "SVTM1";
const MIN_EXAMPLES_PER_CLASS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tree,
    Knn,
    Logreg,
    Svm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Knn, ModelKind::Svm, ModelKind::Tree, ModelKind::Logreg];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Tree => "tree",
            ModelKind::Knn => "knn",
            ModelKind::Logreg => "logreg",
            ModelKind::Svm => "svm",
        }
    }

    /// Display name used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            ModelKind::Tree => "Decision Tree",
            ModelKind::Knn => "KNN",
            ModelKind::Logreg => "Logistic Regression",
            ModelKind::Svm => "SVM",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(ModelKind::Tree),
            "knn" => Ok(ModelKind::Knn),
            "logreg" => Ok(ModelKind::Logreg),
            "svm" => Ok(ModelKind::Svm),
            other => Err(Error::Config(format!(
                "unknown model kind {other:?} (expected tree, knn, logreg or svm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub k: usize,
    pub logreg_lr: f64,
    pub svm_lr: f64,
    pub epochs: usize,
    pub c: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            max_depth: 6,
            min_leaf: 2,
            k: 5,
            logreg_lr: 0.1,
            svm_lr: 0.01,
            epochs: 500,
            c: 1.0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Hyperparameter(m));
        if self.k == 0 || self.k % 2 == 0 {
            return fail(format!("k must be odd and at least 1, got {}", self.k));
        }
        if self.max_depth == 0 {
            return fail("max_depth must be at least 1".into());
        }
        if self.min_leaf == 0 {
            return fail("min_leaf must be at least 1".into());
        }
        if !(self.logreg_lr > 0.0 && self.svm_lr > 0.0) {
            return fail("learning rates must be positive".into());
        }
        if !(self.c > 0.0) {
            return fail(format!("C must be positive, got {}", self.c));
        }
        Ok(())
    }
}

/// Per-feature z-score parameters learned from training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 where a feature is constant.
    pub scale: Vec<f64>,
}

impl Normalizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut scale = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in scale.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        Normalizer { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Tree(DecisionTree),
    Knn(Knn),
    Logreg(LinearModel),
    Svm(LinearModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    /// Output label order.
    pub labels: Vec<Rhythm>,
    pub feature_names: Vec<String>,
    pub hyperparams: Hyperparams,
    pub normalizer: Normalizer,
    pub params: ModelParams,
}

impl TrainedModel {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ModelFormat(m.to_string()));
        let d = self.feature_names.len();
        if self.labels != Rhythm::ALL {
            return bad("unexpected label codebook");
        }
        if self.normalizer.mean.len() != d || self.normalizer.scale.len() != d {
            return bad("normalizer dimension mismatch");
        }
        if self.normalizer.scale.iter().any(|s| !(*s > 0.0)) {
            return bad("normalizer scale must be positive");
        }
        let kind_ok = matches!(
            (&self.params, self.kind),
            (ModelParams::Tree(_), ModelKind::Tree)
                | (ModelParams::Knn(_), ModelKind::Knn)
                | (ModelParams::Logreg(_), ModelKind::Logreg)
                | (ModelParams::Svm(_), ModelKind::Svm)
        );
        if !kind_ok {
            return bad("parameter block does not match model kind");
        }
        match &self.params {
            ModelParams::Tree(t) if !t.is_well_formed() => bad("malformed tree"),
            ModelParams::Knn(k)
                if k.k == 0
                    || k.k % 2 == 0
                    || k.exemplars.is_empty()
                    || k.exemplars.len() != k.labels.len()
                    || k.labels.iter().any(|&l| l >= N_CLASSES)
                    || k.exemplars.iter().any(|e| e.len() != d) =>
            {
                bad("malformed knn exemplars")
            }
            ModelParams::Logreg(m) | ModelParams::Svm(m)
                if m.weights.len() != N_CLASSES || m.bias.len() != N_CLASSES || m.weights.iter().any(|r| r.len() != d) =>
            {
                bad("weight matrix shape mismatch")
            }
            _ => Ok(()),
        }
    }
}

/// Train a model of `kind` on labeled feature vectors.
///
/// Every present class needs at least five examples and at least two
/// classes must be present; a single-class tree is the exception and
/// yields one leaf.
pub fn fit(kind: ModelKind, dataset: &[Example], hp: &Hyperparams) -> Result<TrainedModel> {
    hp.validate()?;
    if dataset.is_empty() {
        return Err(Error::DegenerateFit("empty training set".into()));
    }
    let mut counts = [0usize; N_CLASSES];
    for (_, y) in dataset {
        counts[y.index()] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    let single_class_tree = present == 1 && kind == ModelKind::Tree;
    if present < 2 && !single_class_tree {
        return Err(Error::DegenerateFit(format!(
            "{kind} needs at least two classes, training set has only {}",
            Rhythm::from_index(counts.iter().position(|&c| c > 0).unwrap_or(0))
        )));
    }
    if !single_class_tree {
        if let Some((c, &n)) = counts
            .iter()
            .enumerate()
            .find(|(_, &n)| n > 0 && n < MIN_EXAMPLES_PER_CLASS)
        {
            return Err(Error::DegenerateFit(format!(
                "class {} has {n} examples, need at least {MIN_EXAMPLES_PER_CLASS}",
                Rhythm::from_index(c)
            )));
        }
    }

    let raw: Vec<Vec<f64>> = dataset.iter().map(|(fv, _)| fv.to_array().to_vec()).collect();
    let y: Vec<usize> = dataset.iter().map(|(_, l)| l.index()).collect();
    let normalizer = Normalizer::fit(&raw);
    let x: Vec<Vec<f64>> = raw.iter().map(|r| normalizer.apply(r)).collect();

    let params = match kind {
        ModelKind::Tree => ModelParams::Tree(DecisionTree::fit(&x, &y, hp.max_depth, hp.min_leaf)),
        ModelKind::Knn => ModelParams::Knn(Knn {
            k: hp.k,
            exemplars: x,
            labels: y,
        }),
        ModelKind::Logreg => ModelParams::Logreg(fit_logreg(&x, &y, hp.logreg_lr, hp.epochs)),
        ModelKind::Svm => ModelParams::Svm(fit_svm(&x, &y, hp.svm_lr, hp.epochs, hp.c)),
    };

    Ok(TrainedModel {
        kind,
        labels: Rhythm::ALL.to_vec(),
        feature_names: FeatureVector::NUMERIC_NAMES.iter().map(|s| s.to_string()).collect(),
        hyperparams: *hp,
        normalizer,
        params,
    })
}

/// Classify one feature vector. An absent PR interval enters as the
/// sentinel value before normalization.
pub fn predict(model: &TrainedModel, fv: &FeatureVector) -> RhythmClass {
    let x = model.normalizer.apply(&fv.to_array());
    match &model.params {
        ModelParams::Tree(t) => RhythmClass::from_scores(t.scores(&x)),
        ModelParams::Knn(k) => {
            let (scores, winner) = k.vote(&x);
            RhythmClass {
                label: Rhythm::from_index(winner),
                scores,
                low_confidence: false,
            }
        }
        ModelParams::Logreg(m) => RhythmClass::from_scores(m.probabilities(&x)),
        ModelParams::Svm(m) => {
            let z = m.margins(&x);
            let mut c = RhythmClass::from_scores(z);
            c.scores.copy_from_slice(&softmax(&z));
            c
        }
    }
}

/// Serialize `model` as the magic line followed by one JSON document.
pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let body = serde_json::to_string(model).map_err(|e| Error::ModelFormat(e.to_string()))?;
    fs::write(path, format!("{MODEL_MAGIC}\n{body}\n")).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

fn parse_model(text: &str) -> Result<TrainedModel> {
    let (magic, body) = text.split_once('\n').unwrap_or((text, ""));
    if magic != MODEL_MAGIC {
        if magic.starts_with("SVTM") {
            return Err(Error::Incompatible {
                expected: MODEL_MAGIC,
                found: magic.to_string(),
            });
        }
        return Err(Error::ModelFormat("missing SVTM header".into()));
    }
    let model: TrainedModel = serde_json::from_str(body).map_err(|e| Error::ModelFormat(e.to_string()))?;
    model.validate()?;
    Ok(model)
}
