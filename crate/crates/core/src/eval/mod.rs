//! Scoring, cross-validation, synthetic data and report output.

mod kfold;
mod metrics;
pub mod synth;
mod table;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

pub use kfold::{kfold, Folds};
pub use metrics::{f1_score, macro_average, metrics, Averages, ClassMetrics, ConfusionMatrix, MetricsReport, ZeroDivision};
pub use synth::{synth_dataset, synth_ecg, EcgParams, PWave, SyntheticEcg};
pub use table::{read_units_csv, write_units_csv, FEATURE_COLUMNS};

use crate::classify::{fit, predict, rule_classify, Example, Hyperparams, ModelKind, Rhythm, RhythmClass, RuleTable, TrainedModel};
use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// One scored unit: a record or analysis window.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub id: String,
    pub features: FeatureVector,
    pub label: Option<Rhythm>,
}

impl Unit {
    pub fn from_examples(examples: &[Example]) -> Vec<Unit> {
        examples
            .iter()
            .enumerate()
            .map(|(i, (fv, l))| Unit {
                id: format!("synthetic-{i}"),
                features: *fv,
                label: Some(*l),
            })
            .collect()
    }
}

/// How predictions are produced.
#[derive(Debug, Clone, Copy)]
pub enum Scorer<'a> {
    Rules(&'a RuleTable),
    Model(&'a TrainedModel),
    /// Stratified k-fold: each fold is predicted by a model trained on the rest.
    CrossValidate {
        kind: ModelKind,
        hyperparams: &'a Hyperparams,
        folds: usize,
        seed: u64,
    },
}

impl Scorer<'_> {
    pub fn title(&self) -> String {
        match self {
            Scorer::Rules(_) => "Rule Table".to_string(),
            Scorer::Model(m) => m.kind.title().to_string(),
            Scorer::CrossValidate { kind, .. } => kind.title().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub title: String,
    pub confusion: ConfusionMatrix,
    pub report: MetricsReport,
    /// Prediction for each unit, in input order.
    pub predictions: Vec<RhythmClass>,
    pub warnings: Vec<String>,
}

/// Cross-validate one model kind on labeled examples.
pub fn cross_validate(
    dataset: &[Example],
    kind: ModelKind,
    hp: &Hyperparams,
    k: usize,
    seed: u64,
) -> Result<(Vec<RhythmClass>, Vec<String>)> {
    let labels: Vec<Rhythm> = dataset.iter().map(|(_, l)| *l).collect();
    let folds = kfold(&labels, k, seed)?;
    let per_fold: Vec<Result<Vec<(usize, RhythmClass)>>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<Example> = folds.train_indices(f).into_iter().map(|i| dataset[i]).collect();
            let model = fit(kind, &train, hp)?;
            Ok(folds.folds[f]
                .iter()
                .map(|&i| (i, predict(&model, &dataset[i].0)))
                .collect())
        })
        .collect();
    let mut preds: Vec<Option<RhythmClass>> = vec![None; dataset.len()];
    for fold in per_fold {
        for (i, p) in fold? {
            preds[i] = Some(p);
        }
    }
    Ok((
        preds.into_iter().map(|p| p.expect("folds cover every example")).collect(),
        folds.warnings,
    ))
}

/// Score labeled units and assemble the report.
///
/// Every unit must carry a label; otherwise the unlabeled ids are returned
/// as an error and nothing is scored.
pub fn evaluate_pipeline(units: &[Unit], scorer: Scorer<'_>) -> Result<Evaluation> {
    let unlabeled: Vec<String> = units.iter().filter(|u| u.label.is_none()).map(|u| u.id.clone()).collect();
    if !unlabeled.is_empty() {
        return Err(Error::MissingLabels(unlabeled));
    }
    let truth: Vec<Rhythm> = units.iter().map(|u| u.label.expect("checked above")).collect();

    let mut warnings = Vec::new();
    let predictions: Vec<RhythmClass> = match scorer {
        Scorer::Rules(rules) => units.iter().map(|u| rule_classify(&u.features, rules)).collect(),
        Scorer::Model(model) => units.iter().map(|u| predict(model, &u.features)).collect(),
        Scorer::CrossValidate {
            kind,
            hyperparams,
            folds,
            seed,
        } => {
            let data: Vec<Example> = units.iter().zip(&truth).map(|(u, l)| (u.features, *l)).collect();
            let (p, w) = cross_validate(&data, kind, hyperparams, folds, seed)?;
            warnings = w;
            p
        }
    };

    let confusion = ConfusionMatrix::from_pairs(truth.iter().copied().zip(predictions.iter().map(|p| p.label)));
    let report = metrics(&confusion)?;
    Ok(Evaluation {
        title: scorer.title(),
        confusion,
        report,
        predictions,
        warnings,
    })
}

/// Per-class table with accuracy, macro and weighted rows.
pub fn format_class_table(title: &str, r: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "{:<14}{:>10}{:>13}{:>10}{:>9}", "", "precision", "sensitivity", "f1-score", "support");
    for m in &r.classes {
        let _ = writeln!(
            s,
            "{:<14}{:>10.2}{:>13.2}{:>10.2}{:>9}",
            m.label.as_str(),
            m.precision,
            m.sensitivity,
            m.f1,
            m.support
        );
    }
    let _ = writeln!(s, "{:<14}{:>10}{:>13}{:>10.2}{:>9}", "accuracy", "", "", r.accuracy, r.total);
    for (name, a) in [("macro avg", &r.macro_avg), ("weighted avg", &r.weighted_avg)] {
        let _ = writeln!(
            s,
            "{:<14}{:>10.2}{:>13.2}{:>10.2}{:>9}",
            name, a.precision, a.sensitivity, a.f1, r.total
        );
    }
    s
}

/// One summary row per algorithm: macro precision, sensitivity, F1 and
/// accuracy in percent.
pub fn format_summary_table(rows: &[(String, &MetricsReport)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<22}{:>10}{:>13}{:>10}{:>14}", "Algorithm", "Precision", "Sensitivity", "F1 Score", "Accuracy (%)");
    for (name, r) in rows {
        let _ = writeln!(
            s,
            "{:<22}{:>10.2}{:>13.2}{:>10.2}{:>14.0}",
            name,
            r.macro_avg.precision,
            r.macro_avg.sensitivity,
            r.macro_avg.f1,
            100.0 * r.accuracy
        );
    }
    s
}

pub fn report_csv(evals: &[&Evaluation]) -> String {
    let mut s = String::from("algorithm,row,precision,sensitivity,f1,accuracy,support\n");
    for e in evals {
        let r = &e.report;
        for m in &r.classes {
            let _ = writeln!(s, "{},{},{},{},{},,{}", e.title, m.label, m.precision, m.sensitivity, m.f1, m.support);
        }
        let _ = writeln!(s, "{},accuracy,,,,{},{}", e.title, r.accuracy, r.total);
        for (name, a) in [("macro avg", &r.macro_avg), ("weighted avg", &r.weighted_avg)] {
            let _ = writeln!(s, "{},{name},{},{},{},,{}", e.title, a.precision, a.sensitivity, a.f1, r.total);
        }
    }
    s
}

pub fn confusion_csv(cm: &ConfusionMatrix) -> String {
    let mut s = String::from("true\\predicted");
    for l in Rhythm::ALL {
        let _ = write!(s, ",{l}");
    }
    s.push('\n');
    for l in Rhythm::ALL {
        let _ = write!(s, "{l}");
        for v in cm.counts[l.index()] {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

/// Write `report.txt`, `report.csv` and `confusion.csv` into `dir`. With
/// several evaluations the confusion matrix is the first one's.
pub fn write_reports(dir: &Path, evals: &[&Evaluation]) -> Result<()> {
    let Some(first) = evals.first() else {
        return Err(Error::Metrics("nothing to report".into()));
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut txt = String::new();
    for e in evals {
        txt.push_str(&format_class_table(&e.title, &e.report));
        txt.push('\n');
    }
    let rows: Vec<(String, &MetricsReport)> = evals.iter().map(|e| (e.title.clone(), &e.report)).collect();
    txt.push_str(&format_summary_table(&rows));

    let write = |name: &str, body: &str| {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| Error::io(p, e))
    };
    write("report.txt", &txt)?;
    write("report.csv", &report_csv(evals))?;
    write("confusion.csv", &confusion_csv(&first.confusion))
}
