use crate::classify::{Rhythm, N_CLASSES};
use crate::error::{Error, Result};

/// Counts indexed by `(true label, predicted label)` in [`Rhythm::ALL`] order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[usize; N_CLASSES]; N_CLASSES],
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Rhythm, Rhythm)>) -> Self {
        let mut cm = ConfusionMatrix::default();
        for (t, p) in pairs {
            cm.add(t, p);
        }
        cm
    }

    pub fn add(&mut self, truth: Rhythm, predicted: Rhythm) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            for (c, v) in row.iter_mut().zip(o) {
                *c += v;
            }
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..N_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    pub fn tp(&self, c: usize) -> usize {
        self.counts[c][c]
    }

    pub fn fp(&self, c: usize) -> usize {
        (0..N_CLASSES).filter(|&t| t != c).map(|t| self.counts[t][c]).sum()
    }

    pub fn fn_(&self, c: usize) -> usize {
        (0..N_CLASSES).filter(|&p| p != c).map(|p| self.counts[c][p]).sum()
    }

    pub fn tn(&self, c: usize) -> usize {
        self.total() - self.tp(c) - self.fp(c) - self.fn_(c)
    }

    pub fn support(&self, c: usize) -> usize {
        self.counts[c].iter().sum()
    }

    pub fn predicted(&self, c: usize) -> usize {
        (0..N_CLASSES).map(|t| self.counts[t][c]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub label: Rhythm,
    pub precision: f64,
    pub sensitivity: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Averages {
    pub precision: f64,
    pub sensitivity: f64,
    pub f1: f64,
}

/// Which metric hit a zero denominator for which class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroDivision {
    pub label: Rhythm,
    pub metric: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Classes that occur as truth or prediction, in label order.
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub total: usize,
    pub zero_division: Vec<ZeroDivision>,
}

fn ratio(num: usize, den: usize, label: Rhythm, metric: &'static str, flags: &mut Vec<ZeroDivision>) -> f64 {
    if den == 0 {
        flags.push(ZeroDivision { label, metric });
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and sensitivity; 0 when both are 0.
pub fn f1_score(precision: f64, sensitivity: f64) -> f64 {
    if precision + sensitivity == 0.0 {
        0.0
    } else {
        2.0 * precision * sensitivity / (precision + sensitivity)
    }
}

/// Unweighted mean.
pub fn macro_average(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// One-vs-rest precision, sensitivity and F1 per class, plus accuracy and
/// macro / support-weighted averages. Zero denominators yield 0 and are
/// listed in `zero_division`.
pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Metrics("empty confusion matrix".into()));
    }
    let mut flags = Vec::new();
    let mut classes = Vec::new();
    for label in Rhythm::ALL {
        let c = label.index();
        if cm.support(c) == 0 && cm.predicted(c) == 0 {
            continue;
        }
        let tp = cm.tp(c);
        let precision = ratio(tp, tp + cm.fp(c), label, "precision", &mut flags);
        let sensitivity = ratio(tp, tp + cm.fn_(c), label, "sensitivity", &mut flags);
        classes.push(ClassMetrics {
            label,
            precision,
            sensitivity,
            f1: f1_score(precision, sensitivity),
            support: cm.support(c),
        });
    }

    let avg = |f: fn(&ClassMetrics) -> f64| macro_average(&classes.iter().map(f).collect::<Vec<_>>());
    let wavg = |f: fn(&ClassMetrics) -> f64| {
        classes.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total as f64
    };
    Ok(MetricsReport {
        accuracy: cm.trace() as f64 / total as f64,
        macro_avg: Averages {
            precision: avg(|m| m.precision),
            sensitivity: avg(|m| m.sensitivity),
            f1: avg(|m| m.f1),
        },
        weighted_avg: Averages {
            precision: wavg(|m| m.precision),
            sensitivity: wavg(|m| m.sensitivity),
            f1: wavg(|m| m.f1),
        },
        classes,
        total,
        zero_division: flags,
    })
}
