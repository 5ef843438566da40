use crate::classify::{Rhythm, RhythmClass};
use crate::features::FeatureVector;

/// A numeric interval. The upper edge may be open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub low: f64,
    pub high: f64,
    pub high_inclusive: bool,
}

impl Band {
    pub const fn closed(low: f64, high: f64) -> Self {
        Band { low, high, high_inclusive: true }
    }

    pub const fn half_open(low: f64, high: f64) -> Self {
        Band { low, high, high_inclusive: false }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.low && if self.high_inclusive { v <= self.high } else { v < self.high }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PRequirement {
    Present,
    Absent,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrRequirement {
    /// The PR interval must be absent.
    Absent,
    /// The PR interval must be present and inside the band.
    Within(Band),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleRow {
    pub label: Rhythm,
    pub hbr: Band,
    pub p_wave: PRequirement,
    pub pr: PrRequirement,
}

impl RuleRow {
    pub fn matches(&self, fv: &FeatureVector) -> bool {
        let p_ok = match self.p_wave {
            PRequirement::Present => fv.p_present(),
            PRequirement::Absent => !fv.p_present(),
            PRequirement::Any => true,
        };
        let pr_ok = match (self.pr, fv.pr_interval) {
            (PrRequirement::Absent, None) => true,
            (PrRequirement::Within(band), Some(pr)) => band.contains(pr),
            _ => false,
        };
        self.hbr.contains(fv.hbr) && p_ok && pr_ok
    }
}

/// Tachycardia rows tested in order, plus the rate at or below which a
/// rhythm is not tachycardic.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleTable {
    pub tachycardia_above_bpm: f64,
    /// Rows in precedence order; the first match wins.
    pub rows: Vec<RuleRow>,
}

impl Default for RuleTable {
    fn default() -> Self {
        RuleTable {
            tachycardia_above_bpm: 100.0,
            rows: vec![
                RuleRow {
                    label: Rhythm::Wpw,
                    hbr: Band::closed(160.0, 300.0),
                    p_wave: PRequirement::Present,
                    pr: PrRequirement::Within(Band::half_open(0.0, 120.0)),
                },
                RuleRow {
                    label: Rhythm::Af,
                    hbr: Band::closed(100.0, 175.0),
                    p_wave: PRequirement::Absent,
                    pr: PrRequirement::Absent,
                },
                RuleRow {
                    label: Rhythm::Ncsvt,
                    hbr: Band::closed(100.0, 250.0),
                    p_wave: PRequirement::Present,
                    pr: PrRequirement::Within(Band::closed(120.0, 200.0)),
                },
            ],
        }
    }
}

impl RuleTable {
    pub fn row(&self, label: Rhythm) -> Option<&RuleRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Triage a feature vector against the rule table.
///
/// Rates at or below the tachycardia threshold are NotSVT. Otherwise the
/// rows are tried most-severe first; when none matches the result is NCSVT
/// marked low-confidence.
pub fn rule_classify(fv: &FeatureVector, rules: &RuleTable) -> RhythmClass {
    if fv.hbr <= rules.tachycardia_above_bpm {
        return RhythmClass::certain(Rhythm::NotSvt);
    }
    match rules.rows.iter().find(|row| row.matches(fv)) {
        Some(row) => RhythmClass::certain(row.label),
        None => RhythmClass {
            low_confidence: true,
            ..RhythmClass::certain(Rhythm::Ncsvt)
        },
    }
}
