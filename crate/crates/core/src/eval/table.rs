//! The feature table: one CSV row per record or window, the interchange
//! format between feature extraction and the classifiers.

use crate::classify::Rhythm;
use crate::error::{Error, Result};
use crate::features::FeatureVector;

use super::Unit;

pub const FEATURE_COLUMNS: [&str; 12] = [
    "id",
    "mean_rr",
    "ibi",
    "hbr",
    "qrs_duration",
    "qrs_class",
    "pr_interval",
    "p_present_frac",
    "rmssd",
    "sdsd",
    "n_beats",
    "label",
];

/// Serialize units. An absent PR interval or label is an empty cell.
pub fn write_units_csv(units: &[Unit]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FEATURE_COLUMNS)?;
    for u in units {
        let f = &u.features;
        w.write_record([
            u.id.clone(),
            f.mean_rr.to_string(),
            f.ibi.to_string(),
            f.hbr.to_string(),
            f.qrs_duration.to_string(),
            f.qrs_class.to_string(),
            f.pr_interval.map(|v| v.to_string()).unwrap_or_default(),
            f.p_present_frac.to_string(),
            f.rmssd.to_string(),
            f.sdsd.to_string(),
            f.n_beats.to_string(),
            u.label.map(|l| l.to_string()).unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parse a feature table. Columns are located by name, so extra columns
/// are ignored and the label column may be missing entirely.
pub fn read_units_csv(text: &str) -> Result<Vec<Unit>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 11];
    for (i, name) in FEATURE_COLUMNS[..11].iter().enumerate() {
        idx[i] = col(name).ok_or_else(|| Error::Csv(format!("feature table lacks column {name:?}")))?;
    }
    let label_col = col("label");

    let mut units = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let cell = |i: usize| rec.get(idx[i]).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            cell(i).parse().map_err(|_| {
                Error::Csv(format!("line {line}: {} is not numeric: {:?}", FEATURE_COLUMNS[i], cell(i)))
            })
        };
        let pr = match cell(6) {
            "" => None,
            _ => Some(num(6)?),
        };
        let n_beats: usize = cell(10)
            .parse()
            .map_err(|_| Error::Csv(format!("line {line}: n_beats is not an integer: {:?}", cell(10))))?;
        let label = match label_col.and_then(|c| rec.get(c)).unwrap_or("") {
            "" => None,
            s => Some(
                s.parse::<Rhythm>()
                    .map_err(|_| Error::Csv(format!("line {line}: unknown label {s:?}")))?,
            ),
        };
        units.push(Unit {
            id: cell(0).to_string(),
            features: FeatureVector {
                mean_rr: num(1)?,
                ibi: num(2)?,
                hbr: num(3)?,
                qrs_duration: num(4)?,
                qrs_class: cell(5).parse()?,
                pr_interval: pr,
                p_present_frac: num(7)?,
                rmssd: num(8)?,
                sdsd: num(9)?,
                n_beats,
            },
            label,
        });
    }
    Ok(units)
}
