//! Record-level plumbing shared by the subcommands: locating and loading
//! inputs, running preprocessing and detection, deriving labels and
//! feature rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::classify::{Hyperparams, Rhythm, N_CLASSES};
use crate::error::{Error, Result};
use crate::eval::Unit;
use crate::features::{extract_windowed, features_from_beats, FeatureVector};
use crate::fiducial::{detect_beats, DetectorConfig, FiducialSet};
use crate::preprocess::{preprocess_signal, DetrendSpec, FilterSpec, Stages};
use crate::signal_io::{load_csv, load_record, parse_header, Annotation, AnnotationLabel, Record};

/// Annotation label to rhythm class. `R` marks are positional, never mapped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap(pub BTreeMap<AnnotationLabel, Rhythm>);

impl Default for LabelMap {
    fn default() -> Self {
        LabelMap(BTreeMap::from([
            (AnnotationLabel::N, Rhythm::NotSvt),
            (AnnotationLabel::S, Rhythm::Ncsvt),
            (AnnotationLabel::Ncsvt, Rhythm::Ncsvt),
            (AnnotationLabel::Af, Rhythm::Af),
            (AnnotationLabel::Wpw, Rhythm::Wpw),
        ]))
    }
}

impl FromStr for LabelMap {
    type Err = Error;

    /// `ANN=CLASS` pairs separated by commas, e.g. `N=NotSVT,S=NCSVT`.
    fn from_str(s: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for pair in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (a, r) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("label map entry {pair:?} is not ANN=CLASS")))?;
            let a: AnnotationLabel = a.trim().parse().map_err(Error::Config)?;
            if a == AnnotationLabel::R {
                return Err(Error::Config("R annotations mark peaks and cannot carry a class".into()));
            }
            map.insert(a, r.trim().parse()?);
        }
        Ok(LabelMap(map))
    }
}

impl LabelMap {
    /// Majority class over the mapped annotations; ties go to the class
    /// listed first in [`Rhythm::ALL`]. `None` when nothing maps.
    pub fn label_for(&self, annotations: &[Annotation]) -> Option<Rhythm> {
        let mut votes = [0usize; N_CLASSES];
        for a in annotations {
            if let Some(r) = self.0.get(&a.label) {
                votes[r.index()] += 1;
            }
        }
        let best = (1..N_CLASSES).fold(0, |b, i| if votes[i] > votes[b] { i } else { b });
        (votes[best] > 0).then(|| Rhythm::from_index(best))
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Sampling rate for CSV inputs; overrides the header rate otherwise.
    pub fs: Option<f64>,
    pub filter: FilterSpec,
    pub detrend: DetrendSpec,
    pub detector: DetectorConfig,
    /// Feature window length; `None` means one row per record.
    pub window_s: Option<f64>,
    pub label_map: LabelMap,
    pub hyperparams: Hyperparams,
    pub folds: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            out_dir: PathBuf::from("out"),
            seed: 42,
            fs: None,
            filter: FilterSpec::default(),
            detrend: DetrendSpec::default(),
            detector: DetectorConfig::default(),
            window_s: None,
            label_map: LabelMap::default(),
            hyperparams: Hyperparams::default(),
            folds: 5,
        }
    }
}

impl PipelineConfig {
    /// Checks that do not depend on a record's sampling rate. Filter edges
    /// are checked against each record's rate when it is processed.
    pub fn validate(&self) -> Result<()> {
        if let Some(fs) = self.fs {
            if !(fs > 0.0 && fs.is_finite()) {
                return Err(Error::Config(format!("--fs must be positive, got {fs}")));
            }
        }
        self.detrend.validate()?;
        self.detector.validate()?;
        self.hyperparams.validate()?;
        if let Some(w) = self.window_s {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("--window-s must be positive, got {w}")));
            }
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("--folds must be at least 2, got {}", self.folds)));
        }
        Ok(())
    }
}

/// Load a record from a `.hea` header or a `.csv` sample file.
///
/// The data file named on the header's first signal line is resolved next
/// to the header. Annotations are picked up from `<stem>.ann` beside the
/// input when that file exists.
pub fn open_record(path: &Path, fs: Option<f64>) -> Result<Record> {
    if !path.is_file() {
        return Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file")));
    }
    let dir = path.parent().unwrap_or(Path::new(""));
    let ann = path.with_extension("ann");
    let ann = ann.is_file().then_some(ann);
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let mut record = match ext.as_str() {
        "hea" => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let header = parse_header(&text)?;
            let data = dir.join(&header.signals[0].file_name);
            load_record(path, &data, ann.as_deref())?
        }
        "csv" => {
            let fs = fs.ok_or_else(|| Error::Config(format!("{}: CSV input needs --fs", path.display())))?;
            let rec = load_csv(path, fs)?;
            match ann {
                Some(a) => {
                    let text = fs::read_to_string(&a).map_err(|e| Error::io(&a, e))?;
                    rec.with_annotations(crate::signal_io::parse_annotations(&text)?)?
                }
                None => rec,
            }
        }
        _ => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: expected a .hea header or .csv file",
                path.display()
            )))
        }
    };
    if let Some(fs) = fs {
        record.header.fs = fs;
    }
    if record.signal().is_empty() {
        return Err(Error::Integrity("record has no samples".into()));
    }
    Ok(record)
}

/// File-name-safe form of a record name.
pub fn safe_name(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect();
    let s = s.trim_start_matches('.').to_string();
    if s.is_empty() {
        "record".to_string()
    } else {
        s
    }
}

/// Reject anything but a bare file name, so outputs stay in the output directory.
pub fn plain_file_name(name: &str) -> Result<&str> {
    let p = Path::new(name);
    if name.is_empty() || p.file_name().and_then(|f| f.to_str()) != Some(name) || name == ".." {
        return Err(Error::Config(format!("output name {name:?} must be a plain file name")));
    }
    Ok(name)
}

/// A record after preprocessing and fiducial detection.
#[derive(Debug, Clone, PartialEq)]
pub struct Processed {
    pub record: Record,
    pub stages: Stages,
    pub beats: Vec<FiducialSet>,
}

pub fn preprocess_record(record: &Record, cfg: &PipelineConfig) -> Result<Stages> {
    preprocess_signal(record.signal(), record.fs(), &cfg.filter, &cfg.detrend)
}

pub fn process_record(record: Record, cfg: &PipelineConfig) -> Result<Processed> {
    let stages = preprocess_record(&record, cfg)?;
    let beats = detect_beats(&stages.filtered, record.fs(), &cfg.detector)?;
    Ok(Processed { record, stages, beats })
}

/// Single-column `mv` CSV of a signal.
pub fn signal_csv(signal: &[f64]) -> String {
    let mut s = String::with_capacity(signal.len() * 12);
    s.push_str("mv\n");
    for v in signal {
        let _ = writeln!(s, "{v}");
    }
    s
}

/// `beat,r,q,s,p,p_present` rows; absent points are empty cells.
pub fn fiducial_csv(beats: &[FiducialSet]) -> String {
    let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut s = String::from("beat,r,q,s,p,p_present\n");
    for (i, b) in beats.iter().enumerate() {
        let _ = writeln!(s, "{i},{},{},{},{},{}", b.r, opt(b.q), opt(b.s), opt(b.p), u8::from(b.p_present));
    }
    s
}

/// Feature rows for one processed record: a single row, or one per window.
///
/// In windowed mode, windows without enough beats are skipped with a
/// warning; the record fails only if every window does.
pub fn record_units(p: &Processed, cfg: &PipelineConfig, label: Option<Rhythm>) -> Result<(Vec<Unit>, Vec<String>)> {
    let name = p.record.name();
    let label = label.or_else(|| p.record.annotations.as_deref().and_then(|a| cfg.label_map.label_for(a)));
    let fs = p.record.fs();
    match cfg.window_s {
        None => {
            let r: Vec<usize> = p.beats.iter().map(|b| b.r).collect();
            let rr: Vec<f64> = r.windows(2).map(|w| (w[1] - w[0]) as f64 / fs).collect();
            let features = features_from_beats(&p.beats, &rr, fs)?;
            Ok((vec![unit(name.to_string(), features, label)], Vec::new()))
        }
        Some(w) => {
            let mut units = Vec::new();
            let mut warnings = Vec::new();
            let mut first_err = None;
            for (i, res) in extract_windowed(&p.beats, fs, p.record.signal().len(), w) {
                match res {
                    Ok(f) => units.push(unit(format!("{name}/w{i}"), f, label)),
                    Err(e) => {
                        warnings.push(format!("{name}/w{i}: skipped ({}: {e})", e.module()));
                        first_err.get_or_insert(e);
                    }
                }
            }
            match (units.is_empty(), first_err) {
                (true, Some(e)) => Err(e),
                _ => Ok((units, warnings)),
            }
        }
    }
}

fn unit(id: String, features: FeatureVector, label: Option<Rhythm>) -> Unit {
    Unit { id, features, label }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(label: AnnotationLabel) -> Annotation {
        Annotation { sample: 0, label }
    }

    #[test]
    fn label_majority_and_ties() {
        let m = LabelMap::default();
        let a = [ann(AnnotationLabel::Af), ann(AnnotationLabel::R), ann(AnnotationLabel::Af), ann(AnnotationLabel::N)];
        assert_eq!(m.label_for(&a), Some(Rhythm::Af));
        let tie = [ann(AnnotationLabel::Wpw), ann(AnnotationLabel::S)];
        assert_eq!(m.label_for(&tie), Some(Rhythm::Ncsvt));
        assert_eq!(m.label_for(&[ann(AnnotationLabel::R)]), None);
    }

    #[test]
    fn label_map_parsing() {
        let m: LabelMap = "N=NotSVT, S=AF".parse().unwrap();
        assert_eq!(m.0.len(), 2);
        assert_eq!(m.label_for(&[ann(AnnotationLabel::S)]), Some(Rhythm::Af));
        assert!("R=AF".parse::<LabelMap>().is_err());
        assert!("Q=AF".parse::<LabelMap>().is_err());
        assert!("N".parse::<LabelMap>().is_err());
    }

    #[test]
    fn names_stay_inside_output_dir() {
        assert_eq!(safe_name("../etc/passwd"), "_etc_passwd");
        assert_eq!(safe_name("100"), "100");
        assert!(plain_file_name("model.svtm").is_ok());
        assert!(plain_file_name("../model.svtm").is_err());
        assert!(plain_file_name("a/b").is_err());
        assert!(plain_file_name("..").is_err());
    }

    #[test]
    fn fiducial_rows() {
        let b = FiducialSet { r: 10, q: Some(8), s: None, p: Some(3), p_present: true };
        assert_eq!(fiducial_csv(&[b]), "beat,r,q,s,p,p_present\n0,10,8,,3,1\n");
    }
}
