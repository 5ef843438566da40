//! The `svtscope` command.
//!
//! Subcommands follow the pipeline: `ingest`, `preprocess`, `detect`,
//! `features`, `train`, `classify`, `evaluate`, `plot`. Settings come from
//! flags, then a `key = value` file given with `--config`, then built-in
//! defaults. Everything is written under the output directory (`--out-dir`,
//! else `$SVTSCOPE_OUT`, else `out`).
//!
//! Exit status is 0 on success, 1 when the data cannot be processed and 2
//! for usage or configuration problems.

mod commands;
pub mod config;
pub mod pipeline;
pub mod plot;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::classify::{Hyperparams, ModelKind, Rhythm};
use crate::error::{Error, Result};
use crate::fiducial::DetectorConfig;
use crate::preprocess::{DetrendSpec, FilterSpec};

pub use config::ConfigFile;
pub use pipeline::{open_record, process_record, LabelMap, PipelineConfig, Processed};
pub use plot::{emit_plot, PlotOptions};

pub const OUT_DIR_ENV: &str = "SVTSCOPE_OUT";

#[derive(Debug, Parser)]
#[command(name = "svtscope", version, about = "ECG supraventricular tachycardia detection and triage")]
pub struct Cli {
    /// Plain `key = value` settings file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [default: $SVTSCOPE_OUT or "out"].
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct InputArgs {
    /// Record headers (.hea) or CSV sample files.
    #[arg(required = true, value_name = "RECORD")]
    pub records: Vec<PathBuf>,
    /// Sampling rate in Hz; required for CSV, overrides headers otherwise.
    #[arg(long)]
    pub fs: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Raw,
    Detrended,
    Filtered,
}

#[derive(Debug, Args, Clone, Default)]
pub struct FilterArgs {
    #[arg(long, value_name = "HZ")]
    pub low_cut: Option<f64>,
    #[arg(long, value_name = "HZ")]
    pub high_cut: Option<f64>,
    /// Lowpass prototype order (even).
    #[arg(long)]
    pub order: Option<usize>,
    /// Single forward pass instead of forward-backward.
    #[arg(long)]
    pub no_zero_phase: bool,
    /// First median window as a fraction of the sampling rate.
    #[arg(long)]
    pub detrend_w1: Option<f64>,
    /// Second median window as a fraction of the sampling rate.
    #[arg(long)]
    pub detrend_w2: Option<f64>,
    /// Also write this intermediate as `<record>.<stage>.csv`.
    #[arg(long, value_enum, value_name = "STAGE")]
    pub dump_stage: Vec<Stage>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct DetectArgs {
    /// Raw window maxima, no amplitude floor or refractory merge.
    #[arg(long)]
    pub alg1_faithful: bool,
    /// Assumed RR interval in seconds (scan window length).
    #[arg(long, value_name = "S")]
    pub t_rr: Option<f64>,
    #[arg(long, value_name = "MS")]
    pub refractory_ms: Option<f64>,
    /// Amplitude floor as a fraction of the reference peak.
    #[arg(long, value_name = "FRAC")]
    pub amp_floor: Option<f64>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct FeatureArgs {
    /// Emit one row per window of this many seconds.
    #[arg(long, value_name = "S")]
    pub window_s: Option<f64>,
    /// Label every row with this class.
    #[arg(long, value_parser = parse_rhythm, value_name = "CLASS")]
    pub label: Option<Rhythm>,
    /// Annotation-to-class map, e.g. `N=NotSVT,S=NCSVT,AF=AF,WPW=WPW`.
    #[arg(long, value_name = "MAP")]
    pub label_map: Option<String>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Neighbours for knn (odd).
    #[arg(long)]
    pub k: Option<usize>,
    /// Learning rate for logreg / svm.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// SVM regularization constant.
    #[arg(long)]
    pub c: Option<f64>,
}

/// `n,seed,spread` for the synthetic feature generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n_per_class: usize,
    pub seed: u64,
    pub spread: f64,
}

impl FromStr for SyntheticSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [n, seed, spread] = parts[..] else {
            return Err(format!("expected n,seed,spread, got {s:?}"));
        };
        let spec = SyntheticSpec {
            n_per_class: n.parse().map_err(|_| format!("bad count {n:?}"))?,
            seed: seed.parse().map_err(|_| format!("bad seed {seed:?}"))?,
            spread: spread.parse().map_err(|_| format!("bad spread {spread:?}"))?,
        };
        if spec.n_per_class == 0 || !(spec.spread >= 0.0) {
            return Err("count must be positive and spread non-negative".into());
        }
        Ok(spec)
    }
}

fn parse_rhythm(s: &str) -> std::result::Result<Rhythm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load records and write channel 0 as `<record>.signal.csv` in mV.
    Ingest(InputArgs),
    /// Detrend and bandpass; writes `<record>.filtered.csv` unless other stages are requested.
    Preprocess {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Locate R, Q, S and P; writes `<record>.fiducials.csv`.
    Detect {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        filter: FilterArgs,
        #[command(flatten)]
        detect: DetectArgs,
    },
    /// Compute the feature table for all records.
    Features {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        filter: FilterArgs,
        #[command(flatten)]
        detect: DetectArgs,
        #[command(flatten)]
        features: FeatureArgs,
        /// Output file name inside the output directory.
        #[arg(long, default_value = "features.csv")]
        output: String,
    },
    /// Fit a classifier on a labeled feature table or synthetic data.
    Train {
        #[arg(long, value_name = "CSV", conflicts_with = "synthetic", required_unless_present = "synthetic")]
        features: Option<PathBuf>,
        #[arg(long, value_name = "N,SEED,SPREAD")]
        synthetic: Option<SyntheticSpec>,
        #[arg(long, value_parser = parse_kind)]
        model: Option<ModelKind>,
        #[command(flatten)]
        params: ModelArgs,
        #[arg(long, default_value = "model.svtm")]
        output: String,
    },
    /// Label records or feature rows with the rule table or a trained model.
    Classify {
        /// Feature table to classify instead of records.
        #[arg(long, value_name = "CSV", conflicts_with = "records")]
        features: Option<PathBuf>,
        #[arg(value_name = "RECORD", required_unless_present = "features")]
        records: Vec<PathBuf>,
        #[arg(long)]
        fs: Option<f64>,
        #[arg(long, conflicts_with = "model_file", required_unless_present = "model_file")]
        rules: bool,
        #[arg(long, value_name = "FILE")]
        model_file: Option<PathBuf>,
        #[command(flatten)]
        filter: FilterArgs,
        #[command(flatten)]
        detect: DetectArgs,
        #[command(flatten)]
        feature_opts: FeatureArgs,
        #[arg(long, default_value = "predictions.csv")]
        output: String,
    },
    /// Score labeled data and write report.txt, report.csv, confusion.csv.
    Evaluate {
        #[arg(long, value_name = "CSV", conflicts_with = "synthetic", required_unless_present = "synthetic")]
        features: Option<PathBuf>,
        #[arg(long, value_name = "N,SEED,SPREAD")]
        synthetic: Option<SyntheticSpec>,
        /// tree, knn, logreg, svm, all (the four, cross-validated) or rules.
        #[arg(long, value_name = "WHICH")]
        model: Option<String>,
        /// Score a saved model instead of cross-validating.
        #[arg(long, value_name = "FILE", conflicts_with = "model")]
        model_file: Option<PathBuf>,
        #[arg(long)]
        folds: Option<usize>,
        #[command(flatten)]
        params: ModelArgs,
    },
    /// Write `<record>.svg` and `<record>.csv` with fiducial markers.
    Plot {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        filter: FilterArgs,
        #[command(flatten)]
        detect: DetectArgs,
        /// Signal stage to draw.
        #[arg(long, value_enum)]
        stage: Option<Stage>,
        /// Overlay the estimated baseline.
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        max_points: Option<usize>,
    },
}

fn parse_kind(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// An error tied to the record (if any) being processed.
#[derive(Debug)]
pub struct Failure {
    pub record: Option<String>,
    pub error: Error,
}

impl Failure {
    fn exit_code(&self) -> i32 {
        if self.error.is_usage() {
            2
        } else {
            1
        }
    }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure { record: None, error }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.record {
            Some(r) => write!(f, "{}: record {r}: {}", self.error.module(), self.error),
            None => write!(f, "{}: {}", self.error.module(), self.error),
        }
    }
}

/// Messages and failures collected while a subcommand runs; printed by one
/// writer once it finishes, so output order is fixed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub messages: Vec<String>,
    pub warnings: Vec<String>,
    pub failures: Vec<Failure>,
}

/// Resolve settings from flags, the config file and defaults.
pub fn resolve(
    cli: &Cli,
    file: &ConfigFile,
    fs: Option<f64>,
    filter: &FilterArgs,
    detect: &DetectArgs,
    features: &FeatureArgs,
    model: &ModelArgs,
) -> Result<PipelineConfig> {
    let fs_default = FilterSpec::default();
    let dt_default = DetrendSpec::default();
    let det_default = DetectorConfig::default();
    let hp_default = Hyperparams::default();
    let out_dir = match (&cli.out_dir, file.raw("out_dir")) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from),
    };
    let lr = file.pick_opt(model.lr, "lr")?;
    let cfg = PipelineConfig {
        out_dir,
        seed: file.pick(cli.seed, "seed", 42)?,
        fs: file.pick_opt(fs, "fs")?,
        filter: FilterSpec {
            low_cut: file.pick(filter.low_cut, "low_cut", fs_default.low_cut)?,
            high_cut: file.pick(filter.high_cut, "high_cut", fs_default.high_cut)?,
            order: file.pick(filter.order, "order", fs_default.order)?,
            zero_phase: file.switch(filter.no_zero_phase, false, "zero_phase", fs_default.zero_phase)?,
        },
        detrend: DetrendSpec {
            w1_frac: file.pick(filter.detrend_w1, "detrend_w1", dt_default.w1_frac)?,
            w2_frac: file.pick(filter.detrend_w2, "detrend_w2", dt_default.w2_frac)?,
        },
        detector: DetectorConfig {
            t_rr: file.pick(detect.t_rr, "t_rr", det_default.t_rr)?,
            refractory_ms: file.pick(detect.refractory_ms, "refractory_ms", det_default.refractory_ms)?,
            amp_floor_frac: file.pick(detect.amp_floor, "amp_floor", det_default.amp_floor_frac)?,
            faithful: file.switch(detect.alg1_faithful, true, "alg1_faithful", det_default.faithful)?,
        },
        window_s: file.pick_opt(features.window_s, "window_s")?,
        label_map: file.pick(features.label_map.as_deref().map(str::parse).transpose()?, "label_map", LabelMap::default())?,
        hyperparams: Hyperparams {
            max_depth: file.pick(model.max_depth, "max_depth", hp_default.max_depth)?,
            min_leaf: file.pick(model.min_leaf, "min_leaf", hp_default.min_leaf)?,
            k: file.pick(model.k, "k", hp_default.k)?,
            logreg_lr: lr.unwrap_or(hp_default.logreg_lr),
            svm_lr: lr.unwrap_or(hp_default.svm_lr),
            epochs: file.pick(model.epochs, "epochs", hp_default.epochs)?,
            c: file.pick(model.c, "c", hp_default.c)?,
        },
        folds: file.pick(None, "folds", 5)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Parse arguments, run the subcommand and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match commands::execute(&cli) {
        Ok(o) => o,
        Err(f) => Outcome {
            failures: vec![f],
            ..Outcome::default()
        },
    };
    for m in &outcome.messages {
        println!("{m}");
    }
    for w in &outcome.warnings {
        eprintln!("svtscope: warning: {w}");
    }
    for f in &outcome.failures {
        eprintln!("svtscope: error: {f}");
    }
    outcome.failures.iter().map(Failure::exit_code).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_spec_parsing() {
        let s: SyntheticSpec = "200,42,0.15".parse().unwrap();
        assert_eq!((s.n_per_class, s.seed, s.spread), (200, 42, 0.15));
        assert!("200,42".parse::<SyntheticSpec>().is_err());
        assert!("0,1,0.1".parse::<SyntheticSpec>().is_err());
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["svtscope", "detect", "--bogus", "x.hea"]), 2);
        assert_eq!(run(["svtscope", "frobnicate"]), 2);
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from(["svtscope", "--out-dir", "o", "detect", "r.hea", "--t-rr", "0.7"]).unwrap();
        let file = ConfigFile::parse("t_rr = 0.9\nrefractory_ms = 250\nzero_phase = false").unwrap();
        let cfg = resolve(
            &cli,
            &file,
            None,
            &FilterArgs::default(),
            &DetectArgs { t_rr: Some(0.7), ..DetectArgs::default() },
            &FeatureArgs::default(),
            &ModelArgs::default(),
        )
        .unwrap();
        assert_eq!(cfg.detector.t_rr, 0.7);
        assert_eq!(cfg.detector.refractory_ms, 250.0);
        assert!(!cfg.filter.zero_phase);
        assert_eq!(cfg.out_dir, PathBuf::from("o"));
    }
}
