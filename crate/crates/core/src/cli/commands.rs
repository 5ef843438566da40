use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::classify::{fit, load_model, predict, rule_classify, save_model, Example, ModelKind, Rhythm, RuleTable};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_pipeline, read_units_csv, synth_dataset, write_reports, write_units_csv, Evaluation, Scorer, Unit,
};

use super::pipeline::{
    fiducial_csv, open_record, plain_file_name, preprocess_record, process_record, record_units, safe_name,
    signal_csv, PipelineConfig,
};
use super::plot::{emit_plot, PlotOptions, DEFAULT_MAX_POINTS};
use super::{
    resolve, Cli, Command, ConfigFile, DetectArgs, FeatureArgs, FilterArgs, Failure, InputArgs, ModelArgs, Outcome,
    Stage, SyntheticSpec,
};

pub(super) fn execute(cli: &Cli) -> std::result::Result<Outcome, Failure> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let none_f = FilterArgs::default();
    let none_d = DetectArgs::default();
    let none_x = FeatureArgs::default();
    let none_m = ModelArgs::default();
    match &cli.command {
        Command::Ingest(input) => {
            let cfg = resolve(cli, &file, input.fs, &none_f, &none_d, &none_x, &none_m)?;
            ingest(&cfg, input)
        }
        Command::Preprocess { input, filter } => {
            let cfg = resolve(cli, &file, input.fs, filter, &none_d, &none_x, &none_m)?;
            preprocess(&cfg, input, &filter.dump_stage)
        }
        Command::Detect { input, filter, detect } => {
            let cfg = resolve(cli, &file, input.fs, filter, detect, &none_x, &none_m)?;
            detect_cmd(&cfg, input, &filter.dump_stage)
        }
        Command::Features {
            input,
            filter,
            detect,
            features,
            output,
        } => {
            let cfg = resolve(cli, &file, input.fs, filter, detect, features, &none_m)?;
            features_cmd(&cfg, input, features.label, &filter.dump_stage, output)
        }
        Command::Train {
            features,
            synthetic,
            model,
            params,
            output,
        } => {
            let cfg = resolve(cli, &file, None, &none_f, &none_d, &none_x, params)?;
            let kind = file.pick(*model, "model", ModelKind::Tree)?;
            train(&cfg, features.as_deref(), *synthetic, kind, output)
        }
        Command::Classify {
            features,
            records,
            fs,
            rules,
            model_file,
            filter,
            detect,
            feature_opts,
            output,
        } => {
            let cfg = resolve(cli, &file, *fs, filter, detect, feature_opts, &none_m)?;
            let input = InputArgs {
                records: records.clone(),
                fs: *fs,
            };
            classify_cmd(&cfg, features.as_deref(), &input, feature_opts.label, *rules, model_file.as_deref(), output)
        }
        Command::Evaluate {
            features,
            synthetic,
            model,
            model_file,
            folds,
            params,
        } => {
            let mut cfg = resolve(cli, &file, None, &none_f, &none_d, &none_x, params)?;
            cfg.folds = file.pick(*folds, "folds", 5)?;
            cfg.validate()?;
            let which = match model {
                Some(m) => Some(m.clone()),
                None if model_file.is_none() => Some(file.pick(None, "model", "all".to_string())?),
                None => None,
            };
            evaluate_cmd(&cfg, features.as_deref(), *synthetic, which.as_deref(), model_file.as_deref())
        }
        Command::Plot {
            input,
            filter,
            detect,
            stage,
            baseline,
            max_points,
        } => {
            let cfg = resolve(cli, &file, input.fs, filter, detect, &none_x, &none_m)?;
            let stage = match stage {
                Some(s) => *s,
                None => match file.raw("stage") {
                    None => Stage::Filtered,
                    Some(s) => clap::ValueEnum::from_str(s, true)
                        .map_err(|_| Error::Config(format!("config key stage: unknown stage {s:?}")))?,
                },
            };
            let max_points = file.pick(*max_points, "max_points", DEFAULT_MAX_POINTS)?;
            if max_points == 0 {
                return Err(Error::Config("--max-points must be positive".into()).into());
            }
            plot_cmd(&cfg, input, &filter.dump_stage, stage, *baseline, max_points)
        }
    }
}

/// Output key for an input path: its sanitized file stem.
fn record_key(path: &Path) -> String {
    safe_name(&path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
}

fn out_dir(cfg: &PipelineConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    Ok(&cfg.out_dir)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, body).map_err(|e| Error::io(p, e))
}

/// Run `f` on every input concurrently, keeping input order in the results.
fn per_record<T: Send>(
    input: &InputArgs,
    f: impl Fn(&Path, &str) -> Result<T> + Sync,
) -> std::result::Result<Vec<(String, std::result::Result<T, Failure>)>, Failure> {
    let keys: Vec<String> = input.records.iter().map(|p| record_key(p)).collect();
    let mut seen = BTreeSet::new();
    if let Some(dup) = keys.iter().find(|k| !seen.insert(k.as_str())) {
        return Err(Error::Config(format!("two inputs share the record name {dup:?}")).into());
    }
    Ok(input
        .records
        .par_iter()
        .zip(keys.par_iter())
        .map(|(p, k)| {
            let r = f(p, k).map_err(|error| Failure {
                record: Some(k.clone()),
                error,
            });
            (k.clone(), r)
        })
        .collect())
}

/// Split per-record results into successes and the outcome's failures.
fn gather<T>(results: Vec<(String, std::result::Result<T, Failure>)>, outcome: &mut Outcome) -> Vec<(String, T)> {
    let mut ok = Vec::new();
    for (k, r) in results {
        match r {
            Ok(v) => ok.push((k, v)),
            Err(f) => outcome.failures.push(f),
        }
    }
    ok
}

fn dump_stages(dir: &Path, key: &str, record: &crate::signal_io::Record, cfg: &PipelineConfig, stages: &[Stage]) -> Result<()> {
    if stages.is_empty() {
        return Ok(());
    }
    let s = preprocess_record(record, cfg)?;
    for stage in stages {
        let (suffix, data) = match stage {
            Stage::Raw => ("raw", record.signal()),
            Stage::Detrended => ("detrended", &s.detrended[..]),
            Stage::Filtered => ("filtered", &s.filtered[..]),
        };
        write(dir, &format!("{key}.{suffix}.csv"), &signal_csv(data))?;
    }
    Ok(())
}

fn ingest(cfg: &PipelineConfig, input: &InputArgs) -> std::result::Result<Outcome, Failure> {
    let dir = out_dir(cfg)?;
    let mut outcome = Outcome::default();
    let results = per_record(input, |path, key| {
        let rec = open_record(path, cfg.fs)?;
        write(dir, &format!("{key}.signal.csv"), &signal_csv(rec.signal()))?;
        Ok(format!(
            "{key}: {} signal(s), {} samples at {} Hz ({:.1} s), {} annotation(s)",
            rec.header.n_signals,
            rec.header.n_samples,
            rec.fs(),
            rec.header.n_samples as f64 / rec.fs(),
            rec.annotations.as_ref().map_or(0, Vec::len)
        ))
    })?;
    outcome.messages = gather(results, &mut outcome).into_iter().map(|(_, m)| m).collect();
    Ok(outcome)
}

fn preprocess(cfg: &PipelineConfig, input: &InputArgs, dump: &[Stage]) -> std::result::Result<Outcome, Failure> {
    let dir = out_dir(cfg)?;
    let stages = if dump.is_empty() { vec![Stage::Filtered] } else { dump.to_vec() };
    let mut outcome = Outcome::default();
    let results = per_record(input, |path, key| {
        let rec = open_record(path, cfg.fs)?;
        dump_stages(dir, key, &rec, cfg, &stages)?;
        Ok(format!("{key}: {} samples preprocessed", rec.signal().len()))
    })?;
    outcome.messages = gather(results, &mut outcome).into_iter().map(|(_, m)| m).collect();
    Ok(outcome)
}

fn detect_cmd(cfg: &PipelineConfig, input: &InputArgs, dump: &[Stage]) -> std::result::Result<Outcome, Failure> {
    let dir = out_dir(cfg)?;
    let mut outcome = Outcome::default();
    let results = per_record(input, |path, key| {
        let p = process_record(open_record(path, cfg.fs)?, cfg)?;
        dump_stages(dir, key, &p.record, cfg, dump)?;
        write(dir, &format!("{key}.fiducials.csv"), &fiducial_csv(&p.beats))?;
        let with_p = p.beats.iter().filter(|b| b.p_present).count();
        Ok(format!("{key}: {} beats, {with_p} with P wave", p.beats.len()))
    })?;
    outcome.messages = gather(results, &mut outcome).into_iter().map(|(_, m)| m).collect();
    Ok(outcome)
}

/// Feature rows for every input record, in input order.
fn extract_units(
    cfg: &PipelineConfig,
    input: &InputArgs,
    label: Option<Rhythm>,
    dump: &[Stage],
    outcome: &mut Outcome,
) -> std::result::Result<Vec<Unit>, Failure> {
    let dir = out_dir(cfg)?;
    let results = per_record(input, |path, key| {
        let p = process_record(open_record(path, cfg.fs)?, cfg)?;
        dump_stages(dir, key, &p.record, cfg, dump)?;
        record_units(&p, cfg, label)
    })?;
    let mut units = Vec::new();
    for (_, (u, w)) in gather(results, outcome) {
        units.extend(u);
        outcome.warnings.extend(w);
    }
    Ok(units)
}

fn features_cmd(
    cfg: &PipelineConfig,
    input: &InputArgs,
    label: Option<Rhythm>,
    dump: &[Stage],
    output: &str,
) -> std::result::Result<Outcome, Failure> {
    let output = plain_file_name(output)?;
    let mut outcome = Outcome::default();
    let units = extract_units(cfg, input, label, dump, &mut outcome)?;
    if !units.is_empty() {
        write(&cfg.out_dir, output, &write_units_csv(&units)?)?;
        outcome.messages.push(format!("{} feature row(s) written to {output}", units.len()));
    }
    Ok(outcome)
}

fn read_table(path: &Path) -> Result<Vec<Unit>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_units_csv(&text)
}

/// Labeled units from a feature table or the synthetic generator.
fn labeled_units(features: Option<&Path>, synthetic: Option<SyntheticSpec>) -> Result<Vec<Unit>> {
    let units = match (features, synthetic) {
        (Some(p), _) => read_table(p)?,
        (None, Some(s)) => Unit::from_examples(&synth_dataset(s.n_per_class, s.seed, s.spread)),
        (None, None) => return Err(Error::Config("need --features or --synthetic".into())),
    };
    if units.is_empty() {
        return Err(Error::Config("no feature rows to use".into()));
    }
    let unlabeled: Vec<String> = units.iter().filter(|u| u.label.is_none()).map(|u| u.id.clone()).collect();
    if !unlabeled.is_empty() {
        return Err(Error::MissingLabels(unlabeled));
    }
    Ok(units)
}

fn train(
    cfg: &PipelineConfig,
    features: Option<&Path>,
    synthetic: Option<SyntheticSpec>,
    kind: ModelKind,
    output: &str,
) -> std::result::Result<Outcome, Failure> {
    let output = plain_file_name(output)?;
    let units = labeled_units(features, synthetic)?;
    let data: Vec<Example> = units.iter().map(|u| (u.features, u.label.expect("checked"))).collect();
    let model = fit(kind, &data, &cfg.hyperparams)?;
    let dir = out_dir(cfg)?;
    save_model(&model, &dir.join(output))?;
    Ok(Outcome {
        messages: vec![format!("{} trained on {} example(s), saved to {output}", kind.title(), data.len())],
        ..Outcome::default()
    })
}

fn classify_cmd(
    cfg: &PipelineConfig,
    features: Option<&Path>,
    input: &InputArgs,
    label: Option<Rhythm>,
    rules: bool,
    model_file: Option<&Path>,
    output: &str,
) -> std::result::Result<Outcome, Failure> {
    let output = plain_file_name(output)?;
    let model = model_file.map(load_model).transpose()?;
    let mut outcome = Outcome::default();
    let units = match features {
        Some(p) => read_table(p)?,
        None => extract_units(cfg, input, label, &[], &mut outcome)?,
    };
    let table = RuleTable::default();
    let mut csv = String::from("id,label,low_confidence");
    for l in Rhythm::ALL {
        let _ = write!(csv, ",{l}");
    }
    csv.push('\n');
    for u in &units {
        let c = match (&model, rules) {
            (Some(m), _) => predict(m, &u.features),
            (None, _) => rule_classify(&u.features, &table),
        };
        let _ = write!(csv, "{},{},{}", u.id, c.label, u8::from(c.low_confidence));
        for s in c.scores {
            let _ = write!(csv, ",{s}");
        }
        csv.push('\n');
        let flag = if c.low_confidence { " (low confidence)" } else { "" };
        outcome.messages.push(format!("{}: {}{flag}", u.id, c.label));
    }
    if !units.is_empty() {
        write(out_dir(cfg)?, output, &csv)?;
    }
    Ok(outcome)
}

fn evaluate_cmd(
    cfg: &PipelineConfig,
    features: Option<&Path>,
    synthetic: Option<SyntheticSpec>,
    which: Option<&str>,
    model_file: Option<&Path>,
) -> std::result::Result<Outcome, Failure> {
    let units = labeled_units(features, synthetic)?;
    let table = RuleTable::default();
    let loaded = model_file.map(load_model).transpose()?;
    let cv = |kind| Scorer::CrossValidate {
        kind,
        hyperparams: &cfg.hyperparams,
        folds: cfg.folds,
        seed: cfg.seed,
    };
    let scorers: Vec<Scorer<'_>> = match (&loaded, which) {
        (Some(m), _) => vec![Scorer::Model(m)],
        (None, Some("all")) => ModelKind::ALL.into_iter().map(cv).collect(),
        (None, Some("rules")) => vec![Scorer::Rules(&table)],
        (None, Some(k)) => vec![cv(k.parse()?)],
        (None, None) => unreachable!("a model choice is always resolved"),
    };
    let evals: Vec<Evaluation> = scorers
        .into_iter()
        .map(|s| evaluate_pipeline(&units, s))
        .collect::<Result<_>>()?;
    let refs: Vec<&Evaluation> = evals.iter().collect();
    let dir: PathBuf = out_dir(cfg)?.to_path_buf();
    write_reports(&dir, &refs)?;
    let report = fs::read_to_string(dir.join("report.txt")).map_err(|e| Error::io(dir.join("report.txt"), e))?;
    let mut warnings: Vec<String> = evals.iter().flat_map(|e| e.warnings.iter().cloned()).collect();
    warnings.dedup();
    for e in &evals {
        for z in &e.report.zero_division {
            warnings.push(format!("{}: {} of {} has a zero denominator, reported as 0", e.title, z.metric, z.label));
        }
    }
    Ok(Outcome {
        messages: vec![report.trim_end().to_string()],
        warnings,
        failures: Vec::new(),
    })
}

fn plot_cmd(
    cfg: &PipelineConfig,
    input: &InputArgs,
    dump: &[Stage],
    stage: Stage,
    baseline: bool,
    max_points: usize,
) -> std::result::Result<Outcome, Failure> {
    let dir = out_dir(cfg)?;
    let mut outcome = Outcome::default();
    let results = per_record(input, |path, key| {
        let p = process_record(open_record(path, cfg.fs)?, cfg)?;
        dump_stages(dir, key, &p.record, cfg, dump)?;
        let signal = match stage {
            Stage::Raw => p.record.signal(),
            Stage::Detrended => &p.stages.detrended[..],
            Stage::Filtered => &p.stages.filtered[..],
        };
        let opts = PlotOptions {
            title: format!("{key} ({} beats)", p.beats.len()),
            max_points,
            ..PlotOptions::default()
        };
        let base = baseline.then_some(&p.stages.baseline[..]);
        emit_plot(signal, p.record.fs(), &p.beats, base, &opts, &dir.join(format!("{key}.svg")))?;
        Ok(format!("{key}: plotted {} beats", p.beats.len()))
    })?;
    outcome.messages = gather(results, &mut outcome).into_iter().map(|(_, m)| m).collect();
    Ok(outcome)
}
