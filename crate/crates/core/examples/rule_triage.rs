//! Synthesize one waveform per rhythm class, run the full signal pipeline
//! and triage each with the rule table.
//!
//!     cargo run --example rule_triage

use svtscope::classify::{rule_classify, Rhythm, RuleTable};
use svtscope::eval::{synth_ecg, EcgParams};
use svtscope::features::features_from_beats;
use svtscope::fiducial::{detect_beats, rr_intervals, DetectorConfig};
use svtscope::preprocess::{preprocess_signal, DetrendSpec, FilterSpec};

fn main() -> svtscope::Result<()> {
    let fs = 250.0;
    let table = RuleTable::default();
    println!("{:<8} {:>5} {:>8} {:>7} {:>8}  {:<8}", "truth", "hbr", "PR(ms)", "P frac", "RMSSD", "triage");
    for label in Rhythm::ALL {
        let ecg = synth_ecg(&EcgParams::archetype(label, fs, 30.0, 7));
        let stages = preprocess_signal(&ecg.signal, fs, &FilterSpec::default(), &DetrendSpec::default())?;
        let beats = detect_beats(&stages.filtered, fs, &DetectorConfig::default())?;
        let r: Vec<usize> = beats.iter().map(|b| b.r).collect();
        let fv = features_from_beats(&beats, &rr_intervals(&r, fs)?, fs)?;
        let class = rule_classify(&fv, &table);
        println!(
            "{:<8} {:>5} {:>8} {:>7.2} {:>8.1}  {:<8}{}",
            label.as_str(),
            fv.hbr,
            fv.pr_interval.map_or("-".to_string(), |p| format!("{p:.0}")),
            fv.p_present_frac,
            fv.rmssd,
            class.label.as_str(),
            if class.low_confidence { " (no rule matched)" } else { "" }
        );
    }
    Ok(())
}
