//! Detect R, Q, S and P on a synthetic 150 BPM record and compare against
//! the planted landmarks, in robust and in window-argmax-only mode.
//!
//!     cargo run --example detect_fiducials

use svtscope::eval::{synth_ecg, EcgParams};
use svtscope::fiducial::{detect_beats, DetectorConfig};
use svtscope::preprocess::{preprocess_signal, DetrendSpec, FilterSpec};

fn main() -> svtscope::Result<()> {
    let fs = 250.0;
    let ecg = synth_ecg(&EcgParams::sinus(fs, 20.0, 150.0, 11));
    let filtered = preprocess_signal(&ecg.signal, fs, &FilterSpec::default(), &DetrendSpec::default())?.filtered;

    for (name, faithful) in [("robust", false), ("faithful", true)] {
        let cfg = DetectorConfig { faithful, ..DetectorConfig::default() };
        let beats = detect_beats(&filtered, fs, &cfg)?;
        let found = ecg
            .r
            .iter()
            .filter(|&&t| beats.iter().any(|b| b.r.abs_diff(t) as f64 <= 0.01 * fs))
            .count();
        println!(
            "{name:>8}: {} detections, {found}/{} planted R peaks within 10 ms",
            beats.len(),
            ecg.r.len()
        );
    }

    let beats = detect_beats(&filtered, fs, &DetectorConfig::default())?;
    println!("\n{:>5} {:>6} {:>6} {:>6} {:>6}   planted r/q/s/p", "beat", "r", "q", "s", "p");
    for (i, b) in beats.iter().enumerate().take(6) {
        let show = |v: Option<usize>| v.map_or("-".into(), |v| v.to_string());
        println!(
            "{i:>5} {:>6} {:>6} {:>6} {:>6}   {}/{}/{}/{}",
            b.r,
            show(b.q),
            show(b.s),
            show(b.p.filter(|_| b.p_present)),
            ecg.r[i],
            ecg.q[i],
            ecg.s[i],
            show(ecg.p[i])
        );
    }
    Ok(())
}
