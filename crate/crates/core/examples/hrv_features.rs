//! Compute the interval features for a regular and an irregular rhythm,
//! record-level and in 10 s windows.
//!
//!     cargo run --example hrv_features

use svtscope::classify::Rhythm;
use svtscope::eval::{synth_ecg, EcgParams};
use svtscope::features::{extract_windowed, features_from_beats, hbr, rmssd, sdsd};
use svtscope::fiducial::{detect_beats, rr_intervals, DetectorConfig};
use svtscope::preprocess::{preprocess_signal, DetrendSpec, FilterSpec};

fn main() -> svtscope::Result<()> {
    // the interval statistics on their own
    let rr = [0.76, 0.74, 0.79, 0.75, 0.77];
    println!(
        "rr {rr:?}: hbr {} bpm, rmssd {:.2} ms, sdsd {:.2} ms\n",
        hbr(&rr)?,
        rmssd(&rr)?,
        sdsd(&rr)?
    );

    let fs = 250.0;
    for label in [Rhythm::NotSvt, Rhythm::Af] {
        let ecg = synth_ecg(&EcgParams::archetype(label, fs, 40.0, 5));
        let x = preprocess_signal(&ecg.signal, fs, &FilterSpec::default(), &DetrendSpec::default())?.filtered;
        let beats = detect_beats(&x, fs, &DetectorConfig::default())?;
        let r: Vec<usize> = beats.iter().map(|b| b.r).collect();
        let fv = features_from_beats(&beats, &rr_intervals(&r, fs)?, fs)?;
        println!("{label} archetype, whole record:");
        println!(
            "  mean RR {:.3} s, IBI {:.0} ms, HBR {}, QRS {:.3} s ({}), PR {}, P in {:.0}% of beats, RMSSD {:.1}, SDSD {:.1}",
            fv.mean_rr,
            fv.ibi,
            fv.hbr,
            fv.qrs_duration,
            fv.qrs_class,
            fv.pr_interval.map_or("absent".into(), |p| format!("{p:.0} ms")),
            100.0 * fv.p_present_frac,
            fv.rmssd,
            fv.sdsd
        );
        for (w, res) in extract_windowed(&beats, fs, x.len(), 10.0) {
            match res {
                Ok(f) => println!("  window {w}: HBR {}, RMSSD {:.1} ms over {} beats", f.hbr, f.rmssd, f.n_beats),
                Err(e) => println!("  window {w}: {e}"),
            }
        }
    }
    Ok(())
}
