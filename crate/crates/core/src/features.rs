//! Record-level rhythm features: RR interval, IBI, heart beat rate, QRS
//! duration, PR interval, RMSSD and SDSD.

use std::fmt;

use crate::error::{Error, Result};
use crate::fiducial::FiducialSet;
use crate::signal_io::Record;

/// Upper bound of a narrow QRS, seconds.
pub const QRS_NARROW_MAX_S: f64 = 0.10;
/// Lower bound of a wide QRS, seconds.
pub const QRS_WIDE_MIN_S: f64 = 0.12;
/// Below this fraction of P-bearing beats the PR interval is reported absent.
pub const P_PRESENT_MIN_FRAC: f64 = 0.5;

/// Normal adult ranges used for flagging.
pub mod normal {
    pub const RR_S: (f64, f64) = (0.6, 1.0);
    pub const RMSSD_MS: (f64, f64) = (21.0, 70.0);
    /// Stored for reference only; triage does not use it.
    pub const SDSD_MS: (f64, f64) = (141.0 - 39.0, 141.0 + 39.0);
    pub const IBI_MS: (f64, f64) = (600.0, 900.0);
    pub const HBR_BPM: (f64, f64) = (60.0, 100.0);
    pub const PR_MS: (f64, f64) = (120.0, 200.0);

    pub fn contains(range: (f64, f64), v: f64) -> bool {
        range.0 <= v && v <= range.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrsClass {
    Narrow,
    Intermediate,
    Wide,
}

impl QrsClass {
    pub fn from_duration(seconds: f64) -> Self {
        if seconds <= QRS_NARROW_MAX_S {
            QrsClass::Narrow
        } else if seconds < QRS_WIDE_MIN_S {
            QrsClass::Intermediate
        } else {
            QrsClass::Wide
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QrsClass::Narrow => "narrow",
            QrsClass::Intermediate => "intermediate",
            QrsClass::Wide => "wide",
        }
    }
}

impl fmt::Display for QrsClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for QrsClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "narrow" => Ok(QrsClass::Narrow),
            "intermediate" => Ok(QrsClass::Intermediate),
            "wide" => Ok(QrsClass::Wide),
            other => Err(Error::Csv(format!("unknown QRS class {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    /// Mean RR interval, seconds.
    pub mean_rr: f64,
    /// Mean inter-beat interval, ms.
    pub ibi: f64,
    /// Heart beat rate, BPM (rounded).
    pub hbr: f64,
    /// Mean Q-to-S duration, seconds.
    pub qrs_duration: f64,
    pub qrs_class: QrsClass,
    /// Mean P-to-Q interval over P-bearing beats, ms.
    pub pr_interval: Option<f64>,
    pub p_present_frac: f64,
    pub rmssd: f64,
    pub sdsd: f64,
    pub n_beats: usize,
}

/// Value used for an absent PR interval in numeric feature arrays.
pub const PR_ABSENT_SENTINEL: f64 = -1.0;

impl FeatureVector {
    pub const NUMERIC_NAMES: [&'static str; 8] = [
        "mean_rr",
        "ibi",
        "hbr",
        "qrs_duration",
        "pr_interval",
        "p_present_frac",
        "rmssd",
        "sdsd",
    ];

    /// Numeric view used by the trainable classifiers.
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.mean_rr,
            self.ibi,
            self.hbr,
            self.qrs_duration,
            self.pr_interval.unwrap_or(PR_ABSENT_SENTINEL),
            self.p_present_frac,
            self.rmssd,
            self.sdsd,
        ]
    }

    pub fn p_present(&self) -> bool {
        self.p_present_frac >= P_PRESENT_MIN_FRAC
    }
}

fn successive_differences(rr: &[f64]) -> impl Iterator<Item = f64> + '_ {
    rr.windows(2).map(|w| w[0] - w[1])
}

/// Root mean square of successive RR differences, in ms.
pub fn rmssd(rr: &[f64]) -> Result<f64> {
    if rr.len() < 2 {
        return Err(Error::InsufficientData {
            feature: "rmssd",
            needed: 2,
            got: rr.len(),
        });
    }
    let sum_sq: f64 = successive_differences(rr).map(|d| d * d).sum();
    Ok(1000.0 * (sum_sq / (rr.len() - 1) as f64).sqrt())
}

/// Standard deviation of successive RR differences, in ms, with the number
/// of differences as the denominator.
pub fn sdsd(rr: &[f64]) -> Result<f64> {
    if rr.len() < 3 {
        return Err(Error::InsufficientData {
            feature: "sdsd",
            needed: 3,
            got: rr.len(),
        });
    }
    let m = (rr.len() - 1) as f64;
    let mean = successive_differences(rr).sum::<f64>() / m;
    let ss: f64 = successive_differences(rr).map(|d| (d - mean).powi(2)).sum();
    Ok(1000.0 * (ss / m).sqrt())
}

fn mean_rr(rr: &[f64], feature: &'static str) -> Result<f64> {
    if rr.is_empty() {
        return Err(Error::InsufficientData {
            feature,
            needed: 1,
            got: 0,
        });
    }
    Ok(rr.iter().sum::<f64>() / rr.len() as f64)
}

/// Heart beat rate in whole BPM.
pub fn hbr(rr: &[f64]) -> Result<f64> {
    let m = mean_rr(rr, "hbr")?;
    if !(m > 0.0) {
        return Err(Error::DegenerateSignal(format!("mean RR interval is {m} s")));
    }
    Ok((60.0 / m).round())
}

/// Mean inter-beat interval, ms.
pub fn ibi(rr: &[f64]) -> Result<f64> {
    Ok(1000.0 * mean_rr(rr, "ibi")?)
}

/// Mean QRS duration over beats with both Q and S, and its width class.
pub fn qrs_duration(beats: &[FiducialSet], fs: f64) -> Result<(f64, QrsClass)> {
    let widths: Vec<f64> = beats
        .iter()
        .filter_map(FiducialSet::qrs_samples)
        .map(|n| n as f64 / fs)
        .collect();
    if widths.is_empty() {
        return Err(Error::InsufficientData {
            feature: "qrs_duration",
            needed: 1,
            got: 0,
        });
    }
    let mean = widths.iter().sum::<f64>() / widths.len() as f64;
    Ok((mean, QrsClass::from_duration(mean)))
}

/// Mean PR interval (ms) over P-bearing beats and the fraction of beats
/// with a P wave. The interval is absent when fewer than half the beats
/// carry a P wave.
pub fn pr_interval(beats: &[FiducialSet], fs: f64) -> (Option<f64>, f64) {
    if beats.is_empty() {
        return (None, 0.0);
    }
    let with_p: Vec<f64> = beats
        .iter()
        .filter(|b| b.p_present)
        .filter_map(|b| Some(1000.0 * (b.q? - b.p?) as f64 / fs))
        .collect();
    let frac = beats.iter().filter(|b| b.p_present).count() as f64 / beats.len() as f64;
    if frac < P_PRESENT_MIN_FRAC || with_p.is_empty() {
        return (None, frac);
    }
    (Some(with_p.iter().sum::<f64>() / with_p.len() as f64), frac)
}

/// Assemble the full feature vector for one record or window.
///
/// The interval statistics are checked first so that a record with too few
/// beats reports the RMSSD requirement.
pub fn extract_features(record: &Record, beats: &[FiducialSet], rr: &[f64]) -> Result<FeatureVector> {
    features_from_beats(beats, rr, record.fs())
}

pub fn features_from_beats(beats: &[FiducialSet], rr: &[f64], fs: f64) -> Result<FeatureVector> {
    let rmssd = rmssd(rr)?;
    let sdsd = sdsd(rr)?;
    let mean_rr = mean_rr(rr, "mean_rr")?;
    let hbr = hbr(rr)?;
    let ibi = ibi(rr)?;
    let (qrs_duration, qrs_class) = qrs_duration(beats, fs)?;
    let (pr_interval, p_present_frac) = pr_interval(beats, fs);
    Ok(FeatureVector {
        mean_rr,
        ibi,
        hbr,
        qrs_duration,
        qrs_class,
        pr_interval,
        p_present_frac,
        rmssd,
        sdsd,
        n_beats: beats.len(),
    })
}

/// Split beats into consecutive windows of `window_s` seconds by R position
/// and compute one feature vector per window. Each window's RR intervals are
/// the intervals between its own beats.
pub fn extract_windowed(
    beats: &[FiducialSet],
    fs: f64,
    n_samples: usize,
    window_s: f64,
) -> Vec<(usize, Result<FeatureVector>)> {
    let window = ((window_s * fs).round() as usize).max(1);
    let n_windows = n_samples.div_ceil(window).max(1);
    (0..n_windows)
        .map(|w| {
            let (lo, hi) = (w * window, (w + 1) * window);
            let in_window: Vec<FiducialSet> = beats
                .iter()
                .filter(|b| b.r >= lo && b.r < hi)
                .copied()
                .collect();
            let r: Vec<usize> = in_window.iter().map(|b| b.r).collect();
            let rr: Vec<f64> = r.windows(2).map(|p| (p[1] - p[0]) as f64 / fs).collect();
            (w, features_from_beats(&in_window, &rr, fs))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beat(q: usize, s: usize) -> FiducialSet {
        FiducialSet { r: q + 1, q: Some(q), s: Some(s), p: None, p_present: false }
    }

    #[test]
    fn rmssd_small_cases() {
        assert_eq!(rmssd(&[0.8, 0.8, 0.8]).unwrap(), 0.0);
        assert!((rmssd(&[0.8, 1.0]).unwrap() - 200.0).abs() < 1e-9);
        assert!(matches!(rmssd(&[0.8]), Err(Error::InsufficientData { feature: "rmssd", .. })));
    }

    #[test]
    fn sdsd_small_cases() {
        let ap: Vec<f64> = (0..10).map(|i| 0.8 + 0.01 * i as f64).collect();
        assert!(sdsd(&ap).unwrap() < 1e-9);
        assert!((sdsd(&[0.8, 0.9, 0.8]).unwrap() - 100.0).abs() < 1e-9);
        assert!(matches!(sdsd(&[0.8, 0.9]), Err(Error::InsufficientData { feature: "sdsd", .. })));
    }

    #[test]
    fn rate_and_interval() {
        assert_eq!(hbr(&[1.0, 1.0]).unwrap(), 60.0);
        assert_eq!(hbr(&[0.76]).unwrap(), 79.0);
        assert_eq!(hbr(&[0.42]).unwrap(), 143.0);
        assert!(matches!(hbr(&[0.0, 0.0]), Err(Error::DegenerateSignal(_))));
        assert_eq!(ibi(&[1.0, 1.0]).unwrap(), 1000.0);
        assert!((ibi(&[0.6, 0.9]).unwrap() - 750.0).abs() < 1e-9);
        assert!(ibi(&[]).is_err());
        assert!(normal::contains(normal::IBI_MS, ibi(&[0.7]).unwrap()));
    }

    #[test]
    fn qrs_width_classes() {
        let (d, c) = qrs_duration(&[beat(51, 61)], 125.0).unwrap();
        assert!((d - 0.08).abs() < 1e-12);
        assert_eq!(c, QrsClass::Narrow);
        let (d, c) = qrs_duration(&[beat(50, 66)], 128.0).unwrap();
        assert_eq!(d, 0.125);
        assert_eq!(c, QrsClass::Wide);
        // 0.08 s and 0.10 s at 100 Hz
        let (d, c) = qrs_duration(&[beat(10, 18), beat(30, 40)], 100.0).unwrap();
        assert!((d - 0.09).abs() < 1e-12);
        assert_eq!(c, QrsClass::Narrow);
        assert_eq!(QrsClass::from_duration(0.11), QrsClass::Intermediate);
        let incomplete = FiducialSet { s: None, ..beat(1, 2) };
        assert!(qrs_duration(&[incomplete], 100.0).is_err());
    }

    #[test]
    fn pr_interval_cases() {
        let with_p = |q: usize, lead: usize| FiducialSet {
            r: q + 3,
            q: Some(q),
            s: Some(q + 6),
            p: Some(q - lead),
            p_present: true,
        };
        let beats: Vec<_> = (1..5).map(|k| with_p(100 * k, 20)).collect();
        let (pr, frac) = pr_interval(&beats, 125.0);
        assert!((pr.unwrap() - 160.0).abs() < 1e-9);
        assert_eq!(frac, 1.0);

        let (pr, _) = pr_interval(&[with_p(100, 13)], 128.0);
        let pr = pr.unwrap();
        assert!((pr - 101.5625).abs() < 1e-9);
        assert!(pr < normal::PR_MS.0);

        let none: Vec<_> = beats.iter().map(|b| FiducialSet { p_present: false, ..*b }).collect();
        assert_eq!(pr_interval(&none, 125.0), (None, 0.0));

        // one of three beats with P: fraction too low to report PR
        let mut mixed = none.clone();
        mixed[0].p_present = true;
        let (pr, frac) = pr_interval(&mixed[..3], 125.0);
        assert_eq!(pr, None);
        assert!((frac - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn one_beat_reports_rmssd() {
        let err = features_from_beats(&[beat(10, 20)], &[], 128.0).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { feature: "rmssd", .. }));
        let three: Vec<_> = [10, 138, 266].iter().map(|&r| beat(r, r + 10)).collect();
        let err = features_from_beats(&three, &[1.0, 1.0], 128.0).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { feature: "sdsd", .. }));
    }

    #[test]
    fn regular_sixty_bpm() {
        let beats: Vec<_> = (0..10).map(|k| beat(100 + 128 * k, 110 + 128 * k)).collect();
        let rr = vec![1.0; 9];
        let fv = features_from_beats(&beats, &rr, 128.0).unwrap();
        assert_eq!(fv.hbr, 60.0);
        assert_eq!(fv.rmssd, 0.0);
        assert_eq!(fv.qrs_class, QrsClass::Narrow);
        assert_eq!(fv.n_beats, 10);
        assert_eq!(fv.to_array()[4], PR_ABSENT_SENTINEL);
    }

    #[test]
    fn windowed_extraction() {
        let beats: Vec<_> = (0..20).map(|k| beat(10 + 128 * k, 20 + 128 * k)).collect();
        let out = extract_windowed(&beats, 128.0, 20 * 128, 10.0);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].1.as_ref().unwrap().n_beats, 10);
        assert_eq!(out[1].1.as_ref().unwrap().hbr, 60.0);
    }
}
