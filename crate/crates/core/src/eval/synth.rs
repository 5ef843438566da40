//! Synthetic data: labeled feature vectors drawn from the triage envelopes,
//! and sum-of-Gaussians ECG waveforms with known fiducial positions.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::classify::{Example, Rhythm};
use crate::features::{FeatureVector, QrsClass};

/// Jitter standard deviation per unit of `spread`.
const HBR_JITTER_BPM: f64 = 40.0;
const PR_JITTER_MS: f64 = 40.0;
const QRS_JITTER_S: f64 = 0.02;
const RMSSD_JITTER_MS: f64 = 40.0;
const P_FRAC_JITTER: f64 = 1.0;

struct Envelope {
    hbr: (f64, f64),
    pr_ms: Option<(f64, f64)>,
    rmssd_ms: (f64, f64),
}

fn envelope(label: Rhythm) -> Envelope {
    // lower rate bounds sit just above 100 BPM so rounding never lands on the
    // tachycardia threshold; WPW PR stays strictly below 120 ms
    match label {
        Rhythm::NotSvt => Envelope {
            hbr: (60.0, 100.0),
            pr_ms: Some((120.0, 200.0)),
            rmssd_ms: (21.0, 70.0),
        },
        Rhythm::Ncsvt => Envelope {
            hbr: (101.0, 250.0),
            pr_ms: Some((120.0, 200.0)),
            rmssd_ms: (21.0, 70.0),
        },
        Rhythm::Af => Envelope {
            hbr: (101.0, 175.0),
            pr_ms: None,
            rmssd_ms: (80.0, 200.0),
        },
        Rhythm::Wpw => Envelope {
            hbr: (160.0, 300.0),
            pr_ms: Some((80.0, 119.0)),
            rmssd_ms: (21.0, 70.0),
        },
    }
}

/// Draw `n_per_class` labeled feature vectors for each rhythm.
///
/// With `spread = 0` every vector lies inside its class's triage envelope.
/// Positive `spread` adds Gaussian jitter to rate, PR, QRS width, RMSSD and
/// P-wave fraction, letting classes bleed across boundaries.
pub fn synth_dataset(n_per_class: usize, seed: u64, spread: f64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = Vec::with_capacity(4 * n_per_class);
    for label in Rhythm::ALL {
        let env = envelope(label);
        for _ in 0..n_per_class {
            let draw = |rng: &mut ChaCha8Rng, lo: f64, hi: f64, jitter: f64| {
                rng.random_range(lo..=hi) + spread * jitter * unit.sample(rng)
            };

            let hbr_raw = draw(&mut rng, env.hbr.0, env.hbr.1, HBR_JITTER_BPM).max(30.0);
            let mean_rr = 60.0 / hbr_raw;
            let base_p = if env.pr_ms.is_some() { 1.0 } else { 0.0 };
            let p_shift = draw(&mut rng, 0.0, 0.0, P_FRAC_JITTER).abs();
            let p_present_frac = (base_p - (base_p * 2.0 - 1.0) * p_shift).clamp(0.0, 1.0);
            let pr_interval = env
                .pr_ms
                .map(|(lo, hi)| draw(&mut rng, lo, hi, PR_JITTER_MS).max(20.0));
            let qrs_duration = draw(&mut rng, 0.06, 0.10, QRS_JITTER_S).max(0.02);
            let rmssd = draw(&mut rng, env.rmssd_ms.0, env.rmssd_ms.1, RMSSD_JITTER_MS).max(0.0);
            let sdsd = rmssd * rng.random_range(0.9..=1.1);

            let fv = FeatureVector {
                mean_rr,
                ibi: 1000.0 * mean_rr,
                hbr: hbr_raw.round(),
                qrs_duration,
                qrs_class: QrsClass::from_duration(qrs_duration),
                pr_interval,
                p_present_frac,
                rmssd,
                sdsd,
                n_beats: 30,
            };
            out.push((fv, label));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PWave {
    pub amp_mv: f64,
    /// Time from P peak to Q, seconds.
    pub pr_s: f64,
}

/// Parameters of a synthetic single-lead ECG.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcgParams {
    pub fs: f64,
    pub duration_s: f64,
    pub mean_rr_s: f64,
    /// Each RR interval is `mean_rr_s` plus a uniform draw in `±rr_jitter_s`.
    pub rr_jitter_s: f64,
    pub r_amp_mv: f64,
    pub qrs_width_s: f64,
    pub p_wave: Option<PWave>,
    pub t_amp_mv: f64,
    /// Amplitude of 4-8 Hz fibrillatory baseline activity.
    pub fibrillation_mv: f64,
    pub noise_mv: f64,
    pub seed: u64,
}

impl EcgParams {
    /// A regular sinus rhythm at `bpm`.
    pub fn sinus(fs: f64, duration_s: f64, bpm: f64, seed: u64) -> Self {
        EcgParams {
            fs,
            duration_s,
            mean_rr_s: 60.0 / bpm,
            rr_jitter_s: 0.0,
            r_amp_mv: 1.2,
            qrs_width_s: 0.08,
            p_wave: Some(PWave {
                amp_mv: 0.15,
                pr_s: 0.16,
            }),
            t_amp_mv: 0.2,
            fibrillation_mv: 0.0,
            noise_mv: 0.0,
            seed,
        }
    }

    /// Archetype waveform for each triage class.
    pub fn archetype(label: Rhythm, fs: f64, duration_s: f64, seed: u64) -> Self {
        let base = EcgParams::sinus(fs, duration_s, 72.0, seed);
        match label {
            Rhythm::NotSvt => EcgParams {
                rr_jitter_s: 0.03,
                ..base
            },
            Rhythm::Ncsvt => EcgParams {
                mean_rr_s: 60.0 / 140.0,
                rr_jitter_s: 0.01,
                t_amp_mv: 0.1,
                ..base
            },
            Rhythm::Af => EcgParams {
                mean_rr_s: 60.0 / 130.0,
                rr_jitter_s: 0.12,
                p_wave: None,
                t_amp_mv: 0.03,
                fibrillation_mv: 0.02,
                ..base
            },
            Rhythm::Wpw => EcgParams {
                mean_rr_s: 60.0 / 190.0,
                rr_jitter_s: 0.005,
                p_wave: Some(PWave {
                    amp_mv: 0.15,
                    pr_s: 0.09,
                }),
                t_amp_mv: 0.06,
                ..base
            },
        }
    }
}

/// A generated waveform and the landmarks planted in it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEcg {
    pub signal: Vec<f64>,
    pub r: Vec<usize>,
    pub q: Vec<usize>,
    pub s: Vec<usize>,
    pub p: Vec<Option<usize>>,
}

fn gaussian(t: f64, centre: f64, sigma: f64) -> f64 {
    (-0.5 * ((t - centre) / sigma).powi(2)).exp()
}

/// Render a sum-of-Gaussians ECG. Each beat has Q, R and S deflections at
/// `-0.4 w`, `0` and `+0.4 w` around the R time (`w` the QRS width), an
/// optional P wave `pr_s` before Q and a T wave after S.
pub fn synth_ecg(params: &EcgParams) -> SyntheticEcg {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let fs = params.fs;
    let n = (params.duration_s * fs).round() as usize;
    let w = params.qrs_width_s;

    let mut beats = Vec::new();
    let mut t = 0.45 + params.p_wave.map_or(0.0, |p| p.pr_s);
    while t < params.duration_s - 0.3 {
        beats.push(t);
        let jitter = if params.rr_jitter_s > 0.0 {
            rng.random_range(-params.rr_jitter_s..=params.rr_jitter_s)
        } else {
            0.0
        };
        t += (params.mean_rr_s + jitter).max(0.2);
    }

    let mut signal = vec![0.0; n];
    for (k, &tr) in beats.iter().enumerate() {
        let rr_next = beats.get(k + 1).map_or(params.mean_rr_s, |&next| next - tr);
        let t_peak = tr + 0.4 * w + 0.35 * rr_next.sqrt() - 0.1;
        let lo = ((tr - 0.5) * fs).floor().max(0.0) as usize;
        let hi = (((tr + 0.7) * fs).ceil() as usize).min(n);
        for (i, v) in signal.iter_mut().enumerate().take(hi).skip(lo) {
            let ti = i as f64 / fs;
            *v += params.r_amp_mv * gaussian(ti, tr, w / 8.0)
                - 0.15 * params.r_amp_mv * gaussian(ti, tr - 0.4 * w, w / 10.0)
                - 0.25 * params.r_amp_mv * gaussian(ti, tr + 0.4 * w, w / 10.0)
                + params.t_amp_mv * gaussian(ti, t_peak, 0.04);
            if let Some(p) = params.p_wave {
                *v += p.amp_mv * gaussian(ti, tr - 0.4 * w - p.pr_s, 0.02);
            }
        }
    }

    if params.fibrillation_mv > 0.0 {
        let comps: Vec<(f64, f64)> = (0..3)
            .map(|_| (rng.random_range(4.0..8.0), rng.random_range(0.0..2.0 * PI)))
            .collect();
        for (i, v) in signal.iter_mut().enumerate() {
            let ti = i as f64 / fs;
            *v += comps
                .iter()
                .map(|(f, ph)| params.fibrillation_mv * (2.0 * PI * f * ti + ph).sin())
                .sum::<f64>();
        }
    }
    if params.noise_mv > 0.0 {
        let noise = Normal::new(0.0, params.noise_mv).expect("noise sigma is positive");
        for v in &mut signal {
            *v += noise.sample(&mut rng);
        }
    }

    let idx = |t: f64| ((t * fs).round() as usize).min(n.saturating_sub(1));
    SyntheticEcg {
        r: beats.iter().map(|&t| idx(t)).collect(),
        q: beats.iter().map(|&t| idx(t - 0.4 * w)).collect(),
        s: beats.iter().map(|&t| idx(t + 0.4 * w)).collect(),
        p: beats
            .iter()
            .map(|&t| params.p_wave.map(|p| idx(t - 0.4 * w - p.pr_s)))
            .collect(),
        signal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{rule_classify, RuleTable};

    #[test]
    fn zero_spread_stays_inside_rules() {
        let rules = RuleTable::default();
        for (fv, label) in synth_dataset(200, 7, 0.0) {
            assert_eq!(rule_classify(&fv, &rules).label, label, "{fv:?}");
        }
    }

    #[test]
    fn seeded_and_sized() {
        let a = synth_dataset(10, 3, 0.15);
        assert_eq!(a.len(), 40);
        assert_eq!(a, synth_dataset(10, 3, 0.15));
        assert_ne!(a, synth_dataset(10, 4, 0.15));
    }

    #[test]
    fn hbr_consistent_with_mean_rr() {
        for (fv, _) in synth_dataset(50, 11, 0.3) {
            assert!((fv.hbr - 60.0 / fv.mean_rr).abs() <= 0.5 + 1e-9);
            assert!((fv.ibi - 1000.0 * fv.mean_rr).abs() < 1e-9);
            assert!((0.0..=1.0).contains(&fv.p_present_frac));
        }
    }

    #[test]
    fn af_has_high_rmssd() {
        assert!(synth_dataset(50, 1, 0.0)
            .iter()
            .filter(|(_, l)| *l == Rhythm::Af)
            .all(|(fv, _)| fv.rmssd > 70.0));
    }

    #[test]
    fn ecg_landmarks_are_ordered() {
        let e = synth_ecg(&EcgParams::sinus(250.0, 10.0, 60.0, 0));
        assert_eq!(e.signal.len(), 2500);
        assert!(e.r.len() >= 9);
        for k in 0..e.r.len() {
            assert!(e.p[k].unwrap() < e.q[k] && e.q[k] < e.r[k] && e.r[k] < e.s[k]);
            assert!(e.signal[e.r[k]] > 1.0);
        }
    }
}
