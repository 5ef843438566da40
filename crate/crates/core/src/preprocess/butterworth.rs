//! Butterworth bandpass design as a cascade of biquads, plus forward and
//! forward-backward (zero-phase) application.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Bandpass design parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    /// Lower -3 dB edge in Hz.
    pub low_cut: f64,
    /// Upper -3 dB edge in Hz.
    pub high_cut: f64,
    /// Order of the lowpass prototype; the bandpass has twice as many poles.
    pub order: usize,
    pub zero_phase: bool,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            low_cut: 0.5,
            high_cut: 40.0,
            order: 4,
            zero_phase: true,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self, fs: f64) -> Result<()> {
        if self.order == 0 || self.order % 2 != 0 {
            return Err(Error::Design(format!(
                "order must be a positive even integer, got {}",
                self.order
            )));
        }
        if !(self.low_cut > 0.0) {
            return Err(Error::Design(format!(
                "low cutoff must be positive, got {}",
                self.low_cut
            )));
        }
        if !(self.low_cut < self.high_cut) {
            return Err(Error::Design(format!(
                "low cutoff {} must be below high cutoff {}",
                self.low_cut, self.high_cut
            )));
        }
        if !(self.high_cut < fs / 2.0) {
            return Err(Error::Design(format!(
                "high cutoff {} Hz must be below Nyquist ({} Hz)",
                self.high_cut,
                fs / 2.0
            )));
        }
        Ok(())
    }
}

/// Second-order section in direct form II transposed.
/// `a0` is normalized to 1 and not stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = 1.0 + z_inv * self.a[0] + z2 * self.a[1];
        num / den
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// State that makes a constant input `x` produce a constant output.
    fn steady_state(&self, x: f64) -> [f64; 2] {
        let y = self.dc_gain() * x;
        let z2 = self.b[2] * x - self.a[1] * y;
        let z1 = self.b[1] * x - self.a[0] * y + z2;
        [z1, z2]
    }

    fn run(&self, signal: &mut [f64], mut state: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        for x in signal.iter_mut() {
            let y = b0 * *x + state[0];
            state[0] = b1 * *x - a1 * y + state[1];
            state[1] = b2 * *x - a2 * y;
            *x = y;
        }
    }
}

/// A designed bandpass: its sections and how to apply them.
#[derive(Debug, Clone, PartialEq)]
pub struct Bandpass {
    pub sections: Vec<Biquad>,
    pub zero_phase: bool,
}

impl Bandpass {
    /// Complex frequency response of one pass of the cascade at `freq` Hz.
    pub fn response(&self, freq: f64, fs: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq / fs);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    /// Magnitude response as actually applied: squared when zero-phase.
    pub fn gain(&self, freq: f64, fs: f64) -> f64 {
        let g = self.response(freq, fs).norm();
        if self.zero_phase {
            g * g
        } else {
            g
        }
    }

    pub fn total_order(&self) -> usize {
        2 * self.sections.len()
    }

    /// Edge padding used by forward-backward filtering.
    pub fn pad_len(&self) -> usize {
        3 * self.total_order()
    }
}

/// Analog Butterworth bandpass magnitude with the same prewarped edges the
/// digital design uses; the digital filter matches this exactly on the unit
/// circle.
pub fn analytic_magnitude(spec: &FilterSpec, freq: f64, fs: f64) -> f64 {
    let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
    let (w1, w2, w) = (warp(spec.low_cut), warp(spec.high_cut), warp(freq));
    if w == 0.0 {
        return 0.0;
    }
    let omega = ((w * w - w1 * w2) / (w * (w2 - w1))).abs();
    1.0 / (1.0 + omega.powi(2 * spec.order as i32)).sqrt()
}

/// Design a Butterworth bandpass by bilinear transform with prewarped band
/// edges. Sections come out ordered by ascending pole angle and the overall
/// gain is normalized to 1 at the geometric centre frequency.
pub fn design_bandpass(spec: &FilterSpec, fs: f64) -> Result<Bandpass> {
    spec.validate(fs)?;
    let n = spec.order;
    let fs2 = 2.0 * fs;
    let w1 = fs2 * (PI * spec.low_cut / fs).tan();
    let w2 = fs2 * (PI * spec.high_cut / fs).tan();
    let bw = w2 - w1;
    let w0_sq = w1 * w2;

    let mut poles: Vec<Complex64> = Vec::with_capacity(2 * n);
    for k in 0..n {
        let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
        let proto = Complex64::from_polar(1.0, theta);
        let half = proto * bw / 2.0;
        let root = (half * half - w0_sq).sqrt();
        for s in [half + root, half - root] {
            poles.push((fs2 + s) / (fs2 - s));
        }
    }

    // even order: every bandpass pole is complex, one of each conjugate pair kept
    let mut upper: Vec<Complex64> = poles.into_iter().filter(|p| p.im > 0.0).collect();
    if upper.len() != n {
        return Err(Error::Design(format!(
            "expected {n} complex pole pairs, found {}",
            upper.len()
        )));
    }
    upper.sort_by(|a, b| a.arg().total_cmp(&b.arg()));

    let mut sections: Vec<Biquad> = upper
        .iter()
        .map(|p| Biquad {
            // one zero at z = 1 and one at z = -1 per section
            b: [1.0, 0.0, -1.0],
            a: [-2.0 * p.re, p.norm_sqr()],
        })
        .collect();

    let centre = 2.0 * (w0_sq.sqrt() / fs2).atan();
    let z_inv = Complex64::from_polar(1.0, -centre);
    let g = sections
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
        .norm();
    for b in sections[0].b.iter_mut() {
        *b /= g;
    }

    Ok(Bandpass {
        sections,
        zero_phase: spec.zero_phase,
    })
}

fn run_cascade(sections: &[Biquad], data: &mut [f64], prime: bool) {
    let mut level = data.first().copied().unwrap_or(0.0);
    for s in sections {
        let state = if prime { s.steady_state(level) } else { [0.0; 2] };
        level *= s.dc_gain();
        s.run(data, state);
    }
}

/// Filter `signal` with `filter`.
///
/// Single-pass mode starts from rest. Zero-phase mode pads each edge with an
/// odd reflection of `pad_len` samples, primes every section at the
/// steady state of the first sample, runs forward then backward and trims the
/// padding.
pub fn apply_filter(signal: &[f64], filter: &Bandpass) -> Result<Vec<f64>> {
    if !filter.zero_phase {
        let mut out = signal.to_vec();
        run_cascade(&filter.sections, &mut out, false);
        return Ok(out);
    }

    let pad = filter.pad_len();
    let n = signal.len();
    if n <= pad {
        return Err(Error::SignalTooShort {
            len: n,
            min: pad + 1,
        });
    }

    let mut ext = Vec::with_capacity(n + 2 * pad);
    let (first, last) = (signal[0], signal[n - 1]);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
    ext.extend_from_slice(signal);
    ext.extend((1..=pad).map(|i| 2.0 * last - signal[n - 1 - i]));

    run_cascade(&filter.sections, &mut ext, true);
    ext.reverse();
    run_cascade(&filter.sections, &mut ext, true);
    ext.reverse();

    Ok(ext[pad..pad + n].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_at(fs: f64) -> Bandpass {
        design_bandpass(&FilterSpec::default(), fs).unwrap()
    }

    #[test]
    fn sections_are_normalized_and_stable() {
        for fs in [128.0, 250.0, 360.0] {
            let f = default_at(fs);
            assert_eq!(f.sections.len(), 4);
            for s in &f.sections {
                // |pole|^2 = a2 < 1 inside the unit circle
                assert!(s.a[1] < 1.0 && s.a[1] > 0.0);
            }
        }
    }

    #[test]
    fn single_pass_matches_analytic_response() {
        let spec = FilterSpec {
            zero_phase: false,
            ..FilterSpec::default()
        };
        let f = design_bandpass(&spec, 250.0).unwrap();
        for freq in [0.1, 0.5, 1.0, 5.0, 10.0, 25.0, 40.0, 60.0, 100.0] {
            let got = f.response(freq, 250.0).norm();
            let want = analytic_magnitude(&spec, freq, 250.0);
            assert!((got - want).abs() < 1e-9, "{freq} Hz: {got} vs {want}");
        }
    }

    #[test]
    fn band_edges_at_minus_3db() {
        let spec = FilterSpec {
            zero_phase: false,
            ..FilterSpec::default()
        };
        let f = design_bandpass(&spec, 128.0).unwrap();
        for edge in [0.5, 40.0] {
            let g = f.response(edge, 128.0).norm();
            assert!((g - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        }
    }

    #[test]
    fn sixty_hz_attenuation_at_250() {
        let spec = FilterSpec {
            zero_phase: false,
            ..FilterSpec::default()
        };
        let f = design_bandpass(&spec, 250.0).unwrap();
        let g = f.response(60.0, 250.0).norm();
        // prewarped analytic value; the bilinear map steepens the rolloff
        // compared to the unwarped 1/sqrt(1 + 1.5^8) = 0.19
        assert!((g - 0.11325).abs() < 1e-4, "{g}");
        assert!(g < 0.19);
    }

    #[test]
    fn design_rejects_bad_specs() {
        let spec = FilterSpec::default();
        assert!(design_bandpass(&spec, 80.0).is_err());
        assert!(design_bandpass(&spec, 81.0).is_ok());
        for bad in [
            FilterSpec { order: 3, ..spec },
            FilterSpec { order: 0, ..spec },
            FilterSpec { low_cut: 0.0, ..spec },
            FilterSpec { low_cut: 50.0, ..spec },
        ] {
            assert!(design_bandpass(&bad, 250.0).is_err());
        }
    }

    #[test]
    fn zero_phase_needs_padding_room() {
        let f = default_at(250.0);
        assert_eq!(f.pad_len(), 24);
        assert!(matches!(
            apply_filter(&[0.0; 24], &f),
            Err(Error::SignalTooShort { min: 25, .. })
        ));
        assert_eq!(apply_filter(&[0.0; 25], &f).unwrap(), vec![0.0; 25]);
    }

    #[test]
    fn zero_signal_stays_zero() {
        let f = default_at(128.0);
        assert!(apply_filter(&vec![0.0; 500], &f).unwrap().iter().all(|&v| v == 0.0));
    }
}
