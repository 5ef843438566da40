//! Running median with replicated edges, and the two-stage median baseline
//! estimator built on it.

use crate::error::{Error, Result};

/// Window fractions of the sampling rate for the two median stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetrendSpec {
    pub w1_frac: f64,
    pub w2_frac: f64,
}

impl Default for DetrendSpec {
    fn default() -> Self {
        DetrendSpec {
            w1_frac: 0.2,
            w2_frac: 0.6,
        }
    }
}

impl DetrendSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.w1_frac > 0.0 && self.w1_frac < self.w2_frac) {
            return Err(Error::Design(format!(
                "detrend windows need 0 < w1 < w2, got {} and {}",
                self.w1_frac, self.w2_frac
            )));
        }
        Ok(())
    }

    /// Window lengths in samples, each rounded and then bumped to odd.
    pub fn windows(&self, fs: f64) -> (usize, usize) {
        (odd_window(self.w1_frac * fs), odd_window(self.w2_frac * fs))
    }
}

/// `round(len)`, incremented when even; never below 1.
pub fn odd_window(len: f64) -> usize {
    let n = len.round().max(1.0) as usize;
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

/// Median over a centred window of odd length `window`; samples outside the
/// signal take the value of the nearest edge sample.
pub fn median_filter(signal: &[f64], window: usize) -> Vec<f64> {
    assert!(window % 2 == 1, "median window must be odd");
    let n = signal.len();
    if n == 0 {
        return Vec::new();
    }
    let half = window / 2;
    let at = |i: isize| signal[i.clamp(0, n as isize - 1) as usize];

    // sorted copy of the current window, updated by one removal and one insertion per step
    let mut sorted: Vec<f64> = (-(half as isize)..=half as isize).map(at).collect();
    sorted.sort_by(f64::total_cmp);

    let mut out = Vec::with_capacity(n);
    for i in 0..n as isize {
        out.push(sorted[half]);
        let leaving = at(i - half as isize);
        let entering = at(i + half as isize + 1);
        let pos = sorted
            .binary_search_by(|v| v.total_cmp(&leaving))
            .expect("leaving sample is in the window");
        sorted.remove(pos);
        let pos = sorted
            .binary_search_by(|v| v.total_cmp(&entering))
            .unwrap_or_else(|p| p);
        sorted.insert(pos, entering);
    }
    out
}

/// Baseline by a short median followed by a long one; returns
/// `(signal - baseline, baseline)`.
pub fn detrend(signal: &[f64], spec: &DetrendSpec, fs: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    let (w1, w2) = spec.windows(fs);
    if signal.len() < w2 {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            min: w2,
        });
    }
    let baseline = median_filter(&median_filter(signal, w1), w2);
    let detrended = signal.iter().zip(&baseline).map(|(x, b)| x - b).collect();
    Ok((detrended, baseline))
}
