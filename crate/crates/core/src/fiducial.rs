//! R, Q, S and P fiducial points on a preprocessed channel.
//!
//! R peaks come from a fixed-window argmax scan: the signal is cut into
//! consecutive windows one assumed RR interval long and the maximum of each
//! window is taken as a beat. In robust mode (the default) the raw window
//! maxima are cleaned up afterwards; faithful mode returns them untouched.
//!
//! Q and S split every RR interval in half: the minimum of the left half is
//! the S point of the earlier beat, the minimum of the right half is the Q
//! point of the later one.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Assumed RR interval in seconds; sets the scan window length.
    pub t_rr: f64,
    /// Minimum spacing between reported R peaks.
    pub refractory_ms: f64,
    /// Window maxima below this fraction of the reference peak amplitude are dropped.
    pub amp_floor_frac: f64,
    /// Return the raw window maxima with no corrective passes.
    pub faithful: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            t_rr: 0.6,
            refractory_ms: 200.0,
            amp_floor_frac: 0.3,
            faithful: false,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.6..=1.0).contains(&self.t_rr) {
            return Err(Error::Config(format!("t_rr must lie in [0.6, 1.0] s, got {}", self.t_rr)));
        }
        if !(self.refractory_ms > 0.0) {
            return Err(Error::Config(format!(
                "refractory period must be positive, got {} ms",
                self.refractory_ms
            )));
        }
        if !(0.0..1.0).contains(&self.amp_floor_frac) {
            return Err(Error::Config(format!(
                "amplitude floor must lie in [0, 1), got {}",
                self.amp_floor_frac
            )));
        }
        Ok(())
    }

    /// Scan window length in samples.
    pub fn window_len(&self, fs: f64) -> usize {
        ((self.t_rr * fs).round() as usize).max(1)
    }
}

/// Landmarks of one beat, as sample indices into the analysis channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FiducialSet {
    pub r: usize,
    pub q: Option<usize>,
    pub s: Option<usize>,
    pub p: Option<usize>,
    pub p_present: bool,
}

impl FiducialSet {
    pub fn qrs_samples(&self) -> Option<usize> {
        match (self.q, self.s) {
            (Some(q), Some(s)) => Some(s - q),
            _ => None,
        }
    }
}

/// Secondary peaks inside a window must reach this fraction of the window maximum.
const SECONDARY_PEAK_FRAC: f64 = 0.5;
/// How far a window maximum may move uphill to reach a true local maximum.
const SNAP_RADIUS: usize = 2;
const REFERENCE_PERCENTILE: f64 = 0.98;

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate() {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate() {
        if v < xs[best] {
            best = i;
        }
    }
    best
}

fn is_local_max(signal: &[f64], i: usize) -> bool {
    let v = signal[i];
    (i == 0 || signal[i - 1] <= v) && (i + 1 == signal.len() || signal[i + 1] <= v)
}

/// Nearest-rank percentile of `values` (`q` in [0, 1]).
fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Climb from `i` towards the larger neighbour for at most `SNAP_RADIUS`
/// steps; `None` if no local maximum is reached.
fn snap_to_peak(signal: &[f64], mut i: usize) -> Option<usize> {
    for _ in 0..=SNAP_RADIUS {
        if is_local_max(signal, i) {
            return Some(i);
        }
        let left = if i > 0 { signal[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < signal.len() { signal[i + 1] } else { f64::NEG_INFINITY };
        i = if right > left { i + 1 } else { i - 1 };
    }
    None
}

/// Raw window maxima: one candidate per window of `t_rr * fs` samples,
/// including a final short window for the tail.
pub fn window_maxima(signal: &[f64], window: usize) -> Vec<usize> {
    signal
        .chunks(window)
        .enumerate()
        .map(|(w, chunk)| w * window + argmax(chunk))
        .collect()
}

/// Detect R peaks. Output is strictly ascending.
///
/// Robust mode applies, in order: an amplitude floor relative to the 98th
/// percentile of the window maxima, recovery of further strong local maxima
/// inside each window (more than one beat per window happens whenever the
/// RR interval is shorter than `t_rr`), snapping to a local maximum within two
/// samples, and a refractory merge that keeps the taller of two close peaks.
pub fn detect_r_peaks(signal: &[f64], fs: f64, cfg: &DetectorConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    let window = cfg.window_len(fs);
    if signal.is_empty() || signal.len() < window {
        return Err(Error::Detection(format!(
            "signal of {} samples is shorter than one {window}-sample scan window",
            signal.len()
        )));
    }

    let maxima = window_maxima(signal, window);
    if cfg.faithful {
        return Ok(maxima);
    }

    let amps: Vec<f64> = maxima.iter().map(|&i| signal[i]).collect();
    let floor = cfg.amp_floor_frac * percentile(&amps, REFERENCE_PERCENTILE);
    let accept = |v: f64| v > 0.0 && v >= floor;

    let mut candidates = Vec::new();
    for (w, &top) in maxima.iter().enumerate() {
        let top_amp = signal[top];
        if !accept(top_amp) {
            continue;
        }
        candidates.push(top);
        let start = w * window;
        let end = (start + window).min(signal.len());
        let secondary = top_amp * SECONDARY_PEAK_FRAC;
        for i in start..end {
            if i != top && signal[i] >= secondary && accept(signal[i]) && is_local_max(signal, i) {
                candidates.push(i);
            }
        }
    }

    let mut snapped: Vec<usize> = candidates
        .into_iter()
        .filter_map(|i| snap_to_peak(signal, i))
        .collect();
    snapped.sort_unstable();
    snapped.dedup();

    let min_gap = cfg.refractory_ms * fs / 1000.0;
    let mut peaks: Vec<usize> = Vec::with_capacity(snapped.len());
    for i in snapped {
        match peaks.last_mut() {
            Some(last) if ((i - *last) as f64) < min_gap => {
                if signal[i] > signal[*last] {
                    *last = i;
                }
            }
            _ => peaks.push(i),
        }
    }
    Ok(peaks)
}

/// Successive R-R intervals in seconds.
pub fn rr_intervals(r_peaks: &[usize], fs: f64) -> Result<Vec<f64>> {
    if r_peaks.len() < 2 {
        return Err(Error::InsufficientBeats {
            needed: 2,
            got: r_peaks.len(),
        });
    }
    Ok(r_peaks
        .windows(2)
        .map(|w| (w[1] as f64 - w[0] as f64) / fs)
        .collect())
}

/// Q and S points for every R peak, as `(q, s)` pairs.
///
/// The first beat's Q is the minimum before the first R (absent when the
/// first R is at sample 0); the last beat's S is the minimum after the last
/// R (absent when nothing follows it).
pub fn detect_qs(signal: &[f64], r_peaks: &[usize]) -> Result<Vec<(Option<usize>, Option<usize>)>> {
    if let Some(&bad) = r_peaks.iter().find(|&&r| r >= signal.len()) {
        return Err(Error::Detection(format!(
            "R index {bad} outside signal of {} samples",
            signal.len()
        )));
    }
    if r_peaks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Detection("R peaks must be strictly increasing".into()));
    }
    let Some((&first, &last)) = r_peaks.first().zip(r_peaks.last()) else {
        return Ok(Vec::new());
    };

    let mut out: Vec<(Option<usize>, Option<usize>)> = vec![(None, None); r_peaks.len()];
    if first > 0 {
        out[0].0 = Some(argmin(&signal[..first]));
    }
    for (i, pair) in r_peaks.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let gap = b - a - 1;
        if gap == 0 {
            continue;
        }
        // left half gets the odd sample
        let mid = a + 1 + gap.div_ceil(2);
        out[i].1 = Some(a + 1 + argmin(&signal[a + 1..mid]));
        if mid < b {
            out[i + 1].0 = Some(mid + argmin(&signal[mid..b]));
        }
    }
    if last + 1 < signal.len() {
        let n = out.len();
        out[n - 1].1 = Some(last + 1 + argmin(&signal[last + 1..]));
    }
    Ok(out)
}

/// P-wave search window bounds relative to Q, in seconds.
pub const P_WINDOW_START_S: f64 = 0.30;
pub const P_WINDOW_END_S: f64 = 0.04;
/// Minimum P prominence over the window median, mV.
pub const P_PROMINENCE_MV: f64 = 0.05;

/// Look for a P wave before the beat's Q point.
///
/// Returns the window argmax and whether it stands at least
/// [`P_PROMINENCE_MV`] above the window median. No Q, or a window that would
/// start before the record, gives `(None, false)`.
pub fn detect_p(signal: &[f64], beat: &FiducialSet, fs: f64) -> (Option<usize>, bool) {
    detect_p_after(signal, beat, fs, 0)
}

/// [`detect_p`] with the window start clipped at `floor`. Passing the
/// sample after the previous beat's S keeps a short RR interval from
/// pulling the previous QRS into the window.
pub fn detect_p_after(signal: &[f64], beat: &FiducialSet, fs: f64, floor: usize) -> (Option<usize>, bool) {
    let Some(q) = beat.q else {
        return (None, false);
    };
    let start = q as isize - (P_WINDOW_START_S * fs).round() as isize;
    let end = q as isize - (P_WINDOW_END_S * fs).round() as isize;
    let start = start.max(floor as isize).max(0) as usize;
    if end <= start as isize {
        return (None, false);
    }
    let window = &signal[start..end as usize];
    let p = start + argmax(window);
    let mut sorted = window.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    (Some(p), signal[p] - median >= P_PROMINENCE_MV)
}

/// Run R, Q/S and P detection and assemble per-beat landmarks.
pub fn detect_beats(signal: &[f64], fs: f64, cfg: &DetectorConfig) -> Result<Vec<FiducialSet>> {
    let r_peaks = detect_r_peaks(signal, fs, cfg)?;
    let qs = detect_qs(signal, &r_peaks)?;
    let mut floor = 0;
    Ok(r_peaks
        .iter()
        .zip(qs)
        .map(|(&r, (q, s))| {
            let mut beat = FiducialSet {
                r,
                q,
                s,
                p: None,
                p_present: false,
            };
            let (p, present) = detect_p_after(signal, &beat, fs, floor);
            beat.p = p;
            beat.p_present = present;
            floor = s.map_or(r, |s| s) + 1;
            beat
        })
        .collect())
}
