//! Record ingestion: WFDB-style headers, format 212 / format 16 sample
//! files, single-column CSV, and plain-text annotation files.
//!
//! Channel 0 of every [`Record`] is the analysis channel. Samples are held
//! in millivolts after conversion with the per-signal gain and baseline.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Gain assumed when a signal line omits it (ADC units per mV).
pub const DEFAULT_GAIN: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageFormat {
    /// Two 12-bit two's-complement samples packed into three bytes.
    Fmt212,
    /// Signed 16-bit little-endian.
    Fmt16,
    /// Decimal millivolt values, one row per sample.
    Csv,
}

impl FromStr for StorageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        // WFDB allows suffixes such as "212x2:1+0"; only the leading tag matters here
        let tag: String = s
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric())
            .collect();
        match tag.to_ascii_lowercase().as_str() {
            "212" => Ok(StorageFormat::Fmt212),
            "16" => Ok(StorageFormat::Fmt16),
            "csv" => Ok(StorageFormat::Csv),
            _ => Err(Error::UnsupportedFormat(s.to_string())),
        }
    }
}

impl fmt::Display for StorageFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StorageFormat::Fmt212 => f.write_str("212"),
            StorageFormat::Fmt16 => f.write_str("16"),
            StorageFormat::Csv => f.write_str("csv"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub format: StorageFormat,
    /// ADC units per millivolt; never zero.
    pub gain: f64,
    /// ADC value corresponding to 0 mV.
    pub baseline: i32,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub record_name: String,
    pub n_signals: usize,
    /// Sampling rate in Hz.
    pub fs: f64,
    pub n_samples: usize,
    pub signals: Vec<SignalSpec>,
}

impl Header {
    /// Header for an in-memory single-channel millivolt signal.
    pub fn single_channel(record_name: impl Into<String>, fs: f64, n_samples: usize) -> Self {
        Header {
            record_name: record_name.into(),
            n_signals: 1,
            fs,
            n_samples,
            signals: vec![SignalSpec {
                file_name: String::new(),
                format: StorageFormat::Csv,
                gain: 1.0,
                baseline: 0,
                description: "mv".to_string(),
            }],
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.fs > 0.0) || !self.fs.is_finite() {
            return Err(Error::InvalidHeader(format!(
                "sampling rate must be positive, got {}",
                self.fs
            )));
        }
        if self.n_signals == 0 {
            return Err(Error::InvalidHeader("record has no signals".into()));
        }
        if let Some((i, _)) = self.signals.iter().enumerate().find(|(_, s)| s.gain == 0.0) {
            return Err(Error::InvalidHeader(format!("signal {i} has zero gain")));
        }
        Ok(())
    }
}

/// Annotation label vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnnotationLabel {
    /// Normal beat / rhythm.
    N,
    /// Supraventricular beat.
    S,
    Af,
    Wpw,
    Ncsvt,
    /// Reference R-peak position.
    R,
}

impl AnnotationLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            AnnotationLabel::N => "N",
            AnnotationLabel::S => "S",
            AnnotationLabel::Af => "AF",
            AnnotationLabel::Wpw => "WPW",
            AnnotationLabel::Ncsvt => "NCSVT",
            AnnotationLabel::R => "R",
        }
    }
}

impl FromStr for AnnotationLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "N" => AnnotationLabel::N,
            "S" => AnnotationLabel::S,
            "AF" => AnnotationLabel::Af,
            "WPW" => AnnotationLabel::Wpw,
            "NCSVT" => AnnotationLabel::Ncsvt,
            "R" => AnnotationLabel::R,
            other => return Err(format!("unknown label {other:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annotation {
    pub sample: usize,
    pub label: AnnotationLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub header: Header,
    /// Per-signal samples in mV, each `header.n_samples` long.
    pub channels: Vec<Vec<f64>>,
    pub annotations: Option<Vec<Annotation>>,
}

impl Record {
    /// Wrap a single millivolt channel.
    pub fn from_signal(record_name: impl Into<String>, fs: f64, samples: Vec<f64>) -> Result<Self> {
        let header = Header::single_channel(record_name, fs, samples.len());
        header.validate()?;
        Ok(Record {
            header,
            channels: vec![samples],
            annotations: None,
        })
    }

    pub fn fs(&self) -> f64 {
        self.header.fs
    }

    pub fn name(&self) -> &str {
        &self.header.record_name
    }

    /// The analysis channel.
    pub fn signal(&self) -> &[f64] {
        &self.channels[0]
    }

    /// Attach annotations, checking that every index lies inside the record.
    pub fn with_annotations(mut self, annotations: Vec<Annotation>) -> Result<Self> {
        let n = self.header.n_samples;
        if let Some(a) = annotations.iter().find(|a| a.sample >= n) {
            return Err(Error::Integrity(format!(
                "annotation at sample {} outside record of {n} samples",
                a.sample
            )));
        }
        self.annotations = Some(annotations);
        Ok(self)
    }
}

/// Unpack `count` format-212 samples.
///
/// Each three-byte group holds two samples: the first takes byte 0 plus the
/// low nibble of byte 1 as its high bits, the second takes byte 2 plus the
/// high nibble of byte 1. For odd `count` the last group needs only two bytes.
pub fn decode_fmt212(bytes: &[u8], count: usize) -> Result<Vec<i16>> {
    let needed = (count * 3).div_ceil(2);
    if bytes.len() < needed {
        // first byte offset that the decoder could not read
        return Err(Error::Decode {
            offset: bytes.len(),
            needed,
            available: bytes.len(),
        });
    }
    let mut out = Vec::with_capacity(count);
    for (pair, group) in bytes.chunks(3).enumerate() {
        let first = pair * 2;
        if first >= count {
            break;
        }
        let b0 = group[0] as u16;
        let b1 = group[1] as u16;
        out.push(sign_extend_12(b0 | ((b1 & 0x0F) << 8)));
        if first + 1 < count {
            let b2 = group[2] as u16;
            out.push(sign_extend_12(b2 | ((b1 & 0xF0) << 4)));
        }
    }
    Ok(out)
}

fn sign_extend_12(v: u16) -> i16 {
    ((v << 4) as i16) >> 4
}

/// Unpack `count` signed 16-bit little-endian samples.
pub fn decode_fmt16(bytes: &[u8], count: usize) -> Result<Vec<i16>> {
    let needed = count * 2;
    if bytes.len() < needed {
        return Err(Error::Decode {
            offset: bytes.len() & !1,
            needed,
            available: bytes.len(),
        });
    }
    Ok(bytes[..needed]
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]))
        .collect())
}

/// Convert an ADC reading to millivolts.
pub fn adc_to_mv(adc: i32, gain: f64, baseline: i32) -> Result<f64> {
    if gain == 0.0 {
        return Err(Error::InvalidHeader("zero gain".into()));
    }
    Ok((adc - baseline) as f64 / gain)
}

/// Parse WFDB-style header text.
///
/// Record line: `name nsig fs nsamp`. Signal lines:
/// `file format gain[(baseline)][/units] adcres adczero ...`. Lines starting
/// with `#` are comments.
pub fn parse_header(text: &str) -> Result<Header> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (lineno, record_line) = lines.next().ok_or(Error::HeaderParse {
        line: 1,
        msg: "empty header".into(),
    })?;
    let fields: Vec<&str> = record_line.split_whitespace().collect();
    if fields.len() < 4 {
        return Err(Error::HeaderParse {
            line: lineno,
            msg: format!("record line needs name, signal count, fs and sample count, got {record_line:?}"),
        });
    }
    let record_name = fields[0].split('/').next().unwrap_or(fields[0]).to_string();
    let n_signals: usize = parse_field(fields[1], lineno, "signal count")?;
    // "360/1.0(0)" carries counter frequency and base counter after the rate
    let fs_text = fields[2].split('/').next().unwrap_or(fields[2]);
    let fs: f64 = parse_field(fs_text, lineno, "sampling rate")?;
    let n_samples: usize = parse_field(fields[3], lineno, "sample count")?;

    if n_signals == 0 {
        return Err(Error::HeaderParse {
            line: lineno,
            msg: "signal count must be at least 1".into(),
        });
    }
    if !(fs > 0.0) || !fs.is_finite() {
        return Err(Error::HeaderParse {
            line: lineno,
            msg: format!("sampling rate must be positive, got {fs_text}"),
        });
    }

    let mut signals = Vec::with_capacity(n_signals);
    for _ in 0..n_signals {
        let (lineno, line) = lines.next().ok_or(Error::HeaderParse {
            line: lineno + 1,
            msg: format!("expected {n_signals} signal lines, found {}", signals.len()),
        })?;
        signals.push(parse_signal_line(line, lineno)?);
    }

    let header = Header {
        record_name,
        n_signals,
        fs,
        n_samples,
        signals,
    };
    header.validate()?;
    Ok(header)
}

fn parse_field<T: FromStr>(text: &str, line: usize, what: &str) -> Result<T> {
    text.parse().map_err(|_| Error::HeaderParse {
        line,
        msg: format!("{what} is not numeric: {text:?}"),
    })
}

fn parse_signal_line(line: &str, lineno: usize) -> Result<SignalSpec> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(Error::HeaderParse {
            line: lineno,
            msg: "signal line needs at least file name and format".into(),
        });
    }
    let format: StorageFormat = fields[1].parse()?;

    let mut gain = DEFAULT_GAIN;
    let mut baseline: Option<i32> = None;
    if let Some(gain_field) = fields.get(2) {
        let gain_field = gain_field.split('/').next().unwrap_or(gain_field);
        let (gain_text, base_text) = match gain_field.split_once('(') {
            Some((g, rest)) => (g, Some(rest.trim_end_matches(')'))),
            None => (gain_field, None),
        };
        let g: f64 = parse_field(gain_text, lineno, "gain")?;
        // a literal zero gain means "uncalibrated" and falls back to the default
        if g != 0.0 {
            gain = g;
        }
        if let Some(b) = base_text {
            baseline = Some(parse_field(b, lineno, "baseline")?);
        }
    }
    if baseline.is_none() {
        // adczero doubles as baseline when no explicit baseline is given
        if let Some(zero) = fields.get(4) {
            baseline = Some(parse_field(zero, lineno, "ADC zero")?);
        }
    }
    let description = if fields.len() > 8 {
        fields[8..].join(" ")
    } else {
        String::new()
    };

    Ok(SignalSpec {
        file_name: fields[0].to_string(),
        format,
        gain,
        baseline: baseline.unwrap_or(0),
        description,
    })
}

/// Parse `<sample_index> <label>` lines.
pub fn parse_annotations(text: &str) -> Result<Vec<Annotation>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(idx), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Annotation {
                line: i + 1,
                msg: format!("expected `<sample> <label>`, got {line:?}"),
            });
        };
        let sample = idx.parse().map_err(|_| Error::Annotation {
            line: i + 1,
            msg: format!("sample index is not a non-negative integer: {idx:?}"),
        })?;
        let label = label.parse().map_err(|msg| Error::Annotation { line: i + 1, msg })?;
        out.push(Annotation { sample, label });
    }
    Ok(out)
}

/// Read a CSV file of millivolt samples.
///
/// Uses the column named `mv` when present; otherwise every column becomes a
/// channel in header order.
pub fn load_csv(path: &Path, fs: f64) -> Result<Record> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv_record(&text, &name, fs)
}

fn parse_csv_record(text: &str, name: &str, fs: f64) -> Result<Record> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let columns: Vec<(usize, String)> = match headers.iter().position(|h| h.eq_ignore_ascii_case("mv")) {
        Some(i) => vec![(i, "mv".to_string())],
        None => headers.iter().map(|h| h.to_string()).enumerate().collect(),
    };
    if columns.is_empty() {
        return Err(Error::Csv("no columns".into()));
    }
    let mut channels = vec![Vec::new(); columns.len()];
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        for (ch, (col, col_name)) in columns.iter().enumerate() {
            let cell = rec.get(*col).ok_or_else(|| {
                Error::Csv(format!("row {}: missing column {col_name}", row + 2))
            })?;
            let v: f64 = cell.parse().map_err(|_| {
                Error::Csv(format!("row {}: {col_name} is not numeric: {cell:?}", row + 2))
            })?;
            channels[ch].push(v);
        }
    }
    let n_samples = channels[0].len();
    let header = Header {
        record_name: name.to_string(),
        n_signals: columns.len(),
        fs,
        n_samples,
        signals: columns
            .into_iter()
            .map(|(_, description)| SignalSpec {
                file_name: String::new(),
                format: StorageFormat::Csv,
                gain: 1.0,
                baseline: 0,
                description,
            })
            .collect(),
    };
    header.validate()?;
    Ok(Record {
        header,
        channels,
        annotations: None,
    })
}

/// Load a record from a header and its data file, with optional annotations.
///
/// A missing annotation path is not an error; annotations are only needed
/// for labeled evaluation.
pub fn load_record(
    header_path: &Path,
    data_path: &Path,
    annotation_path: Option<&Path>,
) -> Result<Record> {
    let text = fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header = parse_header(&text)?;
    let format = header.signals[0].format;
    if header.signals.iter().any(|s| s.format != format) {
        return Err(Error::UnsupportedFormat(
            "mixed storage formats within one record".into(),
        ));
    }

    let record = match format {
        StorageFormat::Csv => {
            let text = fs::read_to_string(data_path).map_err(|e| Error::io(data_path, e))?;
            let mut rec = parse_csv_record(&text, &header.record_name, header.fs)?;
            if rec.header.n_samples != header.n_samples || rec.channels.len() != header.n_signals {
                return Err(Error::Integrity(format!(
                    "header declares {} signals x {} samples, CSV holds {} x {}",
                    header.n_signals,
                    header.n_samples,
                    rec.channels.len(),
                    rec.header.n_samples
                )));
            }
            rec.header = header;
            rec
        }
        StorageFormat::Fmt212 | StorageFormat::Fmt16 => {
            let bytes = fs::read(data_path).map_err(|e| Error::io(data_path, e))?;
            decode_binary(header, &bytes)?
        }
    };

    match annotation_path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            record.with_annotations(parse_annotations(&text)?)
        }
        None => Ok(record),
    }
}

/// Decode an interleaved binary sample block for `header`.
pub fn decode_binary(header: Header, bytes: &[u8]) -> Result<Record> {
    let total = header.n_samples * header.n_signals;
    let format = header.signals[0].format;
    let expected = match format {
        StorageFormat::Fmt212 => (total * 3).div_ceil(2),
        StorageFormat::Fmt16 => total * 2,
        StorageFormat::Csv => unreachable!("CSV is not a binary format"),
    };
    if bytes.len() != expected {
        return Err(Error::Integrity(format!(
            "header declares {} samples x {} signals ({expected} bytes of fmt {format}), data holds {} bytes",
            header.n_samples,
            header.n_signals,
            bytes.len()
        )));
    }
    let raw = match format {
        StorageFormat::Fmt212 => decode_fmt212(bytes, total)?,
        _ => decode_fmt16(bytes, total)?,
    };
    let mut channels = vec![Vec::with_capacity(header.n_samples); header.n_signals];
    for frame in raw.chunks_exact(header.n_signals) {
        for ((ch, &adc), spec) in channels.iter_mut().zip(frame).zip(&header.signals) {
            ch.push(adc_to_mv(adc as i32, spec.gain, spec.baseline)?);
        }
    }
    Ok(Record {
        header,
        channels,
        annotations: None,
    })
}
