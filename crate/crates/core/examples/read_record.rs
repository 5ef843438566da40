//! Load a WFDB-style record (header + format 212 data + annotations) and
//! print its layout. Defaults to the bundled two-channel test record.
//!
//!     cargo run --example read_record [path/to/record.hea]

use std::path::PathBuf;

use svtscope::signal_io::{load_record, parse_header};

fn main() -> svtscope::Result<()> {
    let header_path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/sinus128.hea"));
    let text = std::fs::read_to_string(&header_path).expect("readable header");
    let header = parse_header(&text)?;
    let dir = header_path.parent().unwrap();
    let data = dir.join(&header.signals[0].file_name);
    let ann = header_path.with_extension("ann");
    let record = load_record(&header_path, &data, ann.is_file().then_some(ann.as_path()))?;

    println!(
        "{}: {} signals, {} samples at {} Hz",
        record.name(),
        record.header.n_signals,
        record.header.n_samples,
        record.fs()
    );
    for (spec, ch) in record.header.signals.iter().zip(&record.channels) {
        let (lo, hi) = ch.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        println!(
            "  {:<6} fmt {} gain {} baseline {}  range [{lo:.3}, {hi:.3}] mV",
            spec.description, spec.format, spec.gain, spec.baseline
        );
    }
    if let Some(a) = &record.annotations {
        let marks: Vec<String> = a.iter().take(6).map(|a| format!("{}@{}", a.label.as_str(), a.sample)).collect();
        println!("  {} annotations: {} ...", a.len(), marks.join(" "));
    }
    Ok(())
}
