//! Detect fiducials on the bundled record and write an annotated SVG plus
//! the CSV of plotted points to a temporary directory.
//!
//!     cargo run --example plot_record [out_dir]

use std::path::PathBuf;

use svtscope::cli::{emit_plot, open_record, process_record, PipelineConfig, PlotOptions};

fn main() -> svtscope::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("svtscope-plot"));
    std::fs::create_dir_all(&out).expect("output directory");
    let input = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/sinus128.hea");

    let processed = process_record(open_record(&input, None)?, &PipelineConfig::default())?;
    let opts = PlotOptions {
        title: format!("{} with detected R/Q/S/P", processed.record.name()),
        ..PlotOptions::default()
    };
    let svg = out.join("sinus128.svg");
    let csv = emit_plot(
        processed.record.signal(),
        processed.record.fs(),
        &processed.beats,
        Some(&processed.stages.baseline),
        &opts,
        &svg,
    )?;
    println!("{} beats plotted", processed.beats.len());
    println!("wrote {} and {}", svg.display(), csv.display());
    Ok(())
}
