//! Build a confusion matrix by hand, compute the metrics and write the
//! three report files.
//!
//!     cargo run --example metrics_report [out_dir]

use std::path::PathBuf;

use svtscope::classify::Rhythm::{Af, Ncsvt, Wpw};
use svtscope::classify::RhythmClass;
use svtscope::eval::{confusion_csv, format_class_table, metrics, write_reports, ConfusionMatrix, Evaluation};

fn main() -> svtscope::Result<()> {
    let mut pairs = Vec::new();
    pairs.extend(std::iter::repeat_n((Ncsvt, Ncsvt), 16));
    pairs.push((Ncsvt, Wpw));
    pairs.extend(std::iter::repeat_n((Af, Ncsvt), 2));
    pairs.extend(std::iter::repeat_n((Af, Af), 20));
    pairs.extend(std::iter::repeat_n((Wpw, Wpw), 20));
    let cm = ConfusionMatrix::from_pairs(pairs.iter().copied());
    let report = metrics(&cm)?;
    print!("{}", format_class_table("Hand-built matrix", &report));
    print!("\n{}", confusion_csv(&cm));

    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("svtscope-metrics"));
    let eval = Evaluation {
        title: "Hand-built".into(),
        confusion: cm,
        report,
        predictions: pairs.iter().map(|&(_, p)| RhythmClass::certain(p)).collect(),
        warnings: Vec::new(),
    };
    write_reports(&out, &[&eval])?;
    println!("\nreports written to {}", out.display());
    Ok(())
}
