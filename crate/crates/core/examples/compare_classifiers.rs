//! Cross-validate the four trainable classifiers and the rule table on the
//! synthetic feature set and print the summary table.
//!
//!     cargo run --release --example compare_classifiers [n_per_class] [spread]

use svtscope::classify::{Hyperparams, ModelKind, RuleTable};
use svtscope::eval::{evaluate_pipeline, format_class_table, format_summary_table, synth_dataset, Scorer, Unit};

fn main() -> svtscope::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(200, |s| s.parse().expect("n_per_class"));
    let spread: f64 = args.next().map_or(0.15, |s| s.parse().expect("spread"));
    let units = Unit::from_examples(&synth_dataset(n, 42, spread));
    let hp = Hyperparams::default();

    let mut evals = Vec::new();
    for kind in ModelKind::ALL {
        let scorer = Scorer::CrossValidate { kind, hyperparams: &hp, folds: 5, seed: 42 };
        evals.push(evaluate_pipeline(&units, scorer)?);
    }
    let rules = RuleTable::default();
    evals.push(evaluate_pipeline(&units, Scorer::Rules(&rules))?);

    let tree = evals.iter().find(|e| e.title == ModelKind::Tree.title()).unwrap();
    println!("{}", format_class_table(&tree.title, &tree.report));
    let rows: Vec<(String, _)> = evals.iter().map(|e| (e.title.clone(), &e.report)).collect();
    print!("{}", format_summary_table(&rows));
    Ok(())
}
