//! Train a decision tree on synthetic features, save it, load it back and
//! classify a few unseen vectors with both the model and the rule table.
//!
//!     cargo run --example train_and_save

use svtscope::classify::{fit, load_model, predict, rule_classify, save_model, Hyperparams, ModelKind, RuleTable};
use svtscope::eval::synth_dataset;

fn main() -> svtscope::Result<()> {
    let train = synth_dataset(100, 1, 0.1);
    let model = fit(ModelKind::Tree, &train, &Hyperparams::default())?;
    let path = std::env::temp_dir().join("svtscope-example.svtm");
    save_model(&model, &path)?;
    let loaded = load_model(&path)?;
    assert_eq!(loaded, model);
    println!("saved and reloaded {} ({} bytes)", path.display(), std::fs::metadata(&path).unwrap().len());

    let rules = RuleTable::default();
    println!("{:<8} {:>5} {:>7} {:<8} {:<8}", "truth", "hbr", "PR", "tree", "rules");
    for (fv, truth) in synth_dataset(2, 99, 0.1) {
        println!(
            "{:<8} {:>5} {:>7} {:<8} {:<8}",
            truth.as_str(),
            fv.hbr,
            fv.pr_interval.map_or("-".into(), |p| format!("{p:.0}")),
            predict(&loaded, &fv).label.as_str(),
            rule_classify(&fv, &rules).label.as_str()
        );
    }
    Ok(())
}
