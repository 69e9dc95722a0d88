// Generate synthetic packs, fit on train, evaluate test vs OOD and write
// report.json, f1_curve.csv and histogram.csv.

use hdff::harness::export::write_eval_outputs;
use hdff::harness::{cmd_eval, cmd_fit, cmd_synth, ExperimentConfig, SyntheticSpec};
use hdff::io::FeaturePack;

pub fn run_example() -> hdff::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let spec = SyntheticSpec {
        train_per_class: 50,
        test_per_class: 25,
        ood_samples: 100,
        ..SyntheticSpec::default()
    };
    let packs = cmd_synth(&spec, dir.path())?;
    let train = FeaturePack::open(&packs.train)?;
    let test = FeaturePack::open(&packs.test)?;
    let ood = FeaturePack::open(&packs.ood)?;

    let config = ExperimentConfig {
        hd_dim: 4000,
        ..ExperimentConfig::default()
    };
    let fitted = cmd_fit(&train, &config, Some(&dir.path().join("model.hdff")))?;
    println!("fitted {:?} in {:.2?}", fitted.class_counts, fitted.elapsed);

    let report = cmd_eval(&test, &ood, &fitted.model, &config)?;
    println!(
        "AUROC {:.4}  FPR95 {:.4}  DetErr {:.4}  maxF1 {:.4}",
        report.auroc, report.fpr_at_95tpr, report.detection_error, report.max_f1
    );
    write_eval_outputs(&dir.path().join("eval"), &report)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> hdff::Result<()> {
    run_example()
}
