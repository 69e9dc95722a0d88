// AUROC spread over projection seeds as the hyperspace grows.

use hdff::harness::{cmd_ablate_dims, cmd_synth, ExperimentConfig, SyntheticSpec};
use hdff::io::FeaturePack;

pub fn run_example() -> hdff::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let spec = SyntheticSpec {
        channels: vec![4, 6, 8],
        train_per_class: 30,
        test_per_class: 30,
        ood_samples: 100,
        noise_scale: 1.0,
        ood_shift: 0.5,
        ..SyntheticSpec::default()
    };
    let packs = cmd_synth(&spec, dir.path())?;
    let train = FeaturePack::open(&packs.train)?;
    let test = FeaturePack::open(&packs.test)?;
    let ood = FeaturePack::open(&packs.ood)?;

    let rows = cmd_ablate_dims(
        &train,
        &test,
        &ood,
        &[8, 64, 512, 4096],
        5,
        &ExperimentConfig::default(),
    )?;
    for r in rows {
        println!(
            "m = {:5}: AUROC {:.4} ± {:.4}",
            r.hd_dim, r.mean, r.ci95_half_width
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> hdff::Result<()> {
    run_example()
}
