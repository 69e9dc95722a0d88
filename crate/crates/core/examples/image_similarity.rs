// Angles between image descriptors for chosen and random sample pairs.

use hdff::harness::synth::random_pairs;
use hdff::harness::{cmd_fit, cmd_similarity, cmd_synth, ExperimentConfig, SyntheticSpec};
use hdff::io::FeaturePack;

pub fn run_example() -> hdff::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let spec = SyntheticSpec {
        train_per_class: 10,
        test_per_class: 4,
        ood_samples: 4,
        channels: vec![16, 32],
        ..SyntheticSpec::default()
    };
    let packs = cmd_synth(&spec, dir.path())?;
    let train = FeaturePack::open(&packs.train)?;
    let test = FeaturePack::open(&packs.test)?;
    let config = ExperimentConfig {
        hd_dim: 2000,
        ..ExperimentConfig::default()
    };
    let model = cmd_fit(&train, &config, None)?.model;

    // Samples i and i + 4 share a class; i and i + 1 do not.
    let mut pairs = vec![(0, 0), (0, 4), (0, 1), (2, 6), (2, 3)];
    pairs.extend(random_pairs(16, 3, 9));
    for r in cmd_similarity(&test, &model, &pairs)? {
        println!("({:2}, {:2}) {:6.2}°", r.a, r.b, r.angle_degrees);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> hdff::Result<()> {
    run_example()
}
