// Fuse two independently projected models into one descriptor set by
// binding each to its own random key and bundling.

use hdff::descriptor::{
    encode_source, ensemble_descriptor, ensemble_image_descriptor, fit, FitConfig,
};
use hdff::harness::{cmd_synth, SyntheticSpec};
use hdff::io::FeaturePack;
use hdff::metrics::score_ensemble;

pub fn run_example() -> hdff::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let spec = SyntheticSpec {
        train_per_class: 20,
        test_per_class: 5,
        ood_samples: 20,
        channels: vec![16, 32],
        ..SyntheticSpec::default()
    };
    let packs = cmd_synth(&spec, dir.path())?;
    let train = FeaturePack::open(&packs.train)?;
    let ood = FeaturePack::open(&packs.ood)?;
    let test = FeaturePack::open(&packs.test)?;

    let members: Vec<_> = [11u64, 12]
        .iter()
        .map(|&seed| {
            fit(
                &train,
                &FitConfig {
                    hd_dim: 4000,
                    master_seed: seed,
                    ..Default::default()
                },
            )
        })
        .collect::<hdff::Result<_>>()?;
    let model = ensemble_descriptor(&members, &[101, 102])?;

    for (name, pack) in [("test", &test), ("ood", &ood)] {
        let per_member = members
            .iter()
            .map(|m| encode_source(pack, &m.encoder()?))
            .collect::<hdff::Result<Vec<_>>>()?;
        let mut total = 0.0;
        for i in 0..per_member[0].len() {
            let ys: Vec<_> = per_member.iter().map(|ys| ys[i].clone()).collect();
            total +=
                score_ensemble(&ensemble_image_descriptor(&ys, &model)?, &model)?.theta_degrees;
        }
        println!(
            "{name}: mean ensemble θ = {:.2}°",
            total / per_member[0].len() as f64
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> hdff::Result<()> {
    run_example()
}
