// Per-layer AUROC against fusion, with the OOD shift confined to one layer
// per pack.

use hdff::harness::{ablate_layers_multi, cmd_synth, ExperimentConfig, SyntheticSpec};
use hdff::io::FeaturePack;

pub fn run_example() -> hdff::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let base = SyntheticSpec {
        train_per_class: 30,
        test_per_class: 20,
        ood_samples: 80,
        channels: vec![16, 32, 64],
        ood_shift: 1.5,
        ..SyntheticSpec::default()
    };
    let mut oods = Vec::new();
    let mut id_packs = None;
    for layer in 0..3 {
        let mut shift = vec![0.0; 3];
        shift[layer] = 1.0;
        let spec = SyntheticSpec {
            layer_shift: Some(shift),
            ..base.clone()
        };
        let out = cmd_synth(&spec, dir.path().join(format!("shift_{layer}")))?;
        id_packs.get_or_insert((out.train, out.test));
        oods.push(FeaturePack::open(&out.ood)?);
    }
    let (train, test) = id_packs.expect("three packs written");
    let (train, test) = (FeaturePack::open(train)?, FeaturePack::open(test)?);
    let refs: Vec<&FeaturePack> = oods.iter().collect();
    let config = ExperimentConfig {
        hd_dim: 2000,
        ..ExperimentConfig::default()
    };

    for (k, table) in ablate_layers_multi(&train, &test, &refs, &config)?
        .iter()
        .enumerate()
    {
        let cells: Vec<String> = table
            .rows
            .iter()
            .map(|r| format!("{} {:.3}", r.label, r.auroc))
            .collect();
        println!("shift in layer {k}: {}", cells.join(" | "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> hdff::Result<()> {
    run_example()
}
