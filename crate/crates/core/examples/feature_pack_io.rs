// Write a feature pack sample by sample, reopen it, and round-trip a model.

use hdff::descriptor::{fit, FitConfig};
use hdff::io::{
    load_model, read_tensor_file, save_model, FeaturePack, FeaturePackWriter, LayerDecl,
};

pub fn run_example() -> hdff::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let layers = [
        LayerDecl {
            layer_id: 0,
            name: "stem".into(),
            height: 2,
            width: 2,
            channels: 3,
        },
        LayerDecl {
            layer_id: 1,
            name: "head".into(),
            height: 1,
            width: 1,
            channels: 4,
        },
    ];
    let mut writer =
        FeaturePackWriter::create(dir.path().join("pack"), "toy", "train", 6, &layers)?;
    for i in 0..6u32 {
        let x = i as f32;
        let stem: Vec<f32> = (0..12).map(|k| (x + k as f32).sin()).collect();
        let head: Vec<f32> = (0..4).map(|k| (x * k as f32).cos()).collect();
        writer.append(&[&stem, &head], Some(i % 2))?;
    }
    let manifest = writer.finish()?;
    println!(
        "{} samples, layers {:?}",
        manifest.num_samples,
        manifest.layers.iter().map(|l| &l.file).collect::<Vec<_>>()
    );

    let pack = FeaturePack::open(dir.path().join("pack"))?;
    println!("sample 3, head: {:?}", pack.read_slab(3, 1)?);
    let tensor = read_tensor_file(dir.path().join("pack/layer_000.npy"))?;
    println!(
        "layer_000.npy shape {:?} dtype {}",
        tensor.shape,
        tensor.dtype()
    );

    let model = fit(
        &pack,
        &FitConfig {
            hd_dim: 256,
            ..Default::default()
        },
    )?;
    let path = dir.path().join("model.hdff");
    save_model(&model, &path)?;
    let back = load_model(&path)?;
    println!(
        "model file {} bytes, reload identical: {}",
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        back == model
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> hdff::Result<()> {
    run_example()
}
