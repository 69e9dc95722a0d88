// Fit class descriptors on in-memory features and flag outliers by angle.

use hdff::descriptor::{fit, FitConfig, InMemorySource};
use hdff::harness::score_source;
use hdff::metrics::decide;

pub fn run_example() -> hdff::Result<()> {
    // Two layers, 1x1 maps. Class 0 lives near +x, class 1 near +y.
    let sample = |x: f32, y: f32, jitter: f32| vec![vec![x + jitter, y, 0.1], vec![x, y - jitter]];
    let mut train = Vec::new();
    for k in 0..20 {
        let j = (k as f32 - 10.0) * 0.02;
        train.push((sample(1.0, 0.0, j), Some(0)));
        train.push((sample(0.0, 1.0, j), Some(1)));
    }
    let train = InMemorySource::from_vectors(&[0, 1], train)?;
    let model = fit(
        &train,
        &FitConfig {
            hd_dim: 4096,
            master_seed: 1,
            ..Default::default()
        },
    )?;
    println!(
        "classes {:?}, {} layers",
        model.class_ids(),
        model.layers.len()
    );

    let test = InMemorySource::from_vectors(
        &[0, 1],
        vec![
            (sample(1.1, 0.0, 0.0), None),
            (sample(0.0, 0.9, 0.0), None),
            (sample(-1.0, -1.0, 0.0), None),
        ],
    )?;
    for r in score_source(&test, &model)? {
        println!(
            "sample {}: θ = {:6.2}°, nearest class {}, {}",
            r.sample_id,
            r.theta_degrees,
            r.nearest_class,
            decide(&r, 45.0).as_str()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> hdff::Result<()> {
    run_example()
}
