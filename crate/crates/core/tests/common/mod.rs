#![allow(dead_code)]

pub mod oracle;

use hdff::descriptor::{InMemorySource, LayerFeatureMap, LayerShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn gaussian_f64(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    let v = gaussian_f64(rng, n);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| (x / norm) as f32).collect()
}

/// Random labelled in-memory source: `classes x per_class` samples over
/// layers of the given `(channels, h, w)`, class-dependent means.
pub fn random_source(
    seed: u64,
    layers: &[(usize, usize, usize)],
    classes: u32,
    per_class: usize,
) -> InMemorySource {
    let mut r = rng(seed);
    let shapes: Vec<LayerShape> = layers
        .iter()
        .enumerate()
        .map(|(l, &(channels, height, width))| LayerShape {
            layer_id: l as u32,
            height,
            width,
            channels,
        })
        .collect();
    let protos: Vec<Vec<Vec<f32>>> = (0..classes)
        .map(|_| {
            layers
                .iter()
                .map(|&(c, _, _)| gaussian(&mut r, c))
                .collect()
        })
        .collect();
    let mut src = InMemorySource::new(shapes.clone());
    let mut sample_id = 0u64;
    for _ in 0..per_class {
        for class in 0..classes {
            let maps = shapes
                .iter()
                .zip(&protos[class as usize])
                .map(|(s, proto)| {
                    let values = (0..s.height * s.width)
                        .flat_map(|_| {
                            proto
                                .iter()
                                .map(|p| p + 0.3 * r.random::<f32>())
                                .collect::<Vec<_>>()
                        })
                        .collect();
                    LayerFeatureMap::new(
                        s.layer_id, sample_id, s.height, s.width, s.channels, values,
                    )
                    .unwrap()
                })
                .collect();
            src.push(maps, Some(class)).unwrap();
            sample_id += 1;
        }
    }
    src
}
