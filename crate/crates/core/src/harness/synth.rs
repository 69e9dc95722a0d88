//! Desk-scale stand-in for CNN features.
//!
//! Each layer gets one Gaussian prototype per class (constant over the
//! spatial grid). An ID sample is its class prototype plus i.i.d. Gaussian
//! noise at every spatial position. An OOD sample starts from the prototype
//! of an ID class and adds a fresh Gaussian offset of scale `ood_shift`, so
//! `ood_shift = 0` makes the OOD set distributed exactly like the ID test set.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hdc::seed::{derive_seed, rng_from_seed};
use crate::io::{FeaturePackWriter, LayerDecl};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Size of the OOD pack.
    pub ood_samples: usize,
    /// Channel count of each layer; layer ids are 0, 1, ...
    pub channels: Vec<usize>,
    pub height: usize,
    pub width: usize,
    pub prototype_scale: f64,
    pub noise_scale: f64,
    pub ood_shift: f64,
    /// Per-layer multiplier on `prototype_scale` (default all 1).
    #[serde(default)]
    pub layer_signal: Option<Vec<f64>>,
    /// Per-layer multiplier on `ood_shift` (default all 1).
    #[serde(default)]
    pub layer_shift: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_classes: 4,
            train_per_class: 200,
            test_per_class: 100,
            ood_samples: 400,
            channels: vec![16, 32, 64, 128, 256],
            height: 4,
            width: 4,
            prototype_scale: 1.0,
            noise_scale: 0.5,
            ood_shift: 1.0,
            layer_signal: None,
            layer_shift: None,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0
            || self.train_per_class == 0
            || self.test_per_class == 0
            || self.ood_samples == 0
            || self.height == 0
            || self.width == 0
        {
            return Err(Error::usage("synthetic counts and sizes must all be >= 1"));
        }
        if self.channels.is_empty() || self.channels.contains(&0) {
            return Err(Error::usage(
                "synthetic spec needs >= 1 layer with >= 1 channel",
            ));
        }
        for (name, v) in [
            ("prototype_scale", self.prototype_scale),
            ("noise_scale", self.noise_scale),
            ("ood_shift", self.ood_shift),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::usage(format!("{name} must be finite and >= 0")));
            }
        }
        for (name, mult) in [
            ("layer_signal", &self.layer_signal),
            ("layer_shift", &self.layer_shift),
        ] {
            if let Some(m) = mult {
                if m.len() != self.channels.len() {
                    return Err(Error::usage(format!(
                        "{name} has {} entries for {} layers",
                        m.len(),
                        self.channels.len()
                    )));
                }
                if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::usage(format!(
                        "{name} entries must be finite and >= 0"
                    )));
                }
            }
        }
        Ok(())
    }

    fn signal(&self, layer: usize) -> f64 {
        self.layer_signal.as_ref().map_or(1.0, |m| m[layer])
    }

    fn shift(&self, layer: usize) -> f64 {
        self.layer_shift.as_ref().map_or(1.0, |m| m[layer])
    }
}

/// Paths of the three generated packs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthOutput {
    pub train: PathBuf,
    pub test: PathBuf,
    pub ood: PathBuf,
}

/// Per-layer, per-group channel vectors.
type Prototypes = Vec<Vec<Vec<f32>>>;

fn gaussian_vectors(
    rng: &mut ChaCha8Rng,
    groups: usize,
    channels: &[usize],
    scale: impl Fn(usize) -> f64,
) -> Prototypes {
    channels
        .iter()
        .enumerate()
        .map(|(l, &c)| {
            (0..groups)
                .map(|_| {
                    (0..c)
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(rng);
                            (scale(l) * z) as f32
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Writes `train/`, `test/` (both labelled) and `ood/` packs under `out_dir`.
pub fn generate(spec: &SyntheticSpec, out_dir: impl AsRef<Path>) -> Result<SynthOutput> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    let mut proto_rng = rng_from_seed(derive_seed(spec.seed, 0));
    let prototypes = gaussian_vectors(&mut proto_rng, spec.num_classes, &spec.channels, |l| {
        spec.prototype_scale * spec.signal(l)
    });
    let shifts = gaussian_vectors(&mut proto_rng, spec.num_classes, &spec.channels, |l| {
        spec.ood_shift * spec.shift(l)
    });

    let decls: Vec<LayerDecl> = spec
        .channels
        .iter()
        .enumerate()
        .map(|(l, &c)| LayerDecl {
            layer_id: l as u32,
            name: format!("synthetic_{l}"),
            height: spec.height,
            width: spec.width,
            channels: c,
        })
        .collect();

    let out = SynthOutput {
        train: out_dir.join("train"),
        test: out_dir.join("test"),
        ood: out_dir.join("ood"),
    };

    let splits: [(&Path, &str, usize, u64); 3] = [
        (
            &out.train,
            "train",
            spec.train_per_class * spec.num_classes,
            1,
        ),
        (&out.test, "test", spec.test_per_class * spec.num_classes, 2),
        (&out.ood, "ood", spec.ood_samples, 3),
    ];
    for (dir, split, n, stream) in splits {
        let mut rng = rng_from_seed(derive_seed(spec.seed, stream));
        let mut writer = FeaturePackWriter::create(dir, "synthetic", split, n, &decls)?;
        for i in 0..n {
            let class = i % spec.num_classes;
            let is_ood = split == "ood";
            let slabs: Vec<Vec<f32>> = spec
                .channels
                .iter()
                .enumerate()
                .map(|(l, &c)| {
                    let base = &prototypes[l][class];
                    let offset = is_ood.then(|| &shifts[l][class]);
                    let mut slab = Vec::with_capacity(spec.height * spec.width * c);
                    for _ in 0..spec.height * spec.width {
                        for ch in 0..c {
                            let noise: f64 = StandardNormal.sample(&mut rng);
                            let mut v = base[ch] as f64 + spec.noise_scale * noise;
                            if let Some(off) = offset {
                                v += off[ch] as f64;
                            }
                            slab.push(v as f32);
                        }
                    }
                    slab
                })
                .collect();
            let refs: Vec<&[f32]> = slabs.iter().map(Vec::as_slice).collect();
            let label = (!is_ood).then_some(class as u32);
            writer.append(&refs, label)?;
        }
        writer.finish()?;
    }
    Ok(out)
}

/// Draws a random `(i, j)` sample pair list, for similarity tables.
pub fn random_pairs(n: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
    if n == 0 {
        return Vec::new();
    }
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .collect()
}
