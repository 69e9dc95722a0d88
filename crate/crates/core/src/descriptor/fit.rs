use std::collections::BTreeMap;

use rayon::prelude::*;

use super::features::{pool, LayerShape, LayerStats, PoolingMode};
use super::model::{ClassDescriptor, Encoder, FittedModel, LayerSpec};
use super::source::SampleSource;
use crate::error::{Error, Result};
use crate::hdc::{HdVector, ProjectionSet};

/// Samples per work unit. Partial results are merged in block order, which
/// keeps outputs independent of the thread count.
pub const BLOCK_SIZE: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub hd_dim: usize,
    pub master_seed: u64,
    pub pooling: PoolingMode,
    /// Layer ids to fuse; `None` means every layer the source provides.
    pub layers: Option<Vec<u32>>,
    /// Classes that must each receive at least one sample.
    pub classes: Option<Vec<u32>>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            hd_dim: 10_000,
            master_seed: 0,
            pooling: PoolingMode::Max,
            layers: None,
            classes: None,
        }
    }
}

/// Resolves a layer selection against the source's layers, preserving the
/// order of the selection.
pub fn select_layers(
    available: &[LayerShape],
    selection: Option<&[u32]>,
) -> Result<Vec<LayerShape>> {
    if available.is_empty() {
        return Err(Error::usage("source has no layers"));
    }
    match selection {
        None => Ok(available.to_vec()),
        Some([]) => Err(Error::usage("layer selection is empty")),
        Some(ids) => ids
            .iter()
            .map(|id| {
                available
                    .iter()
                    .find(|s| s.layer_id == *id)
                    .copied()
                    .ok_or_else(|| Error::usage(format!("layer {id} not present in source")))
            })
            .collect(),
    }
}

/// Computes the model in two passes over `source`: per-layer means of the
/// pooled vectors, then one bundled descriptor per class.
pub fn fit<S: SampleSource + ?Sized>(source: &S, config: &FitConfig) -> Result<FittedModel> {
    let shapes = select_layers(&source.layer_shapes(), config.layers.as_deref())?;
    let n = source.num_samples();
    if n == 0 {
        return Err(Error::Fit("training source has no samples".into()));
    }
    for shape in &shapes {
        if shape.channels > config.hd_dim {
            return Err(Error::dim(format!(
                "layer {}: {} channels exceed hd_dim {}",
                shape.layer_id, shape.channels, config.hd_dim
            )));
        }
    }
    let labels = (0..n)
        .map(|i| {
            source
                .label(i)
                .ok_or_else(|| Error::Fit(format!("sample {i} has no class label")))
        })
        .collect::<Result<Vec<u32>>>()?;

    let layer_ids: Vec<u32> = shapes.iter().map(|s| s.layer_id).collect();
    let layers: Vec<LayerSpec> = shapes
        .iter()
        .map(|s| LayerSpec {
            layer_id: s.layer_id,
            channels: s.channels,
        })
        .collect();

    let stats = layer_means(source, &shapes, &layer_ids, config.pooling)?;
    let projections = ProjectionSet::generate(
        config.master_seed,
        config.hd_dim,
        &layers
            .iter()
            .map(|l| (l.layer_id, l.channels))
            .collect::<Vec<_>>(),
    )?;
    let encoder = Encoder::new(config.pooling, layers.clone(), stats.clone(), projections)?;

    let partials = block_ranges(n)
        .into_par_iter()
        .map(|range| {
            let mut part: BTreeMap<u32, (u64, HdVector)> = BTreeMap::new();
            for i in range {
                let maps = load_checked(source, i, &shapes, &layer_ids)?;
                let y = encoder.image_descriptor(&maps)?;
                match part.get_mut(&labels[i]) {
                    Some((count, d)) => {
                        *count += 1;
                        d.add_assign(&y)?;
                    }
                    None => {
                        part.insert(labels[i], (1, y));
                    }
                }
            }
            Ok(part)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut merged: BTreeMap<u32, (u64, HdVector)> = BTreeMap::new();
    for part in partials {
        for (class, (count, d)) in part {
            match merged.get_mut(&class) {
                Some((c, acc)) => {
                    *c += count;
                    acc.add_assign(&d)?;
                }
                None => {
                    merged.insert(class, (count, d));
                }
            }
        }
    }

    if let Some(declared) = &config.classes {
        for class in declared {
            if !merged.contains_key(class) {
                return Err(Error::Fit(format!("class {class} has no training samples")));
            }
        }
        if let Some(extra) = merged.keys().find(|k| !declared.contains(k)) {
            return Err(Error::Fit(format!(
                "training data contains undeclared class {extra}"
            )));
        }
    }

    let classes = merged
        .into_iter()
        .map(|(class_id, (count, descriptor))| {
            if descriptor.is_zero() {
                return Err(Error::Degenerate(format!(
                    "class {class_id}: descriptor is all zeros after mean-centering \
                     ({count} sample(s)); more varied training data is needed"
                )));
            }
            Ok(ClassDescriptor {
                class_id,
                count,
                descriptor,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let model = FittedModel {
        hd_dim: config.hd_dim,
        master_seed: config.master_seed,
        pooling: config.pooling,
        layers,
        stats,
        classes,
        ensemble: None,
    };
    model.validate()?;
    Ok(model)
}

/// Image descriptors for every sample of `source`, in sample order.
pub fn encode_source<S: SampleSource + ?Sized>(
    source: &S,
    encoder: &Encoder,
) -> Result<Vec<HdVector>> {
    let available = source.layer_shapes();
    let layer_ids = encoder.layer_ids();
    let mut shapes = Vec::with_capacity(layer_ids.len());
    for spec in encoder.layers() {
        let shape = available
            .iter()
            .find(|s| s.layer_id == spec.layer_id)
            .ok_or_else(|| Error::dim(format!("source has no layer {}", spec.layer_id)))?;
        if shape.channels != spec.channels {
            return Err(Error::dim(format!(
                "layer {}: source has {} channels, model expects {}",
                spec.layer_id, shape.channels, spec.channels
            )));
        }
        shapes.push(*shape);
    }
    (0..source.num_samples())
        .into_par_iter()
        .map(|i| {
            let maps = load_checked(source, i, &shapes, &layer_ids)?;
            encoder.image_descriptor(&maps)
        })
        .collect()
}

fn block_ranges(n: usize) -> Vec<std::ops::Range<usize>> {
    (0..n)
        .step_by(BLOCK_SIZE)
        .map(|start| start..(start + BLOCK_SIZE).min(n))
        .collect()
}

fn load_checked<S: SampleSource + ?Sized>(
    source: &S,
    index: usize,
    shapes: &[LayerShape],
    layer_ids: &[u32],
) -> Result<Vec<super::features::LayerFeatureMap>> {
    let maps = source.load(index, layer_ids)?;
    if maps.len() != shapes.len() {
        return Err(Error::dim(format!(
            "sample {index}: got {} layer maps, expected {}",
            maps.len(),
            shapes.len()
        )));
    }
    for (map, shape) in maps.iter().zip(shapes) {
        if map.shape() != *shape {
            return Err(Error::dim(format!(
                "sample {index}, layer {}: shape {}x{}x{} differs from {}x{}x{}",
                shape.layer_id,
                map.shape().height,
                map.shape().width,
                map.shape().channels,
                shape.height,
                shape.width,
                shape.channels
            )));
        }
    }
    Ok(maps)
}

fn layer_means<S: SampleSource + ?Sized>(
    source: &S,
    shapes: &[LayerShape],
    layer_ids: &[u32],
    pooling: PoolingMode,
) -> Result<Vec<LayerStats>> {
    let n = source.num_samples();
    let partials = block_ranges(n)
        .into_par_iter()
        .map(|range| {
            let mut sums: Vec<Vec<f64>> = shapes.iter().map(|s| vec![0.0; s.channels]).collect();
            for i in range {
                let maps = load_checked(source, i, shapes, layer_ids)?;
                for (sum, map) in sums.iter_mut().zip(&maps) {
                    for (s, v) in sum.iter_mut().zip(pool(map, pooling).values) {
                        *s += v as f64;
                    }
                }
            }
            Ok(sums)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut totals: Vec<Vec<f64>> = shapes.iter().map(|s| vec![0.0; s.channels]).collect();
    for part in partials {
        for (t, p) in totals.iter_mut().zip(part) {
            for (a, b) in t.iter_mut().zip(p) {
                *a += b;
            }
        }
    }
    Ok(totals
        .into_iter()
        .map(|sum| LayerStats {
            mean: sum.into_iter().map(|s| (s / n as f64) as f32).collect(),
            count: n as u64,
        })
        .collect())
}
