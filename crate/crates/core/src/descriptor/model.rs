use serde::{Deserialize, Serialize};

use super::features::{center, pool, LayerFeatureMap, LayerStats, PoolingMode};
use crate::error::{Error, Result};
use crate::hdc::{HdVector, ProjectionSet};

/// A layer taking part in the fusion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub layer_id: u32,
    pub channels: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassDescriptor {
    pub class_id: u32,
    /// Number of training images bundled into the descriptor.
    pub count: u64,
    pub descriptor: HdVector,
}

/// Ensemble descriptors: `d*_c = ⊕_e d_c^(e) ⊗ z^(e)` with `z^(e)` regenerated
/// from `binding_seeds[e]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleDescriptors {
    pub binding_seeds: Vec<u64>,
    pub classes: Vec<ClassDescriptor>,
}

/// Everything needed to score new samples. Projection matrices are not part
/// of the model; they are regenerated from `master_seed` and the layer table.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedModel {
    pub hd_dim: usize,
    pub master_seed: u64,
    pub pooling: PoolingMode,
    pub layers: Vec<LayerSpec>,
    pub stats: Vec<LayerStats>,
    /// Sorted by class id.
    pub classes: Vec<ClassDescriptor>,
    pub ensemble: Option<EnsembleDescriptors>,
}

impl FittedModel {
    pub fn layer_ids(&self) -> Vec<u32> {
        self.layers.iter().map(|l| l.layer_id).collect()
    }

    pub fn class_ids(&self) -> Vec<u32> {
        self.classes.iter().map(|c| c.class_id).collect()
    }

    /// Regenerates the projections and returns a ready-to-use encoder.
    pub fn encoder(&self) -> Result<Encoder> {
        let projections = ProjectionSet::generate(
            self.master_seed,
            self.hd_dim,
            &self
                .layers
                .iter()
                .map(|l| (l.layer_id, l.channels))
                .collect::<Vec<_>>(),
        )?;
        Encoder::new(
            self.pooling,
            self.layers.clone(),
            self.stats.clone(),
            projections,
        )
    }

    /// Checks the structural invariants: matching layer/stat tables, one
    /// nonzero descriptor of dim m per class, sorted class ids.
    pub fn validate(&self) -> Result<()> {
        if self.hd_dim == 0 {
            return Err(Error::dim("hd_dim must be positive"));
        }
        if self.layers.len() != self.stats.len() {
            return Err(Error::dim(format!(
                "{} layers but {} layer stats",
                self.layers.len(),
                self.stats.len()
            )));
        }
        for (layer, stats) in self.layers.iter().zip(&self.stats) {
            if layer.channels != stats.mean.len() {
                return Err(Error::dim(format!(
                    "layer {}: {} channels but mean of length {}",
                    layer.layer_id,
                    layer.channels,
                    stats.mean.len()
                )));
            }
            if layer.channels > self.hd_dim {
                return Err(Error::dim(format!(
                    "layer {}: {} channels exceed hd_dim {}",
                    layer.layer_id, layer.channels, self.hd_dim
                )));
            }
        }
        if self.classes.is_empty() {
            return Err(Error::Fit("model has no classes".into()));
        }
        check_descriptors(&self.classes, self.hd_dim)?;
        if let Some(ens) = &self.ensemble {
            check_descriptors(&ens.classes, self.hd_dim)?;
            if ens.binding_seeds.is_empty() {
                return Err(Error::Fit("ensemble without binding seeds".into()));
            }
        }
        Ok(())
    }
}

fn check_descriptors(classes: &[ClassDescriptor], hd_dim: usize) -> Result<()> {
    for pair in classes.windows(2) {
        if pair[0].class_id >= pair[1].class_id {
            return Err(Error::Fit("class ids must be strictly increasing".into()));
        }
    }
    for c in classes {
        if c.descriptor.dim() != hd_dim {
            return Err(Error::dim(format!(
                "class {}: descriptor dim {} != hd_dim {hd_dim}",
                c.class_id,
                c.descriptor.dim()
            )));
        }
        if c.descriptor.is_zero() {
            return Err(Error::Degenerate(format!(
                "class {}: descriptor has zero norm",
                c.class_id
            )));
        }
    }
    Ok(())
}

/// Preprocessing state plus projections: maps a sample's feature maps to its
/// image descriptor `y = ⊕_l P_l (pool(m_l) - mean_l)`.
#[derive(Clone, Debug)]
pub struct Encoder {
    pooling: PoolingMode,
    layers: Vec<LayerSpec>,
    stats: Vec<LayerStats>,
    projections: ProjectionSet,
}

impl Encoder {
    pub fn new(
        pooling: PoolingMode,
        layers: Vec<LayerSpec>,
        stats: Vec<LayerStats>,
        projections: ProjectionSet,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::usage("encoder needs at least one layer"));
        }
        if layers.len() != stats.len() || layers.len() != projections.len() {
            return Err(Error::dim(format!(
                "{} layers, {} stats, {} projections",
                layers.len(),
                stats.len(),
                projections.len()
            )));
        }
        for ((layer, s), p) in layers.iter().zip(&stats).zip(projections.matrices()) {
            if s.mean.len() != layer.channels
                || p.cols() != layer.channels
                || p.layer_id() != layer.layer_id
            {
                return Err(Error::dim(format!(
                    "layer {}: inconsistent channel counts between spec, stats and projection",
                    layer.layer_id
                )));
            }
        }
        Ok(Self {
            pooling,
            layers,
            stats,
            projections,
        })
    }

    pub fn hd_dim(&self) -> usize {
        self.projections.hd_dim()
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn layer_ids(&self) -> Vec<u32> {
        self.layers.iter().map(|l| l.layer_id).collect()
    }

    pub fn pooling(&self) -> PoolingMode {
        self.pooling
    }

    pub fn projections(&self) -> &ProjectionSet {
        &self.projections
    }

    /// Image descriptor of one sample. `maps` must contain a map for every
    /// configured layer (matched by layer id); extra maps are ignored.
    pub fn image_descriptor(&self, maps: &[LayerFeatureMap]) -> Result<HdVector> {
        let mut acc: Option<HdVector> = None;
        for ((layer, stats), p) in self
            .layers
            .iter()
            .zip(&self.stats)
            .zip(self.projections.matrices())
        {
            let map = maps
                .iter()
                .find(|m| m.layer_id() == layer.layer_id)
                .ok_or_else(|| {
                    Error::dim(format!("missing feature map for layer {}", layer.layer_id))
                })?;
            if map.channels() != layer.channels {
                return Err(Error::dim(format!(
                    "sample {}, layer {}: {} channels, expected {}",
                    map.sample_id(),
                    layer.layer_id,
                    map.channels(),
                    layer.channels
                )));
            }
            let v = center(&pool(map, self.pooling), stats)?;
            let h = p.project(&v.values)?;
            match acc.as_mut() {
                None => acc = Some(h),
                Some(y) => y.add_assign(&h)?,
            }
        }
        Ok(acc.expect("encoder has at least one layer"))
    }
}

/// Free-function form of [`Encoder::image_descriptor`].
pub fn image_descriptor(maps: &[LayerFeatureMap], encoder: &Encoder) -> Result<HdVector> {
    encoder.image_descriptor(maps)
}
