use super::features::{LayerFeatureMap, LayerShape};
use crate::error::{Error, Result};

/// Random-access provider of per-sample, per-layer feature maps.
///
/// Implemented by on-disk feature packs and by [`InMemorySource`]. Fitting
/// reads every sample twice, so a source must be re-readable.
pub trait SampleSource: Sync {
    fn num_samples(&self) -> usize;

    /// Shapes of every layer the source can provide, in layer order.
    fn layer_shapes(&self) -> Vec<LayerShape>;

    /// Class label of sample `index`, if the source is labelled.
    fn label(&self, index: usize) -> Option<u32>;

    /// Loads the maps of sample `index` for the given layer ids, in that order.
    fn load(&self, index: usize, layers: &[u32]) -> Result<Vec<LayerFeatureMap>>;
}

/// A fully materialised set of samples.
#[derive(Clone, Debug, Default)]
pub struct InMemorySource {
    shapes: Vec<LayerShape>,
    samples: Vec<(Vec<LayerFeatureMap>, Option<u32>)>,
}

impl InMemorySource {
    pub fn new(shapes: Vec<LayerShape>) -> Self {
        Self {
            shapes,
            samples: Vec::new(),
        }
    }

    /// Appends a sample. Its maps must follow the declared layer shapes.
    pub fn push(&mut self, maps: Vec<LayerFeatureMap>, label: Option<u32>) -> Result<()> {
        let index = self.samples.len();
        if maps.len() != self.shapes.len() {
            return Err(Error::dim(format!(
                "sample {index}: {} maps for {} layers",
                maps.len(),
                self.shapes.len()
            )));
        }
        for (map, shape) in maps.iter().zip(&self.shapes) {
            if map.shape() != *shape {
                return Err(Error::dim(format!(
                    "sample {index}, layer {}: shape {:?} does not match {:?}",
                    shape.layer_id,
                    map.shape(),
                    shape
                )));
            }
        }
        self.samples.push((maps, label));
        Ok(())
    }

    /// Builds a source where every layer is a `1 x 1 x c` map.
    pub fn from_vectors(
        layer_ids: &[u32],
        samples: Vec<(Vec<Vec<f32>>, Option<u32>)>,
    ) -> Result<Self> {
        let Some((first, _)) = samples.first() else {
            return Err(Error::usage("no samples given"));
        };
        let shapes = layer_ids
            .iter()
            .zip(first)
            .map(|(&layer_id, v)| LayerShape {
                layer_id,
                height: 1,
                width: 1,
                channels: v.len(),
            })
            .collect();
        let mut source = Self::new(shapes);
        for (i, (vectors, label)) in samples.into_iter().enumerate() {
            let maps = layer_ids
                .iter()
                .zip(vectors)
                .map(|(&l, v)| LayerFeatureMap::from_vector(l, i as u64, v))
                .collect::<Result<Vec<_>>>()?;
            source.push(maps, label)?;
        }
        Ok(source)
    }
}

impl SampleSource for InMemorySource {
    fn num_samples(&self) -> usize {
        self.samples.len()
    }

    fn layer_shapes(&self) -> Vec<LayerShape> {
        self.shapes.clone()
    }

    fn label(&self, index: usize) -> Option<u32> {
        self.samples.get(index).and_then(|s| s.1)
    }

    fn load(&self, index: usize, layers: &[u32]) -> Result<Vec<LayerFeatureMap>> {
        let (maps, _) = self
            .samples
            .get(index)
            .ok_or_else(|| Error::usage(format!("sample {index} out of range")))?;
        layers
            .iter()
            .map(|id| {
                maps.iter()
                    .find(|m| m.layer_id() == *id)
                    .cloned()
                    .ok_or_else(|| Error::usage(format!("sample {index}: no layer {id}")))
            })
            .collect()
    }
}
