//! From raw feature maps to image, class and ensemble descriptors.

mod ensemble;
mod features;
mod fit;
mod model;
mod source;

pub use ensemble::{ensemble_descriptor, ensemble_image_descriptor};
pub use features::{
    center, pool, LayerFeatureMap, LayerShape, LayerStats, PooledVector, PoolingMode,
};
pub use fit::{encode_source, fit, select_layers, FitConfig, BLOCK_SIZE};
pub use model::{
    image_descriptor, ClassDescriptor, Encoder, EnsembleDescriptors, FittedModel, LayerSpec,
};
pub use source::{InMemorySource, SampleSource};
