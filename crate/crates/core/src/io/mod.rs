//! On-disk formats: NPY tensors, feature packs and model files.

pub mod model_file;
pub mod npy;
pub mod pack;

pub use model_file::{load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use npy::{read_tensor_file, write_tensor_file, Tensor};
pub use pack::{FeaturePack, FeaturePackWriter, LayerDecl, LayerEntry, Manifest};
