//! Hyperdimensional feature fusion (HDFF) for out-of-distribution detection.
//!
//! Feature maps from several layers of a network are pooled, mean-centred and
//! pushed through per-layer semi-orthogonal projections into one shared
//! hyperspace, where they are bundled into an image descriptor. Bundling the
//! training descriptors of a class yields its class descriptor; a new sample
//! is scored by the angle to its nearest class descriptor.
//!
//! Module map:
//! - [`hdc`]: the vector algebra (projection, bundle, bind, angle).
//! - [`descriptor`]: pooling, centring, image/class/ensemble descriptors, fitting.
//! - [`metrics`]: scoring and OOD metrics (AUROC, FPR95, detection error, F1).
//! - [`io`]: NPY tensors, feature packs and the binary model format.
//! - [`harness`]: end-to-end commands used by the `hdff` binary and the examples.

pub mod descriptor;
pub mod error;
pub mod harness;
pub mod hdc;
pub mod io;
pub mod metrics;

pub use error::{Error, Result};
pub use hdc::{
    angle_degrees, bind, bundle, random_rademacher, HdVector, ProjectionMatrix, ProjectionSet,
};
