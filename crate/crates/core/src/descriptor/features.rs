use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial pooling applied to each layer's feature map.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingMode {
    #[default]
    Max,
    Avg,
}

impl PoolingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolingMode::Max => "max",
            PoolingMode::Avg => "avg",
        }
    }
}

impl fmt::Display for PoolingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoolingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(PoolingMode::Max),
            "avg" | "mean" => Ok(PoolingMode::Avg),
            other => Err(Error::usage(format!(
                "unknown pooling mode {other:?} (expected max or avg)"
            ))),
        }
    }
}

/// Shape of one layer's feature map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub layer_id: u32,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl LayerShape {
    pub fn elements(&self) -> usize {
        self.height * self.width * self.channels
    }
}

/// A `height x width x channels` activation tensor, row-major with channels
/// innermost.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerFeatureMap {
    layer_id: u32,
    sample_id: u64,
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<f32>,
}

impl LayerFeatureMap {
    pub fn new(
        layer_id: u32,
        sample_id: u64,
        height: usize,
        width: usize,
        channels: usize,
        values: Vec<f32>,
    ) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::dim(format!(
                "layer {layer_id}, sample {sample_id}: feature map dims must be >= 1, got {height}x{width}x{channels}"
            )));
        }
        if values.len() != height * width * channels {
            return Err(Error::dim(format!(
                "layer {layer_id}, sample {sample_id}: {} values for a {height}x{width}x{channels} map",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!(
                "layer {layer_id}, sample {sample_id}: activation {i} is not finite"
            )));
        }
        Ok(Self {
            layer_id,
            sample_id,
            height,
            width,
            channels,
            values,
        })
    }

    /// A `1 x 1 x c` map, i.e. an already-pooled vector.
    pub fn from_vector(layer_id: u32, sample_id: u64, values: Vec<f32>) -> Result<Self> {
        let c = values.len();
        Self::new(layer_id, sample_id, 1, 1, c, values)
    }

    pub fn layer_id(&self) -> u32 {
        self.layer_id
    }

    pub fn sample_id(&self) -> u64 {
        self.sample_id
    }

    pub fn shape(&self) -> LayerShape {
        LayerShape {
            layer_id: self.layer_id,
            height: self.height,
            width: self.width,
            channels: self.channels,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Iterator over the spatial positions, each a `channels`-long slice.
    pub fn positions(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.channels)
    }
}

/// A layer's feature map reduced over its spatial grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PooledVector {
    pub layer_id: u32,
    pub values: Vec<f32>,
}

/// Per-channel max or mean over the spatial grid.
pub fn pool(map: &LayerFeatureMap, mode: PoolingMode) -> PooledVector {
    let c = map.channels;
    let values = match mode {
        PoolingMode::Max => {
            let mut out = vec![f32::NEG_INFINITY; c];
            for pos in map.positions() {
                for (o, &x) in out.iter_mut().zip(pos) {
                    if x > *o {
                        *o = x;
                    }
                }
            }
            out
        }
        PoolingMode::Avg => {
            let mut acc = vec![0.0f64; c];
            for pos in map.positions() {
                for (a, &x) in acc.iter_mut().zip(pos) {
                    *a += x as f64;
                }
            }
            let n = (map.height * map.width) as f64;
            acc.into_iter().map(|a| (a / n) as f32).collect()
        }
    };
    PooledVector {
        layer_id: map.layer_id,
        values,
    }
}

/// Training-set statistics for one layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerStats {
    /// Mean pooled activation per channel.
    pub mean: Vec<f32>,
    /// Number of samples the mean was computed from.
    pub count: u64,
}

impl LayerStats {
    /// Statistics that leave vectors unchanged under [`center`].
    pub fn zero(channels: usize) -> Self {
        Self {
            mean: vec![0.0; channels],
            count: 1,
        }
    }
}

/// `v - mean`, element-wise.
pub fn center(v: &PooledVector, stats: &LayerStats) -> Result<PooledVector> {
    if v.values.len() != stats.mean.len() {
        return Err(Error::dim(format!(
            "layer {}: pooled vector has {} channels, mean has {}",
            v.layer_id,
            v.values.len(),
            stats.mean.len()
        )));
    }
    Ok(PooledVector {
        layer_id: v.layer_id,
        values: v
            .values
            .iter()
            .zip(&stats.mean)
            .map(|(x, m)| x - m)
            .collect(),
    })
}
