use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense point in the m-dimensional hyperspace.
///
/// Entries are stored as `f32`; every reduction over them (dot products,
/// norms) accumulates in `f64`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct HdVector {
    values: Vec<f32>,
}

impl HdVector {
    /// Wraps `values`, rejecting empty or non-finite input.
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::dim("hypervector must have at least one dimension"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!(
                "hypervector entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    /// Internal constructor for results of arithmetic on finite vectors.
    pub(crate) fn from_raw(values: Vec<f32>) -> Self {
        debug_assert!(!values.is_empty());
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn dot(&self, other: &HdVector) -> Result<f64> {
        self.check_dim(other)?;
        Ok(dot_f64(&self.values, &other.values))
    }

    pub fn norm(&self) -> f64 {
        dot_f64(&self.values, &self.values).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// In-place bundling: `self += other`.
    pub fn add_assign(&mut self, other: &HdVector) -> Result<()> {
        self.check_dim(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += *b;
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f32) -> HdVector {
        HdVector::from_raw(self.values.iter().map(|v| v * factor).collect())
    }

    pub(crate) fn check_dim(&self, other: &HdVector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::dim(format!(
                "hypervector dims differ: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for HdVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 6;
        write!(f, "HdVector(dim={}, [", self.dim())?;
        for (i, v) in self.values.iter().take(SHOWN).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        if self.dim() > SHOWN {
            write!(f, ", ...")?;
        }
        write!(f, "])")
    }
}

impl TryFrom<Vec<f32>> for HdVector {
    type Error = Error;

    fn try_from(values: Vec<f32>) -> Result<Self> {
        HdVector::new(values)
    }
}

pub(crate) fn dot_f64(a: &[f32], b: &[f32]) -> f64 {
    // Four independent accumulators let the compiler vectorise the loop.
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let (rest_a, rest_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for k in 0..4 {
            acc[k] += ca[k] as f64 * cb[k] as f64;
        }
    }
    let mut tail = 0.0;
    for (x, y) in rest_a.iter().zip(rest_b) {
        tail += *x as f64 * *y as f64;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
