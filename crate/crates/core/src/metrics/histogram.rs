use serde::Serialize;

use crate::error::{Error, Result};

/// Counts of θ over `[0, 90]` in equal-width bins.
///
/// Bins are `[lo, hi)` except the last, which is closed and also absorbs any
/// score above 90° so that counts always sum to the number of scores.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn num_bins(&self) -> usize {
        self.counts.len()
    }

    /// `(lo, hi)` of bin `k`; the last bin ends at 90.
    pub fn bin_edges(&self, k: usize) -> (f64, f64) {
        let lo = k as f64 * self.bin_width;
        let hi = ((k + 1) as f64 * self.bin_width).min(90.0);
        (lo, hi)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn angle_histogram(scores: &[f64], bin_width_degrees: f64) -> Result<Histogram> {
    if !bin_width_degrees.is_finite() || bin_width_degrees <= 0.0 {
        return Err(Error::usage(format!(
            "histogram bin width must be positive, got {bin_width_degrees}"
        )));
    }
    let bins = ((90.0 / bin_width_degrees) - 1e-9).ceil().max(1.0) as usize;
    let mut counts = vec![0u64; bins];
    for &s in scores {
        let k = if s.is_nan() || s <= 0.0 {
            0
        } else {
            ((s / bin_width_degrees).floor() as usize).min(bins - 1)
        };
        counts[k] += 1;
    }
    Ok(Histogram {
        bin_width: bin_width_degrees,
        counts,
    })
}
