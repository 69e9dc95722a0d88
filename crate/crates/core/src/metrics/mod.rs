//! Scoring by nearest-class angle and the OOD evaluation metrics.

mod histogram;
mod ood;
mod scoring;

use serde::Serialize;

pub use histogram::{angle_histogram, Histogram};
pub use ood::{
    auroc, detection_error, f1_at, f1_sweep, fpr95_point, fpr_at_95_tpr, max_f1, near_optimal_band,
    threshold_grid, DetErrMode, F1Sweep, OperatingPoint, NEAR_OPTIMAL_FRACTION,
};
pub use scoring::{
    decide, pairwise_similarity, score, score_against, score_ensemble, Decision, ScoreRecord,
};

use crate::error::Result;

pub const METRICS_SCHEMA: &str = "hdff.metrics.v1";

/// Knobs for [`evaluate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalOptions {
    pub det_err_mode: DetErrMode,
    pub f1_step: f64,
    pub bin_width: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            det_err_mode: DetErrMode::Min,
            f1_step: 0.1,
            bin_width: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count_id: u64,
    pub count_ood: u64,
}

/// All metrics for one ID/OOD pair of score lists.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub schema_version: &'static str,
    pub n_id: usize,
    pub n_ood: usize,
    pub auroc: f64,
    pub fpr_at_95tpr: f64,
    pub detection_error: f64,
    pub detection_error_mode: DetErrMode,
    /// Best F1 over every achievable threshold.
    pub max_f1: f64,
    /// Best F1 on the sweep grid.
    pub sweep_max_f1: f64,
    pub sweep_best_threshold: f64,
    pub f1_step: f64,
    pub f1_curve: Vec<(f64, f64)>,
    pub near_optimal_band: Vec<f64>,
    pub histogram: Vec<HistogramRow>,
}

pub fn evaluate(id_scores: &[f64], ood_scores: &[f64], opts: &EvalOptions) -> Result<MetricReport> {
    let sweep = f1_sweep(id_scores, ood_scores, opts.f1_step)?;
    let h_id = angle_histogram(id_scores, opts.bin_width)?;
    let h_ood = angle_histogram(ood_scores, opts.bin_width)?;
    let histogram = (0..h_id.num_bins())
        .map(|k| {
            let (bin_lo, bin_hi) = h_id.bin_edges(k);
            HistogramRow {
                bin_lo,
                bin_hi,
                count_id: h_id.counts[k],
                count_ood: h_ood.counts[k],
            }
        })
        .collect();
    Ok(MetricReport {
        schema_version: METRICS_SCHEMA,
        n_id: id_scores.len(),
        n_ood: ood_scores.len(),
        auroc: auroc(id_scores, ood_scores)?,
        fpr_at_95tpr: fpr_at_95_tpr(id_scores, ood_scores)?,
        detection_error: detection_error(id_scores, ood_scores, opts.det_err_mode)?,
        detection_error_mode: opts.det_err_mode,
        max_f1: max_f1(id_scores, ood_scores)?,
        sweep_max_f1: sweep.max_f1,
        sweep_best_threshold: sweep.best_threshold,
        f1_step: opts.f1_step,
        f1_curve: sweep.curve,
        near_optimal_band: sweep.near_optimal_band,
        histogram,
    })
}
