//! Threshold metrics with the OOD set as the positive class and θ as the
//! score.
//!
//! Unless noted, a sample is predicted OOD when `θ >= t`. The candidate
//! thresholds are the distinct observed scores plus `+∞` (nothing
//! predicted OOD). This realises every achievable confusion matrix, the same
//! set as midpoints between consecutive distinct scores with `±∞` sentinels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum TPR for FPR95, as a percentage.
const TPR_TARGET_PERCENT: u64 = 95;

/// How the detection error is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetErrMode {
    /// `min_t 0.5·FPR(t) + 0.5·FNR(t)`.
    #[default]
    Min,
    /// `0.5·FPR + 0.5·FNR` at the FPR95 threshold.
    Tpr95,
}

impl fmt::Display for DetErrMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetErrMode::Min => "min",
            DetErrMode::Tpr95 => "tpr95",
        })
    }
}

impl FromStr for DetErrMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(DetErrMode::Min),
            "tpr95" => Ok(DetErrMode::Tpr95),
            other => Err(Error::usage(format!(
                "unknown detection-error mode {other:?} (expected min or tpr95)"
            ))),
        }
    }
}

/// The two score sets, sorted ascending.
struct Sorted {
    id: Vec<f64>,
    ood: Vec<f64>,
}

impl Sorted {
    fn new(id: &[f64], ood: &[f64]) -> Result<Self> {
        if id.is_empty() || ood.is_empty() {
            return Err(Error::usage("ID and OOD score lists must both be nonempty"));
        }
        if id.iter().chain(ood).any(|s| s.is_nan()) {
            return Err(Error::usage("scores must not be NaN"));
        }
        let mut id = id.to_vec();
        let mut ood = ood.to_vec();
        id.sort_by(f64::total_cmp);
        ood.sort_by(f64::total_cmp);
        Ok(Self { id, ood })
    }

    /// Distinct observed scores, descending, followed by nothing; `+∞` is
    /// handled separately by callers.
    fn thresholds_desc(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.id.iter().chain(&self.ood).copied().collect();
        all.sort_by(|a, b| b.total_cmp(a));
        all.dedup();
        all
    }

    fn count_ge(sorted: &[f64], t: f64) -> u64 {
        (sorted.len() - sorted.partition_point(|&x| x < t)) as u64
    }

    /// `(tp, fp)` for the rule `θ >= t`.
    fn confusion(&self, t: f64) -> (u64, u64) {
        (Self::count_ge(&self.ood, t), Self::count_ge(&self.id, t))
    }

    fn n_id(&self) -> u64 {
        self.id.len() as u64
    }

    fn n_ood(&self) -> u64 {
        self.ood.len() as u64
    }
}

/// Probability that a random OOD sample scores higher than a random ID
/// sample; ties count one half.
pub fn auroc(id_scores: &[f64], ood_scores: &[f64]) -> Result<f64> {
    let s = Sorted::new(id_scores, ood_scores)?;
    // Twice the Mann-Whitney U statistic, kept integral.
    let mut twice_u: u64 = 0;
    for &o in &s.ood {
        let below = s.id.partition_point(|&x| x < o) as u64;
        let at_or_below = s.id.partition_point(|&x| x <= o) as u64;
        twice_u += below + at_or_below;
    }
    Ok(twice_u as f64 / (2 * s.n_id() * s.n_ood()) as f64)
}

/// Operating point at a threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// The largest threshold with TPR ≥ 95%, and its rates.
pub fn fpr95_point(id_scores: &[f64], ood_scores: &[f64]) -> Result<OperatingPoint> {
    let s = Sorted::new(id_scores, ood_scores)?;
    fpr95_point_sorted(&s)
}

fn fpr95_point_sorted(s: &Sorted) -> Result<OperatingPoint> {
    for t in s.thresholds_desc() {
        let (tp, fp) = s.confusion(t);
        if 100 * tp >= TPR_TARGET_PERCENT * s.n_ood() {
            return Ok(OperatingPoint {
                threshold: t,
                tpr: tp as f64 / s.n_ood() as f64,
                fpr: fp as f64 / s.n_id() as f64,
            });
        }
    }
    unreachable!("the smallest observed score captures every OOD sample")
}

/// FPR at the largest threshold achieving at least 95% TPR.
pub fn fpr_at_95_tpr(id_scores: &[f64], ood_scores: &[f64]) -> Result<f64> {
    Ok(fpr95_point(id_scores, ood_scores)?.fpr)
}

fn half_error(s: &Sorted, tp: u64, fp: u64) -> f64 {
    let fpr = fp as f64 / s.n_id() as f64;
    let fnr = (s.n_ood() - tp) as f64 / s.n_ood() as f64;
    0.5 * fpr + 0.5 * fnr
}

/// Equal-prior misclassification probability, per `mode`.
pub fn detection_error(id_scores: &[f64], ood_scores: &[f64], mode: DetErrMode) -> Result<f64> {
    let s = Sorted::new(id_scores, ood_scores)?;
    match mode {
        DetErrMode::Min => {
            // t = +∞: nothing predicted OOD.
            let mut best = half_error(&s, 0, 0);
            for t in s.thresholds_desc() {
                let (tp, fp) = s.confusion(t);
                best = best.min(half_error(&s, tp, fp));
            }
            Ok(best)
        }
        DetErrMode::Tpr95 => {
            let p = fpr95_point_sorted(&s)?;
            let (tp, fp) = s.confusion(p.threshold);
            Ok(half_error(&s, tp, fp))
        }
    }
}

fn f1_from_counts(tp: u64, fp: u64, fneg: u64) -> f64 {
    if tp == 0 {
        0.0
    } else {
        (2 * tp) as f64 / (2 * tp + fp + fneg) as f64
    }
}

/// Best F1 over every achievable threshold.
pub fn max_f1(id_scores: &[f64], ood_scores: &[f64]) -> Result<f64> {
    let s = Sorted::new(id_scores, ood_scores)?;
    let mut best = 0.0f64;
    for t in s.thresholds_desc() {
        let (tp, fp) = s.confusion(t);
        best = best.max(f1_from_counts(tp, fp, s.n_ood() - tp));
    }
    Ok(best)
}

/// F1 when samples with `θ > threshold` are predicted OOD.
pub fn f1_at(id_scores: &[f64], ood_scores: &[f64], threshold: f64) -> Result<f64> {
    let s = Sorted::new(id_scores, ood_scores)?;
    Ok(f1_strict(&s, threshold))
}

fn f1_strict(s: &Sorted, threshold: f64) -> f64 {
    let above = |v: &[f64]| (v.len() - v.partition_point(|&x| x <= threshold)) as u64;
    let tp = above(&s.ood);
    let fp = above(&s.id);
    f1_from_counts(tp, fp, s.n_ood() - tp)
}

/// F1 over a grid of critical angles.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct F1Sweep {
    /// `(threshold_degrees, f1)`, thresholds strictly increasing.
    pub curve: Vec<(f64, f64)>,
    pub max_f1: f64,
    /// First threshold attaining `max_f1`.
    pub best_threshold: f64,
    /// Thresholds whose F1 is within 5% of `max_f1`.
    pub near_optimal_band: Vec<f64>,
}

/// Fraction of the maximum F1 that counts as near-optimal.
pub const NEAR_OPTIMAL_FRACTION: f64 = 0.95;

/// F1 (OOD positive, strict `θ > t`) at `t = 0, step, 2·step, …, 90`.
pub fn f1_sweep(id_scores: &[f64], ood_scores: &[f64], step_degrees: f64) -> Result<F1Sweep> {
    let grid = threshold_grid(step_degrees)?;
    let s = Sorted::new(id_scores, ood_scores)?;
    let curve: Vec<(f64, f64)> = grid.into_iter().map(|t| (t, f1_strict(&s, t))).collect();
    let (best_threshold, max_f1) =
        curve
            .iter()
            .copied()
            .fold((curve[0].0, f64::NEG_INFINITY), |acc, (t, f)| {
                if f > acc.1 {
                    (t, f)
                } else {
                    acc
                }
            });
    let near_optimal_band = curve
        .iter()
        .filter(|(_, f)| *f >= NEAR_OPTIMAL_FRACTION * max_f1)
        .map(|(t, _)| *t)
        .collect();
    Ok(F1Sweep {
        curve,
        max_f1,
        best_threshold,
        near_optimal_band,
    })
}

/// Thresholds where every sweep is within 5% of its own maximum. All sweeps
/// must share one grid.
pub fn near_optimal_band(sweeps: &[F1Sweep]) -> Result<Vec<f64>> {
    let first = sweeps
        .first()
        .ok_or_else(|| Error::usage("no sweeps given"))?;
    if sweeps.iter().any(|s| s.curve.len() != first.curve.len()) {
        return Err(Error::usage("sweeps use different threshold grids"));
    }
    Ok((0..first.curve.len())
        .filter(|&k| {
            sweeps
                .iter()
                .all(|s| s.curve[k].1 >= NEAR_OPTIMAL_FRACTION * s.max_f1)
        })
        .map(|k| first.curve[k].0)
        .collect())
}

/// `0, step, …` up to 90 inclusive (90 itself is appended when the step does
/// not divide it).
pub fn threshold_grid(step_degrees: f64) -> Result<Vec<f64>> {
    if !step_degrees.is_finite() || step_degrees <= 0.0 {
        return Err(Error::usage(format!(
            "threshold step must be positive, got {step_degrees}"
        )));
    }
    let n = (90.0 / step_degrees + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n)
        .map(|k| (k as f64 * step_degrees).min(90.0))
        .collect();
    grid.dedup();
    if *grid.last().unwrap() < 90.0 - 1e-9 {
        grid.push(90.0);
    }
    Ok(grid)
}
