use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use crate::descriptor::{encode_source, fit, select_layers, FittedModel, SampleSource};
use crate::error::{Error, Result};
use crate::hdc::seed::derive_seed;
use crate::io::save_model;
use crate::metrics::{
    self, auroc, decide, pairwise_similarity, score_against, Decision, MetricReport, ScoreRecord,
};

/// Result of [`cmd_fit`].
#[derive(Clone, Debug)]
pub struct FitSummary {
    pub model: FittedModel,
    /// `(class_id, samples)` in class order.
    pub class_counts: Vec<(u32, u64)>,
    pub elapsed: Duration,
}

/// Fits a model on a labelled pack and, if `out` is given, writes it.
pub fn cmd_fit<S: SampleSource + ?Sized>(
    train: &S,
    config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<FitSummary> {
    config.validate()?;
    if train.num_samples() > 0 && train.label(0).is_none() {
        return Err(Error::usage("training pack has no class labels"));
    }
    let start = Instant::now();
    let model = config.run(|| fit(train, &config.fit_config()))?;
    let elapsed = start.elapsed();
    if let Some(path) = out {
        save_model(&model, path)?;
    }
    Ok(FitSummary {
        class_counts: model
            .classes
            .iter()
            .map(|c| (c.class_id, c.count))
            .collect(),
        model,
        elapsed,
    })
}

/// One row of [`cmd_score`] output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreRow {
    pub record: ScoreRecord,
    pub decision: Option<Decision>,
}

/// θ and nearest class for every sample of `source`.
pub fn score_source<S: SampleSource + ?Sized>(
    source: &S,
    model: &FittedModel,
) -> Result<Vec<ScoreRecord>> {
    let encoder = model.encoder()?;
    let ys = encode_source(source, &encoder)?;
    ys.par_iter()
        .enumerate()
        .map(|(i, y)| score_against(i as u64, y, &model.classes))
        .collect()
}

pub fn cmd_score<S: SampleSource + ?Sized>(
    source: &S,
    model: &FittedModel,
    theta_star: Option<f64>,
    config: &ExperimentConfig,
) -> Result<Vec<ScoreRow>> {
    config.validate()?;
    let records = config.run(|| score_source(source, model))?;
    Ok(records
        .into_iter()
        .map(|record| ScoreRow {
            decision: theta_star.map(|t| decide(&record, t)),
            record,
        })
        .collect())
}

fn thetas(records: &[ScoreRecord]) -> Vec<f64> {
    records.iter().map(|r| r.theta_degrees).collect()
}

/// Scores both packs and computes every metric, treating θ as the OOD score.
pub fn cmd_eval<S: SampleSource + ?Sized, T: SampleSource + ?Sized>(
    id: &S,
    ood: &T,
    model: &FittedModel,
    config: &ExperimentConfig,
) -> Result<MetricReport> {
    config.validate()?;
    if id.num_samples() == 0 || ood.num_samples() == 0 {
        return Err(Error::usage("evaluation packs must not be empty"));
    }
    config.run(|| {
        let id_scores = thetas(&score_source(id, model)?);
        let ood_scores = thetas(&score_source(ood, model)?);
        metrics::evaluate(&id_scores, &ood_scores, &config.eval_options())
    })
}

/// The four headline metrics for one pipeline configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblationRow {
    /// `"layer <id>"` or `"fusion"`.
    pub label: String,
    pub layer_id: Option<u32>,
    pub auroc: f64,
    pub fpr_at_95tpr: f64,
    pub detection_error: f64,
    pub max_f1: f64,
}

/// Per-layer table for one OOD pack; the last row is the all-layer fusion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerAblation {
    pub rows: Vec<AblationRow>,
}

impl LayerAblation {
    pub fn fusion(&self) -> &AblationRow {
        self.rows.last().expect("fusion row is always present")
    }

    pub fn layer_rows(&self) -> &[AblationRow] {
        &self.rows[..self.rows.len() - 1]
    }

    /// The single layer with the highest AUROC (lowest id on ties).
    pub fn best_layer(&self) -> &AblationRow {
        self.layer_rows()
            .iter()
            .fold(None::<&AblationRow>, |best, r| match best {
                Some(b) if b.auroc >= r.auroc => Some(b),
                _ => Some(r),
            })
            .expect("at least one layer row")
    }
}

fn ablation_row(
    label: String,
    layer_id: Option<u32>,
    id_scores: &[f64],
    ood_scores: &[f64],
    config: &ExperimentConfig,
) -> Result<AblationRow> {
    Ok(AblationRow {
        label,
        layer_id,
        auroc: auroc(id_scores, ood_scores)?,
        fpr_at_95tpr: metrics::fpr_at_95_tpr(id_scores, ood_scores)?,
        detection_error: metrics::detection_error(id_scores, ood_scores, config.det_err_mode)?,
        max_f1: metrics::max_f1(id_scores, ood_scores)?,
    })
}

/// Layer ablation against several OOD packs, fitting each configuration once.
/// Returns one table per OOD pack.
pub fn ablate_layers_multi<S, T>(
    train: &S,
    id: &S,
    oods: &[&T],
    config: &ExperimentConfig,
) -> Result<Vec<LayerAblation>>
where
    S: SampleSource + ?Sized,
    T: SampleSource + ?Sized,
{
    config.validate()?;
    if oods.is_empty() {
        return Err(Error::usage("layer ablation needs at least one OOD pack"));
    }
    let selected = select_layers(&train.layer_shapes(), config.layers.as_deref())?;
    let all_ids: Vec<u32> = selected.iter().map(|s| s.layer_id).collect();

    let mut runs: Vec<(String, Option<u32>, Vec<u32>)> = all_ids
        .iter()
        .map(|&l| (format!("layer {l}"), Some(l), vec![l]))
        .collect();
    runs.push(("fusion".into(), None, all_ids.clone()));

    let mut tables = vec![LayerAblation { rows: Vec::new() }; oods.len()];
    config.run(|| {
        for (label, layer_id, layers) in runs {
            let mut cfg = config.fit_config();
            cfg.layers = Some(layers);
            let model = fit(train, &cfg)?;
            let id_scores = thetas(&score_source(id, &model)?);
            for (table, ood) in tables.iter_mut().zip(oods) {
                let ood_scores = thetas(&score_source(*ood, &model)?);
                table.rows.push(ablation_row(
                    label.clone(),
                    layer_id,
                    &id_scores,
                    &ood_scores,
                    config,
                )?);
            }
        }
        Ok(())
    })?;
    Ok(tables)
}

pub fn cmd_ablate_layers<S, T>(
    id: &S,
    ood: &T,
    train: &S,
    config: &ExperimentConfig,
) -> Result<LayerAblation>
where
    S: SampleSource + ?Sized,
    T: SampleSource + ?Sized,
{
    Ok(ablate_layers_multi(train, id, &[ood], config)?.remove(0))
}

/// AUROC statistics for one hyperspace dimension.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimRow {
    pub hd_dim: usize,
    pub aurocs: Vec<f64>,
    pub mean: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub ci95_half_width: f64,
}

impl DimRow {
    pub fn ci_width(&self) -> f64 {
        2.0 * self.ci95_half_width
    }
}

/// Mean and 95% normal-approximation half-width (`1.96 · s / √n`).
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * var.sqrt() / n.sqrt())
}

/// Projection seed of repeat `r`: the configured seed for `r = 0`, derived
/// seeds after that.
pub fn repeat_seed(master_seed: u64, repeat: usize) -> u64 {
    if repeat == 0 {
        master_seed
    } else {
        derive_seed(master_seed, repeat as u64)
    }
}

/// For each dimension, refits with `repeats` independent projection seeds and
/// reports the AUROC mean and 95% interval.
pub fn cmd_ablate_dims<S, T>(
    train: &S,
    id: &S,
    ood: &T,
    dims: &[usize],
    repeats: usize,
    config: &ExperimentConfig,
) -> Result<Vec<DimRow>>
where
    S: SampleSource + ?Sized,
    T: SampleSource + ?Sized,
{
    config.validate()?;
    if dims.is_empty() || repeats == 0 {
        return Err(Error::usage("need at least one dimension and one repeat"));
    }
    let selected = select_layers(&train.layer_shapes(), config.layers.as_deref())?;
    let max_channels = selected.iter().map(|s| s.channels).max().unwrap_or(0);
    if let Some(&bad) = dims.iter().find(|&&m| m < max_channels) {
        return Err(Error::dim(format!(
            "hd_dim {bad} is below the widest layer ({max_channels} channels)"
        )));
    }
    config.run(|| {
        dims.iter()
            .map(|&hd_dim| {
                let aurocs = (0..repeats)
                    .map(|r| {
                        let mut cfg = config.fit_config();
                        cfg.hd_dim = hd_dim;
                        cfg.master_seed = repeat_seed(config.master_seed, r);
                        let model = fit(train, &cfg)?;
                        auroc(
                            &thetas(&score_source(id, &model)?),
                            &thetas(&score_source(ood, &model)?),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                let (mean, half) = mean_ci95(&aurocs);
                Ok(DimRow {
                    hd_dim,
                    aurocs,
                    mean,
                    ci95_half_width: half,
                })
            })
            .collect()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimilarityRow {
    pub a: usize,
    pub b: usize,
    pub angle_degrees: f64,
}

/// Angle between the image descriptors of each sample pair.
pub fn cmd_similarity<S: SampleSource + ?Sized>(
    source: &S,
    model: &FittedModel,
    pairs: &[(usize, usize)],
) -> Result<Vec<SimilarityRow>> {
    let n = source.num_samples();
    if let Some(&(a, b)) = pairs.iter().find(|(a, b)| *a >= n || *b >= n) {
        return Err(Error::usage(format!(
            "pair ({a}, {b}) references a sample outside 0..{n}"
        )));
    }
    let encoder = model.encoder()?;
    let layer_ids = encoder.layer_ids();
    let mut needed: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    needed.sort_unstable();
    needed.dedup();
    let descriptors: BTreeMap<usize, _> = needed
        .par_iter()
        .map(|&i| {
            let maps = source.load(i, &layer_ids)?;
            Ok((i, encoder.image_descriptor(&maps)?))
        })
        .collect::<Result<_>>()?;
    pairs
        .iter()
        .map(|&(a, b)| {
            Ok(SimilarityRow {
                a,
                b,
                angle_degrees: pairwise_similarity(&descriptors[&a], &descriptors[&b])?,
            })
        })
        .collect()
}
