use serde::Serialize;

use crate::descriptor::{ClassDescriptor, FittedModel};
use crate::error::{Error, Result};
use crate::hdc::{angle_degrees, HdVector};

/// Angle of one sample to its nearest class descriptor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreRecord {
    pub sample_id: u64,
    /// Minimum angle over all class descriptors, in degrees.
    pub theta_degrees: f64,
    pub nearest_class: u32,
    /// Angle to every class descriptor, in class-id order.
    pub per_class_angles: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    InDistribution,
    OutOfDistribution,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::InDistribution => "id",
            Decision::OutOfDistribution => "ood",
        }
    }
}

/// Scores `y` against the model's class descriptors.
pub fn score(y: &HdVector, model: &FittedModel) -> Result<ScoreRecord> {
    score_against(0, y, &model.classes)
}

/// Scores an ensemble descriptor `y*` against the model's `d*` table.
pub fn score_ensemble(y: &HdVector, model: &FittedModel) -> Result<ScoreRecord> {
    let ens = model
        .ensemble
        .as_ref()
        .ok_or_else(|| Error::usage("model has no ensemble descriptors"))?;
    score_against(0, y, &ens.classes)
}

/// `θ = min_c angle(y, d_c)`. Ties go to the lowest class id, since
/// `classes` is sorted by id and only a strictly smaller angle replaces the
/// current best.
pub fn score_against(
    sample_id: u64,
    y: &HdVector,
    classes: &[ClassDescriptor],
) -> Result<ScoreRecord> {
    if classes.is_empty() {
        return Err(Error::usage("cannot score against zero classes"));
    }
    if y.norm() == 0.0 {
        return Err(Error::Degenerate(format!(
            "sample {sample_id}: image descriptor has zero norm"
        )));
    }
    let angles = classes
        .iter()
        .map(|c| angle_degrees(y, &c.descriptor))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, a) in angles.iter().enumerate().skip(1) {
        if *a < angles[best] {
            best = k;
        }
    }
    Ok(ScoreRecord {
        sample_id,
        theta_degrees: angles[best],
        nearest_class: classes[best].class_id,
        per_class_angles: Some(angles),
    })
}

/// OOD iff `θ > θ*`.
pub fn decide(record: &ScoreRecord, threshold_degrees: f64) -> Decision {
    if record.theta_degrees > threshold_degrees {
        Decision::OutOfDistribution
    } else {
        Decision::InDistribution
    }
}

/// Angle between two image descriptors in `[0, 180]`.
///
/// No folding into `[0, 90]` is done: anti-correlated descriptors report
/// angles above 90°.
pub fn pairwise_similarity(y1: &HdVector, y2: &HdVector) -> Result<f64> {
    angle_degrees(y1, y2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class(id: u32, xs: &[f32]) -> ClassDescriptor {
        ClassDescriptor {
            class_id: id,
            count: 1,
            descriptor: HdVector::new(xs.to_vec()).unwrap(),
        }
    }

    fn v(xs: &[f32]) -> HdVector {
        HdVector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn self_similarity_scores_zero() {
        let classes = [class(0, &[1.0, 2.0, 0.0]), class(1, &[0.0, 0.0, 1.0])];
        let r = score_against(0, &classes[1].descriptor, &classes).unwrap();
        assert_eq!(r.theta_degrees, 0.0);
        assert_eq!(r.nearest_class, 1);
    }

    #[test]
    fn orthogonal_query_scores_ninety() {
        let classes = [class(0, &[1.0, 0.0, 0.0]), class(1, &[0.0, 1.0, 0.0])];
        let r = score_against(0, &v(&[0.0, 0.0, 2.0]), &classes).unwrap();
        assert_eq!(r.theta_degrees, 90.0);
    }

    #[test]
    fn ties_go_to_lowest_class_id() {
        let classes = [class(1, &[1.0, 0.0, 0.0]), class(2, &[0.0, 1.0, 0.0])];
        let r = score_against(0, &v(&[1.0, 1.0, 0.0]), &classes).unwrap();
        assert!((r.theta_degrees - 45.0).abs() < 1e-12);
        assert_eq!(r.nearest_class, 1);
        assert_eq!(r.per_class_angles.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn zero_query_is_degenerate() {
        let classes = [class(0, &[1.0, 0.0])];
        assert!(matches!(
            score_against(0, &v(&[0.0, 0.0]), &classes),
            Err(Error::Degenerate(_))
        ));
        assert!(score_against(0, &v(&[1.0, 0.0]), &[]).is_err());
    }

    #[test]
    fn threshold_is_strict() {
        let rec = |theta| ScoreRecord {
            sample_id: 0,
            theta_degrees: theta,
            nearest_class: 0,
            per_class_angles: None,
        };
        assert_eq!(decide(&rec(30.0), 30.0), Decision::InDistribution);
        assert_eq!(decide(&rec(90.0), 0.0), Decision::OutOfDistribution);
        assert_eq!(decide(&rec(0.0), 90.0), Decision::InDistribution);
    }

    #[test]
    fn pairwise_keeps_obtuse_angles() {
        let y = v(&[1.0, -2.0]);
        assert_eq!(pairwise_similarity(&y, &y).unwrap(), 0.0);
        assert_eq!(pairwise_similarity(&y, &y.scaled(-1.0)).unwrap(), 180.0);
    }
}
