use super::model::{ClassDescriptor, EnsembleDescriptors, FittedModel};
use crate::error::{Error, Result};
use crate::hdc::{bind, random_rademacher, HdVector};

/// Fuses several fitted models into ensemble class descriptors
/// `d*_c = ⊕_e d_c^(e) ⊗ z^(e)`, with `z^(e) = random_rademacher(seeds[e], m)`.
///
/// The returned model is a copy of the first member with the ensemble table
/// attached; its own per-class descriptors are those of that first member.
pub fn ensemble_descriptor(per_model: &[FittedModel], seeds: &[u64]) -> Result<FittedModel> {
    let first = per_model
        .first()
        .ok_or_else(|| Error::usage("ensemble needs at least one model"))?;
    if seeds.len() != per_model.len() {
        return Err(Error::usage(format!(
            "{} binding seeds for {} models",
            seeds.len(),
            per_model.len()
        )));
    }
    let class_ids = first.class_ids();
    for (e, model) in per_model.iter().enumerate() {
        if model.hd_dim != first.hd_dim {
            return Err(Error::dim(format!(
                "ensemble member {e}: hd_dim {} differs from {}",
                model.hd_dim, first.hd_dim
            )));
        }
        if model.class_ids() != class_ids {
            return Err(Error::Fit(format!(
                "ensemble member {e}: class set differs from member 0"
            )));
        }
    }

    let keys = seeds
        .iter()
        .map(|&s| random_rademacher(s, first.hd_dim))
        .collect::<Result<Vec<_>>>()?;

    let mut classes = Vec::with_capacity(class_ids.len());
    for (k, &class_id) in class_ids.iter().enumerate() {
        let mut acc: Option<HdVector> = None;
        let mut count = 0;
        for (model, z) in per_model.iter().zip(&keys) {
            let member = &model.classes[k];
            count += member.count;
            let bound = bind(&member.descriptor, z)?;
            match acc.as_mut() {
                None => acc = Some(bound),
                Some(a) => a.add_assign(&bound)?,
            }
        }
        classes.push(ClassDescriptor {
            class_id,
            count,
            descriptor: acc.expect("nonempty ensemble"),
        });
    }

    let mut out = first.clone();
    out.ensemble = Some(EnsembleDescriptors {
        binding_seeds: seeds.to_vec(),
        classes,
    });
    out.validate()?;
    Ok(out)
}

/// Test-time counterpart of [`ensemble_descriptor`]: `y* = ⊕_e y^(e) ⊗ z^(e)`
/// using the binding seeds stored in `model`.
pub fn ensemble_image_descriptor(
    per_model_y: &[HdVector],
    model: &FittedModel,
) -> Result<HdVector> {
    let ens = model
        .ensemble
        .as_ref()
        .ok_or_else(|| Error::usage("model has no ensemble descriptors"))?;
    if per_model_y.len() != ens.binding_seeds.len() {
        return Err(Error::usage(format!(
            "{} member descriptors for an ensemble of {}",
            per_model_y.len(),
            ens.binding_seeds.len()
        )));
    }
    let mut acc: Option<HdVector> = None;
    for (y, &seed) in per_model_y.iter().zip(&ens.binding_seeds) {
        if y.dim() != model.hd_dim {
            return Err(Error::dim(format!(
                "member descriptor dim {} != hd_dim {}",
                y.dim(),
                model.hd_dim
            )));
        }
        let bound = bind(y, &random_rademacher(seed, model.hd_dim)?)?;
        match acc.as_mut() {
            None => acc = Some(bound),
            Some(a) => a.add_assign(&bound)?,
        }
    }
    Ok(acc.expect("nonempty ensemble"))
}
