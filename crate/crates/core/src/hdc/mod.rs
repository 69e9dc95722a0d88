//! Hyperdimensional algebra: projection, bundling (element-wise sum),
//! binding (Hadamard product with ±1 vectors) and angles.

mod projection;
pub mod seed;
mod vector;

use rand::Rng;

pub use projection::{
    generate_semi_orthogonal, layer_seed, project, semi_orthogonal_f64, ProjectionMatrix,
    ProjectionSet,
};
pub use vector::HdVector;

use crate::error::{Error, Result};

/// Bundles `inputs` by exact element-wise summation in input order.
///
/// No normalisation or truncation is applied.
pub fn bundle<'a, I>(inputs: I) -> Result<HdVector>
where
    I: IntoIterator<Item = &'a HdVector>,
{
    let mut iter = inputs.into_iter();
    let mut acc = iter
        .next()
        .ok_or_else(|| Error::usage("cannot bundle an empty sequence"))?
        .clone();
    for v in iter {
        acc.add_assign(v)?;
    }
    Ok(acc)
}

/// Element-wise (Hadamard) product.
///
/// With a ±1 key `b`, binding is its own inverse and preserves every dot
/// product between vectors bound to the same key.
pub fn bind(a: &HdVector, b: &HdVector) -> Result<HdVector> {
    a.check_dim(b)?;
    Ok(HdVector::from_raw(
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x * y)
            .collect(),
    ))
}

/// A vector of i.i.d. uniform ±1 entries drawn from `seed`.
pub fn random_rademacher(seed: u64, m: usize) -> Result<HdVector> {
    if m == 0 {
        return Err(Error::dim("rademacher vector needs m >= 1"));
    }
    let mut rng = seed::rng_from_seed(seed);
    let mut values = Vec::with_capacity(m);
    while values.len() < m {
        let bits: u64 = rng.random();
        let take = (m - values.len()).min(64);
        values.extend((0..take).map(|i| if bits >> i & 1 == 1 { 1.0f32 } else { -1.0 }));
    }
    Ok(HdVector::from_raw(values))
}

/// Cosine similarity, clamped to `[-1, 1]`.
///
/// Fails with [`Error::Degenerate`] if either vector has zero norm.
pub fn cosine(a: &HdVector, b: &HdVector) -> Result<f64> {
    let dot = a.dot(b)?;
    let (na2, nb2) = (a.dot(a)?, b.dot(b)?);
    if na2 == 0.0 || nb2 == 0.0 {
        return Err(Error::Degenerate(
            "angle against a zero-norm vector is undefined".into(),
        ));
    }
    // One square root keeps cosine(a, a) at exactly 1.
    Ok((dot / (na2 * nb2).sqrt()).clamp(-1.0, 1.0))
}

/// Angle between `a` and `b` in degrees, in `[0, 180]`.
pub fn angle_degrees(a: &HdVector, b: &HdVector) -> Result<f64> {
    Ok(cosine(a, b)?.acos().to_degrees())
}
