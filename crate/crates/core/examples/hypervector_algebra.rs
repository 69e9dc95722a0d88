// Projection, bundling, binding and angles in a 10,000-dimensional space.

use hdff::hdc::{angle_degrees, bind, bundle, cosine, generate_semi_orthogonal, random_rademacher};
use hdff::HdVector;

pub fn run_example() -> hdff::Result<()> {
    let m = 10_000;
    let p = generate_semi_orthogonal(42, m, 3)?;
    let a = [1.0f32, 2.0, -0.5];
    let b = [0.5f32, -1.0, 3.0];
    let (pa, pb) = (p.project(&a)?, p.project(&b)?);
    let raw: f32 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    println!("<a,b> = {raw:.4}, <Pa,Pb> = {:.4}", pa.dot(&pb)?);

    let s = bundle([&pa, &pb])?;
    println!("angle(Pa, Pa+Pb) = {:.2}°", angle_degrees(&pa, &s)?);

    let z = random_rademacher(7, m)?;
    let (az, bz) = (bind(&pa, &z)?, bind(&pb, &z)?);
    println!(
        "cos before binding {:.6}, after {:.6}, cos(Pa, Pa⊗z) = {:.4}",
        cosine(&pa, &pb)?,
        cosine(&az, &bz)?,
        cosine(&pa, &az)?
    );

    let u = random_rademacher(1, m)?;
    let v = random_rademacher(2, m)?;
    println!("two random keys sit {:.2}° apart", angle_degrees(&u, &v)?);
    assert!(
        angle_degrees(
            &HdVector::new(vec![1.0, 0.0])?,
            &HdVector::new(vec![1.0, 1.0])?
        )? - 45.0
            < 1e-9
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> hdff::Result<()> {
    run_example()
}
