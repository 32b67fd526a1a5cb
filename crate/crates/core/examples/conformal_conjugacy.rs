//! Recovering a conjugator to scaled orthogonal matrices.

use thermoform::classify::{conformal_conjugacy_check, ConformalVerdict};
use thermoform::{builtins, Matrix, MatrixTuple};

fn main() -> thermoform::Result<()> {
    // 2 * rotation by 90 degrees and 10 * a reflection
    let ortho = MatrixTuple::from_ints(2, &[&[0, -2, 2, 0], &[6, 8, 8, -6]])?;
    let hidden = ortho.conjugate(&Matrix::from_ints(2, &[2, 1, 0, 1]))?;
    match conformal_conjugacy_check(&hidden, 1e-8)? {
        ConformalVerdict::Conjugator { b, residual, .. } => println!("B = {:?}, residual {residual:.1e}", b.as_slice()),
        other => println!("{other:?}"),
    }
    println!("notmix2: {}", serde_json::to_string(&conformal_conjugacy_check(&builtins::notmix2(), 1e-8)?)?);
    Ok(())
}
