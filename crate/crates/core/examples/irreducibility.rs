//! Invariant-subspace witnesses, block triangular form and finite
//! invariant unions.

use thermoform::structure::{block_triangularize, find_invariant_subspace, strong_irreducibility_scan, SearchBudget};
use thermoform::{builtins, MatrixTuple};

fn main() -> thermoform::Result<()> {
    let sb = SearchBudget::default();
    let upper = MatrixTuple::from_ints(3, &[&[1, 2, 3, 0, 4, 5, 0, 0, 6], &[2, 0, 1, 0, 1, 1, 0, 0, 3]])?;
    let v = find_invariant_subspace(&upper, &sb);
    println!("triangular tuple: witness {:?}", v.witness().map(|w| w.float_basis().iter().map(|b| b.as_slice().to_vec()).collect::<Vec<_>>()));
    println!("block sizes {:?}", block_triangularize(&upper, &sb)?.block_sizes());

    let t = builtins::notmix2();
    println!("notmix2 reducible: {}", find_invariant_subspace(&t, &sb).is_reducible());
    println!("notmix2 finite union: {}", serde_json::to_string(&strong_irreducibility_scan(&t, &sb))?);
    Ok(())
}
