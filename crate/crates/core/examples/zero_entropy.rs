//! A tuple supported on a periodic orbit.

use thermoform::classify::{s_independence_check, zero_entropy_structure};
use thermoform::kusuoka::kusuoka_measure;
use thermoform::structure::zero_product_search;
use thermoform::{builtins, Budget};

fn main() -> thermoform::Result<()> {
    let t = builtins::nilpotent2();
    let budget = Budget::default();
    println!("zero product: {:?}", zero_product_search(&t, 4, &budget)?.word.map(|w| w.to_string()));
    let ps = zero_entropy_structure(&t, &budget)?.expect("periodic");
    println!("period {} with blocks of dimension {}, word {}", ps.period, ps.block_dim, ps.word);
    println!("s-independence: {:?}", s_independence_check(&t, 6, 1e-9, &budget)?);
    let table = kusuoka_measure(&t, 1e-12)?.cylinder_table(10, &budget)?;
    let last = table.entropy_estimate().pop().unwrap();
    println!("entropy at n = 10: {:.2e}", last.shannon);
    Ok(())
}
