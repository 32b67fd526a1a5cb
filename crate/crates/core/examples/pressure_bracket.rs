//! Pressure brackets for the non-mixing pair at several exponents.

use thermoform::pressure::{pressure_bracket, pressure_exact_even};
use thermoform::{builtins, Budget};

fn main() -> thermoform::Result<()> {
    let t = builtins::notmix2();
    let budget = Budget::default();
    println!("exact P(2) = {:.12}  (log 5 = {:.12})", pressure_exact_even(&t, 1, &budget)?, 5f64.ln());
    for s in [1.0, 2.0, 3.0, 4.0] {
        let b = pressure_bracket(&t, s, 10, &budget)?;
        println!("s = {s}: [{:.6}, {:.6}] exact {:?}", b.periodic_lower, b.upper, b.exact);
    }
    // the upper bound decays like (log 2)/n above the limit
    for row in pressure_bracket(&t, 2.0, 10, &budget)?.series {
        println!("{:>2} {:.6} {:.6} {:.6}", row.n, row.upper, row.periodic_lower, row.spectral_diagnostic);
    }
    Ok(())
}
