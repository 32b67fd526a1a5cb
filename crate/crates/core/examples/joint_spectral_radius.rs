//! Joint spectral radius and p-radius brackets.

use thermoform::pressure::{radius, RadiusExponent};
use thermoform::{builtins, Budget};

fn main() -> thermoform::Result<()> {
    let budget = Budget::default();
    for (name, t) in [("notmix2", builtins::notmix2()), ("nilpotent2", builtins::nilpotent2()), ("rankone4", builtins::rankone4())] {
        let jsr = radius(&t, RadiusExponent::Infinity, 8, &budget)?;
        let two = radius(&t, RadiusExponent::Finite(2.0), 8, &budget)?;
        let one = radius(&t, RadiusExponent::Finite(1.0), 8, &budget)?;
        println!(
            "{name}: jsr [{:.6}, {:.6}], 2-radius {:.6}, 1-radius [{:.6}, {:.6}]",
            jsr.lower, jsr.upper, two.lower, one.lower, one.upper
        );
    }
    Ok(())
}
