//! Correlations of the non-mixing pair oscillate with the parity of the
//! shift; the peripheral spectrum and the product scan agree.

use thermoform::kusuoka::{kusuoka_measure, peripheral_spectrum};
use thermoform::structure::{mixing_obstruction_scan, SearchBudget};
use thermoform::{builtins, Budget, Word};

fn main() -> thermoform::Result<()> {
    let t = builtins::notmix2();
    let budget = Budget::default();
    let kd = kusuoka_measure(&t, 1e-12)?;
    let one = Word::from_one_based(&[1]);
    let mu = kd.cylinder_measure(&one)?;
    for (n, c) in kd.correlation_series(&one, &one, 10)? {
        println!("n = {n:>2}: {c:.6}  (mu([1])^2 = {:.6})", mu * mu);
    }
    println!("peripheral: {:?}", peripheral_spectrum(&t, 1e-9, &budget)?);
    let obstruction = mixing_obstruction_scan(&t, 3, &SearchBudget::default(), &budget)?;
    println!("obstruction at n = {:?}", obstruction.map(|o| o.n));
    Ok(())
}
