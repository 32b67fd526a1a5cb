//! The s = 2 equilibrium state: eigenmatrices, cylinder measures, Gibbs
//! bounds and the derived Lyapunov and entropy estimates.

use thermoform::kusuoka::kusuoka_measure;
use thermoform::{builtins, Budget, Word};

fn main() -> thermoform::Result<()> {
    let kd = kusuoka_measure(&builtins::notmix2(), 1e-12)?;
    println!("P = {:.12}, residuals {:.1e} {:.1e}", kd.pressure, kd.residual, kd.residual_hat);
    println!("Q = {:?}", kd.q.as_slice());
    for w in [[1, 1], [1, 2], [2, 1], [2, 2]] {
        println!("mu({}) = {:.6}", Word::from_one_based(&w), kd.cylinder_measure(&Word::from_one_based(&w))?);
    }

    let table = kd.cylinder_table(8, &Budget::default())?;
    println!("consistency: {:?}", table.consistency_check());
    let g = table.gibbs_verify(kd.gibbs_constants());
    println!("Gibbs ratios in [{:.4}, {:.4}] within [{:.4}, {:.4}]", g.min_ratio, g.max_ratio, g.c_lower, g.c_upper);
    for (ly, h) in table.lyapunov_top().iter().zip(table.entropy_estimate()) {
        println!("n = {}: Lyapunov bound {:.6}, entropy {:.6}, P - 2 Lyapunov {:.6}", ly.n, ly.bound, h.shannon, h.variational);
    }
    Ok(())
}
