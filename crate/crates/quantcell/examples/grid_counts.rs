//! Grid-counting limits: tau^K times the number of grid points in the data
//! ball whose cell projection has K active faces converges to the constant
//! A_K as tau shrinks.
//!
//! For the separable-quadratic objective on the identity basis with the
//! coord-sup data ball of radius 1, the limits are A_1 = 4 and A_2 = 4,
//! and the K = 1 scaled count is exact already at finite tau.
//!
//! ```bash
//! cargo run -p quantcell --example grid_counts
//! ```

use quantcell::geometry::estimate_a_k;
use quantcell::*;

fn main() -> Result<()> {
    let basis = Basis::identity(2)?;
    let f = NormModel::sep_quad(vec![1.0, 1.0]);
    let f_d = NormModel::coord_sup();
    let opts = SolverOptions::default();
    let ladder = [0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125];

    for k in 1..=2usize {
        let est = estimate_a_k(k, 1.0, &f, &f_d, &basis, &ladder, &opts)?;
        println!("K = {k}:");
        println!(
            "{:>12} {:>10} {:>12} {:>12} {:>12} {:>12}",
            "tau", "count", "scaled", "lo-bracket", "hi-bracket", "diff"
        );
        for rung in &est.rungs {
            println!(
                "{:>12} {:>10} {:>12.6} {:>12.6} {:>12.6} {:>12}",
                rung.tau,
                rung.count,
                rung.scaled,
                rung.scaled_lo,
                rung.scaled_hi,
                rung.diff_from_prev
                    .map(|d| format!("{d:+.2e}"))
                    .unwrap_or_default(),
            );
        }
        println!("  A_{k} estimate: {}\n", est.estimate);
    }

    // the bracketing radii tau' -/+ M tau pinch the primary count
    let m = constant_m(&f_d, &basis)?;
    println!("M = sup f_d over the unit cell = {m} (slack radius = tau' +- M tau)");
    Ok(())
}
