//! Exhaustive slice-uniqueness sweep: fixing the active coordinates of a
//! class cuts the grid into slices, and each slice meets the class fan
//! SSAT(class, ]0, tau']) in at most one grid point.
//!
//! ```bash
//! cargo run -p quantcell --example slice_uniqueness
//! ```

use quantcell::geometry::{all_patterns, slice_uniqueness_check, ClassId};
use quantcell::*;

fn main() -> Result<()> {
    let tau = 0.0625;
    let f_d = NormModel::coord_sup();
    let opts = SolverOptions::default();

    for n in [2usize, 3] {
        let basis = Basis::identity(n)?;
        let mut q = vec![0.0; n * n];
        q[0] = 4.0;
        for i in 1..n {
            q[i * n + i] = 1.0;
        }
        let models = [
            ("sep-quad", NormModel::sep_quad(vec![1.0; n])),
            ("ellipsoidal", NormModel::ellipsoidal(q)),
        ];
        for (name, f) in &models {
            let mut classes = 0u64;
            let mut slices = 0u64;
            let mut points = 0u64;
            let mut violations = 0u64;
            for pattern in all_patterns(n, 1) {
                let class = ClassId {
                    pattern: pattern.clone(),
                    tau,
                };
                let check = slice_uniqueness_check(&class, tau, 1.0, f, &f_d, &basis, &opts)?;
                classes += 1;
                slices += check.slices;
                points += check.points_in_class;
                if let Some(w) = check.violation {
                    violations += 1;
                    println!("  VIOLATION in class {pattern}: {w:?}");
                }
            }
            println!(
                "N = {n}, f = {name:<12} {classes:>3} classes, {points:>6} class points, \
                 {slices:>6} slices, {violations} violations"
            );
        }
    }
    Ok(())
}
