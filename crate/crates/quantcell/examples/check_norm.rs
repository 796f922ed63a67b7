//! Probe the objective hypotheses (strictly convex level sets, curvature)
//! for several norms.
//!
//! ```bash
//! cargo run -p quantcell --example check_norm
//! ```

use quantcell::*;

fn main() {
    let candidates = [
        ("euclidean", NormModel::euclidean()),
        ("ellipsoidal diag(4,1)", NormModel::ellipsoidal(vec![4.0, 0.0, 0.0, 1.0])),
        ("p-power p=3", NormModel::p_power(3.0)),
        ("p-power p=1.01 (near-flat)", NormModel::p_power(1.01)),
        ("coord-sup (flat faces)", NormModel::coord_sup()),
    ];
    for (name, f) in &candidates {
        print!("{name:<28} ");
        match f.check_hypotheses(2, 400, 1) {
            Ok(d) => {
                let flag = if d.lipschitz_estimate_hinv > 1e3 {
                    "  <- near-flat warning"
                } else {
                    ""
                };
                println!(
                    "margin {:>10.3e}   h^-1 Lipschitz estimate {:>10.3e}{flag}",
                    d.strict_convexity_margin, d.lipschitz_estimate_hinv
                );
            }
            Err(e) => println!("REJECTED: {e}"),
        }
    }
}
