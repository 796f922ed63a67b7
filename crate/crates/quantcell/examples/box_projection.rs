//! Project points onto quantization cells under different norms and inspect
//! the active face patterns.
//!
//! ```bash
//! cargo run -p quantcell --example box_projection
//! ```

use quantcell::*;

fn main() -> Result<()> {
    let basis = Basis::identity(2)?;
    let tau = 0.25;
    let opts = SolverOptions::default();

    println!("centered cell C(0) = [-{h}, {h}]^2, tau = {tau}\n", h = tau / 2.0);
    let models = [
        ("separable quadratic", NormModel::sep_quad(vec![1.0, 1.0])),
        ("euclidean", NormModel::euclidean()),
        ("ellipsoidal diag(4,1)", NormModel::ellipsoidal(vec![4.0, 0.0, 0.0, 1.0])),
        ("p-power p=3", NormModel::p_power(3.0)),
    ];
    let points: [[f64; 2]; 3] = [[0.2, 0.03], [1.0, 1.0], [-0.6, 0.05]];

    for (name, f) in &models {
        println!("objective: {name}");
        for u in &points {
            let sol = solve_p(u, tau, f, &basis, &opts)?;
            println!(
                "  u = ({:>5.2}, {:>5.2})  ->  u* = ({:>8.5}, {:>8.5})  pattern {}  K = {}  kkt = {:.1e}  iters = {}",
                u[0],
                u[1],
                sol.coords[0],
                sol.coords[1],
                sol.pattern,
                sol.pattern.active_count(),
                sol.kkt_residual,
                sol.iterations,
            );
        }
    }

    // the same solver handles arbitrary cells directly
    let f = NormModel::ellipsoidal(vec![4.0, 0.0, 0.0, 1.0]);
    let k = QuantIndex(vec![3, -2]);
    let sol = solve_ptilde(&k, tau, &f, &basis, &opts)?;
    println!(
        "\ncell {k}: minimizer ({:.5}, {:.5}), pattern {}, faces at lower/upper cell edges",
        sol.coords[0], sol.coords[1], sol.pattern
    );

    // fast path for the separable case on orthogonal bases
    let f = NormModel::sep_quad(vec![1.0, 1.0]);
    let fast = clamp_fast_path(&[0.8 * tau, 0.3 * tau], tau, &f, &basis, &opts)?;
    println!(
        "clamp fast path: u = (0.8t, 0.3t) -> ({:.5}, {:.5}) pattern {}",
        fast.coords[0], fast.coords[1], fast.pattern
    );
    Ok(())
}
