//! The constants of the limiting law, computed standalone: the cell bound M,
//! the ball-to-cell volume ratio B, the unit-cell norm mean C, and
//! D_K = A_K / (B C^((N-K)/(N+1))).
//!
//! ```bash
//! cargo run -p quantcell --example constants
//! ```

use quantcell::geometry::estimate_a_k;
use quantcell::*;

fn main() -> Result<()> {
    let basis = Basis::identity(2)?;
    let f = NormModel::sep_quad(vec![1.0, 1.0]);
    let f_d = NormModel::coord_sup();
    let l1 = NormModel::coord_l1();
    let opts = SolverOptions::default();
    let n = 2;

    let m = constant_m(&f_d, &basis)?;
    println!("M (sup of f_d over the unit cell)     = {m}");

    let (b, method, se) = compute_b(&f_d, 1.0, &basis, 1_000_000, 0xB0)?;
    println!("B (ball / cell volume ratio)          = {b} [{method}{}]",
        se.map(|s| format!(", se {s:.1e}")).unwrap_or_default());

    let (c_mc, c_se) = compute_c_monte_carlo(&l1, n, 1_000_000, 0xC0)?;
    let (c_quad, c_delta) = compute_c_quadrature(&l1, n, 1_000_000)?;
    println!("C (unit-cell mean of the recon norm)  = {c_mc:.6} +- {c_se:.1e} [monte carlo]");
    println!("                                      = {c_quad:.15} [quadrature, delta {c_delta:.1e}]");

    // B for a euclidean data ball, for contrast: the area of the unit disc
    let (b_disc, _, _) = compute_b(&NormModel::euclidean(), 1.0, &basis, 1_000_000, 0xB1)?;
    println!("B for a euclidean data ball           = {b_disc:.6} (pi = {:.6})", std::f64::consts::PI);

    println!();
    let ladder = [0.125, 0.0625, 0.03125, 0.015625];
    for k in 1..=n {
        let a = estimate_a_k(k, 1.0, &f, &f_d, &basis, &ladder, &opts)?;
        let (d_k, d_prime_k) = compute_d_k(a.estimate, b, c_quad, n, k)?;
        println!(
            "K = {k}: A_K = {}  D_K = {d_k:.6}  D'_K = {d_prime_k:.6}  \
             (exponents (N-K)/(N+1) = {:.4} and N-K = {})",
            a.estimate,
            (n - k) as f64 / (n as f64 + 1.0),
            n - k
        );
    }
    Ok(())
}
