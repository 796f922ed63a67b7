//! A desk-scale Monte Carlo run of the code-length law.
//!
//! Estimates P(K active faces) per rung of a tau ladder for data uniform in
//! the coord-sup ball, checks it against the grid-counting identity, and
//! fits the observed exponents of log P against log tau and log E. The
//! fitted slope for K = 1 lands near N - K = 1; the report also carries the
//! printed law's exponent (N-K)/(N+1) for comparison.
//!
//! ```bash
//! cargo run --release -p quantcell --example scaling_experiment
//! ```

use quantcell::*;

fn main() -> Result<()> {
    let config = ExperimentConfig {
        basis: Basis::identity(2)?,
        f: NormModel::sep_quad(vec![1.0, 1.0]),
        f_d: NormModel::coord_sup(),
        recon_norm: NormModel::coord_l1(),
        tau_prime: 1.0,
        tau_ladder: vec![0.25, 0.125, 0.0625, 0.03125, 0.015625],
        samples_per_tau: 200_000,
        seed: 42,
    };
    let report = run_scaling(&config, &RunOptions::default())?;

    println!(
        "{:>10} {:>3} {:>12} {:>10} {:>12} {:>12} {:>12}",
        "tau", "K", "p_hat", "se", "p*t^(K-N)", "grid scaled", "E_hat"
    );
    for row in &report.rows {
        println!(
            "{:>10} {:>3} {:>12.6} {:>10.2e} {:>12.6} {:>12.6} {:>12.6}",
            row.tau, row.k, row.p_hat, row.se, row.scaled_prob, row.grid_scaled, row.e_hat
        );
    }

    println!("\nconstants:");
    let c = &report.constants;
    println!("  M = {}, B = {} ({})", c.m, c.b, c.b_method);
    println!(
        "  C = {:.6} +- {:.1e} (MC) / {:.12} (quadrature)",
        c.c_monte_carlo, c.c_mc_se, c.c_quadrature
    );
    for d in &c.d {
        println!(
            "  K = {}: A_K = {}, D_K = {:.6} (exponent {:.4}), D'_K = {:.6} (exponent {})",
            d.k, d.a_k, d.d_k, d.exponent, d.d_prime_k, d.alt_exponent
        );
    }

    println!("\nexponent fits:");
    print!("{}", quantcell::report::fit_table(&report));

    for w in &report.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
