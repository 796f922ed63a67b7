//! Encode vectors as (active set, boundary values) and decode them back.
//!
//! The code stores face values only; the decoder recovers which side of the
//! cell each value sits on from the sign of the objective gradient, then
//! reads the remaining cell indices off the free minimizer.
//!
//! ```bash
//! cargo run -p quantcell --example encode_decode
//! ```

use quantcell::*;

fn main() -> Result<()> {
    let basis = Basis::identity(2)?;
    let f = NormModel::sep_quad(vec![1.0, 1.0]);
    let tau = 0.25;
    let opts = SolverOptions::default();

    for u in [[0.05, -0.1], [0.5, 0.1], [-0.5, 0.95]] {
        let k = quantize(&u, tau, &basis)?;
        let code = encode(&u, tau, &f, &basis, &opts)?;
        let json = serde_json::to_string(&code)?;
        let (decoded, reconstruction) = decode(&code, &f, &basis, &opts)?;
        let error = reconstruction_error(&u, &code, &NormModel::coord_l1(), &basis)?;
        println!("u = ({:>5.2}, {:>5.2})", u[0], u[1]);
        println!("  cell            {k}");
        println!("  code            {json}");
        println!("  decoded cell    {decoded}");
        println!("  reconstruction  ({:.4}, {:.4})", reconstruction[0], reconstruction[1]);
        println!("  l1 error        {error:.4}");
        assert_eq!(decoded, k);
    }

    // codes survive serialization bit-exactly
    let code = encode(&[0.5, 0.1], tau, &f, &basis, &opts)?;
    let reloaded: Code = serde_json::from_str(&serde_json::to_string(&code)?)?;
    assert_eq!(reloaded, code);
    println!("\ncode JSON round-trip is bit-exact");
    Ok(())
}
