//! Encoding a vector as (active set, boundary values) and decoding back.
//!
//! `encode` quantizes the datum, projects its cell under the objective norm,
//! and emits the active coordinates with their face values. The code stores
//! values only, no face flags: the decoder recovers which side each value
//! sits on from the sign of the objective gradient at the reconstructed
//! minimizer, which is exactly the first-order optimality information the
//! code carries.

use crate::basis::{cell_center, quantize, quantize_coords, Basis, QuantIndex};
use crate::error::{Error, Result};
use crate::norms::NormModel;
use crate::solver::{minimize_with_fixed_coords, solve_ptilde, SolverOptions};
use serde::{Deserialize, Serialize};

/// The code of a datum: the step, the ambient dimension, and the sorted list
/// of (coordinate index, face value) pairs. Indices are 0-based in memory and
/// 1-based on the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct Code {
    pub tau: f64,
    pub n: usize,
    pub entries: Vec<(usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct CodeWire {
    tau: f64,
    n: usize,
    entries: Vec<(usize, f64)>,
}

impl Serialize for Code {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CodeWire {
            tau: self.tau,
            n: self.n,
            entries: self.entries.iter().map(|&(j, v)| (j + 1, v)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Code {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Code, D::Error> {
        let wire = CodeWire::deserialize(d)?;
        for &(j, _) in &wire.entries {
            if j == 0 {
                return Err(serde::de::Error::custom(
                    "code entries use 1-based coordinate indices",
                ));
            }
        }
        Ok(Code {
            tau: wire.tau,
            n: wire.n,
            entries: wire.entries.iter().map(|&(j, v)| (j - 1, v)).collect(),
        })
    }
}

impl Code {
    /// Number of coded coordinates, the code length `K`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Structural invariants: positive step, indices strictly increasing and
    /// in range, every value on a cell edge (`value/tau + 1/2` integral).
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidCode {
                message: format!("tau must be positive, got {}", self.tau),
            });
        }
        if self.n == 0 {
            return Err(Error::InvalidCode {
                message: "dimension must be positive".into(),
            });
        }
        let mut prev: Option<usize> = None;
        for &(j, v) in &self.entries {
            if j >= self.n {
                return Err(Error::InvalidCode {
                    message: format!("coordinate index {} out of range 1..={}", j + 1, self.n),
                });
            }
            if let Some(p) = prev {
                if j <= p {
                    return Err(Error::InvalidCode {
                        message: "coordinate indices must be strictly increasing".into(),
                    });
                }
            }
            prev = Some(j);
            if !v.is_finite() {
                return Err(Error::InvalidCode {
                    message: format!("non-finite value on coordinate {}", j + 1),
                });
            }
            let t = v / self.tau + 0.5;
            if (t - t.round()).abs() > 1e-9 * t.abs().max(1.0) {
                return Err(Error::InvalidCode {
                    message: format!(
                        "value {v} on coordinate {} is not a cell edge for tau = {}",
                        j + 1,
                        self.tau
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Encode a datum: quantize, project the cell, emit the active faces.
pub fn encode(
    u: &[f64],
    tau: f64,
    f: &NormModel,
    basis: &Basis,
    opts: &SolverOptions,
) -> Result<Code> {
    let k = quantize(u, tau, basis)?;
    encode_cell(&k, tau, f, basis, opts)
}

/// Encode a cell index directly (the code depends on `u` only through its
/// cell).
pub fn encode_cell(
    k: &QuantIndex,
    tau: f64,
    f: &NormModel,
    basis: &Basis,
    opts: &SolverOptions,
) -> Result<Code> {
    let sol = solve_ptilde(k, tau, f, basis, opts)?;
    if sol.degenerate {
        return Err(Error::DegenerateSolve {
            index: sol.degenerate_coords[0],
        });
    }
    let entries: Vec<(usize, f64)> = sol
        .pattern
        .support()
        .into_iter()
        .map(|j| (j, sol.coords[j]))
        .collect();
    Ok(Code {
        tau,
        n: basis.dim(),
        entries,
    })
}

/// Decode a code back to the cell index and the cell-center reconstruction.
///
/// Free coordinates of the cell minimizer are recovered by minimizing the
/// objective with the coded coordinates fixed; the side of each coded face
/// follows from the sign of the objective gradient there (positive means the
/// lower face of the cell).
pub fn decode(
    code: &Code,
    f: &NormModel,
    basis: &Basis,
    opts: &SolverOptions,
) -> Result<(QuantIndex, Vec<f64>)> {
    code.validate()?;
    let n = basis.dim();
    if code.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: code.n,
        });
    }
    f.validate_objective(n)?;
    let tau = code.tau;
    let tol_eff = opts.tol * tau;

    if code.entries.is_empty() {
        let k = QuantIndex::zeros(n);
        let recon = cell_center(&k, tau, basis)?;
        return Ok((k, recon));
    }

    let minimizer = minimize_with_fixed_coords(f, n, &code.entries, tau, opts)?;
    let grad = f.solver_objective_grad(&minimizer);

    let mut k = vec![0i64; n];
    let mut coded = vec![false; n];
    for &(j, v) in &code.entries {
        coded[j] = true;
        let g = grad[j];
        if g.abs() <= tol_eff {
            return Err(Error::AmbiguousFace {
                index: j,
                gradient: g,
            });
        }
        // positive gradient: descent is blocked from below, so the value is
        // the lower face of its cell; negative: the upper face
        let m = if g > 0.0 {
            v / tau + 0.5
        } else {
            v / tau - 0.5
        };
        k[j] = m.round() as i64;
    }
    for i in 0..n {
        if coded[i] {
            continue;
        }
        let t = minimizer[i] / tau + 0.5;
        let frac = t - t.floor();
        if frac.min(1.0 - frac) <= opts.eps_active_rel {
            return Err(Error::InconsistentCode { index: i });
        }
        k[i] = t.floor() as i64;
    }
    let k = QuantIndex(k);
    let recon = cell_center(&k, tau, basis)?;
    Ok((k, recon))
}

/// Per-sample approximation error `||u - tau sum k_i(u) psi_i||` in the given
/// norm, with `tau` taken from the code of `u`.
pub fn reconstruction_error(
    u: &[f64],
    code: &Code,
    norm: &NormModel,
    basis: &Basis,
) -> Result<f64> {
    code.validate()?;
    let x = basis.to_coords(u)?;
    let k = quantize_coords(&x, code.tau)?;
    let diff: Vec<f64> = x
        .iter()
        .zip(k.center_coords(code.tau))
        .map(|(xi, ci)| xi - ci)
        .collect();
    Ok(norm.eval(&diff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    fn sep_quad2() -> NormModel {
        NormModel::sep_quad(vec![1.0, 1.0])
    }

    #[test]
    fn encode_zero_cell_is_empty() {
        let b = Basis::identity(2).unwrap();
        let code = encode(&[0.05, -0.1], 0.25, &sep_quad2(), &b, &opts()).unwrap();
        assert!(code.entries.is_empty());
    }

    #[test]
    fn encode_spec_single_face() {
        let b = Basis::identity(2).unwrap();
        let code = encode(&[0.5, 0.1], 0.25, &sep_quad2(), &b, &opts()).unwrap();
        assert_eq!(code.entries, vec![(0, 0.375)]);
    }

    #[test]
    fn encode_spec_two_faces() {
        // cell (-2, 4) spans [-0.625,-0.375) x [0.875,1.125)
        let b = Basis::identity(2).unwrap();
        let code = encode(&[-0.5, 0.95], 0.25, &sep_quad2(), &b, &opts()).unwrap();
        assert_eq!(code.entries, vec![(0, -0.375), (1, 0.875)]);
    }

    #[test]
    fn decode_empty_code() {
        let b = Basis::identity(2).unwrap();
        let code = Code {
            tau: 0.25,
            n: 2,
            entries: vec![],
        };
        let (k, recon) = decode(&code, &sep_quad2(), &b, &opts()).unwrap();
        assert_eq!(k.as_slice(), &[0, 0]);
        assert_eq!(recon, vec![0.0, 0.0]);
    }

    #[test]
    fn decode_resolves_lower_face() {
        let b = Basis::identity(2).unwrap();
        let code = Code {
            tau: 0.25,
            n: 2,
            entries: vec![(0, 0.375)],
        };
        let (k, recon) = decode(&code, &sep_quad2(), &b, &opts()).unwrap();
        // gradient at (0.375, 0) is positive on coordinate 1 => lower face
        assert_eq!(k.as_slice(), &[2, 0]);
        assert_eq!(recon, vec![0.5, 0.0]);
    }

    #[test]
    fn decode_resolves_upper_face_by_symmetry() {
        let b = Basis::identity(2).unwrap();
        let code = Code {
            tau: 0.25,
            n: 2,
            entries: vec![(0, -0.375)],
        };
        let (k, recon) = decode(&code, &sep_quad2(), &b, &opts()).unwrap();
        assert_eq!(k.as_slice(), &[-2, 0]);
        assert_eq!(recon, vec![-0.5, 0.0]);
    }

    #[test]
    fn decode_rejects_off_grid_value() {
        let b = Basis::identity(2).unwrap();
        let code = Code {
            tau: 0.25,
            n: 2,
            entries: vec![(0, 0.3)],
        };
        match decode(&code, &sep_quad2(), &b, &opts()) {
            Err(Error::InvalidCode { .. }) => {}
            other => panic!("expected InvalidCode, got {other:?}"),
        }
    }

    #[test]
    fn decode_is_deterministic() {
        let b = Basis::identity(2).unwrap();
        let code = Code {
            tau: 0.25,
            n: 2,
            entries: vec![(0, 0.875), (1, -0.375)],
        };
        let first = decode(&code, &sep_quad2(), &b, &opts()).unwrap();
        for _ in 0..5 {
            let again = decode(&code, &sep_quad2(), &b, &opts()).unwrap();
            assert_eq!(again.0, first.0);
            assert_eq!(again.1, first.1);
        }
    }

    #[test]
    fn roundtrip_recovers_cell_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        // couplings chosen away from grid-aligned ratios: rational couplings
        // can make a face multiplier vanish exactly on some cells
        let models = [
            NormModel::sep_quad(vec![1.0, 1.0, 1.0]),
            NormModel::ellipsoidal(vec![
                2.31, 0.517, 0.113, 0.517, 1.709, 0.251, 0.113, 0.251, 2.917,
            ]),
        ];
        let identity = Basis::identity(3).unwrap();
        let random = Basis::random_well_conditioned(3, &mut rng).unwrap();
        let tau = 0.25;
        for basis in [&identity, &random] {
            for f in &models {
                for _ in 0..300 {
                    let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
                    let u = basis.from_coords(&x).unwrap();
                    let code = encode(&u, tau, f, basis, &opts()).unwrap();
                    let (k, recon) = decode(&code, f, basis, &opts()).unwrap();
                    let expected = quantize(&u, tau, basis).unwrap();
                    assert_eq!(k, expected, "roundtrip mismatch for {f:?}");
                    let center = cell_center(&expected, tau, basis).unwrap();
                    for i in 0..3 {
                        assert!((recon[i] - center[i]).abs() < 1e-12);
                    }
                    // code length equals the active count of the cell solve
                    assert_eq!(
                        code.len() == 0,
                        expected.as_slice().iter().all(|&ki| ki == 0)
                    );
                }
            }
        }
    }

    #[test]
    fn reconstruction_error_examples() {
        let b = Basis::identity(2).unwrap();
        let f = sep_quad2();
        let l1 = NormModel::coord_l1();
        // at a cell center the error is zero
        let u = [0.5, 0.0];
        let code = encode(&u, 0.25, &f, &b, &opts()).unwrap();
        assert_eq!(reconstruction_error(&u, &code, &l1, &b).unwrap(), 0.0);
        // spec arithmetic: |0.5-0.5| + |0.1-0| = 0.1
        let u = [0.5, 0.1];
        let code = encode(&u, 0.25, &f, &b, &opts()).unwrap();
        let e = reconstruction_error(&u, &code, &l1, &b).unwrap();
        assert!((e - 0.1).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_error_matches_independent_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let b = Basis::identity(2).unwrap();
        let f = sep_quad2();
        let l1 = NormModel::coord_l1();
        let tau = 0.25;
        for _ in 0..200 {
            let u: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let code = encode(&u, tau, &f, &b, &opts()).unwrap();
            let e = reconstruction_error(&u, &code, &l1, &b).unwrap();
            // independent recomputation through the decoder's cell
            let (k, _) = decode(&code, &f, &b, &opts()).unwrap();
            let brute: f64 = u
                .iter()
                .zip(k.center_coords(tau))
                .map(|(ui, ci)| (ui - ci).abs())
                .sum();
            assert!((e - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn decode_flags_ambiguous_face() {
        // Q row (2, 0.5, 0.1) dotted with (-0.125, 0.625, -0.625) vanishes
        // exactly, so the face side of coordinate 1 cannot be recovered.
        let b = Basis::identity(3).unwrap();
        let f = NormModel::ellipsoidal(vec![2.0, 0.5, 0.1, 0.5, 1.5, 0.25, 0.1, 0.25, 3.0]);
        let code = Code {
            tau: 0.25,
            n: 3,
            entries: vec![(0, -0.125), (1, 0.625), (2, -0.625)],
        };
        match decode(&code, &f, &b, &opts()) {
            Err(Error::AmbiguousFace { index: 0, .. }) => {}
            other => panic!("expected AmbiguousFace, got {other:?}"),
        }
        // the encoder refuses the same cell up front
        match encode_cell(&QuantIndex(vec![-1, 3, -3]), 0.25, &f, &b, &opts()) {
            Err(Error::DegenerateSolve { index: 0 }) => {}
            other => panic!("expected DegenerateSolve, got {other:?}"),
        }
    }

    #[test]
    fn decode_flags_free_coordinate_on_cell_edge() {
        // minimizing x'Qx with x1 fixed at 0.125 puts the free coordinate at
        // -3 * 0.125 = -0.375 = tau * (-1 - 1/2), exactly a cell edge
        let b = Basis::identity(2).unwrap();
        let f = NormModel::ellipsoidal(vec![10.0, 3.0, 3.0, 1.0]);
        let code = Code {
            tau: 0.25,
            n: 2,
            entries: vec![(0, 0.125)],
        };
        match decode(&code, &f, &b, &opts()) {
            Err(Error::InconsistentCode { index: 1 }) => {}
            other => panic!("expected InconsistentCode, got {other:?}"),
        }
    }

    #[test]
    fn code_json_uses_one_based_indices() {
        let code = Code {
            tau: 0.25,
            n: 2,
            entries: vec![(0, 0.375)],
        };
        let s = serde_json::to_string(&code).unwrap();
        assert_eq!(s, r#"{"tau":0.25,"n":2,"entries":[[1,0.375]]}"#);
        let back: Code = serde_json::from_str(&s).unwrap();
        assert_eq!(back, code);
    }

    #[test]
    fn code_json_roundtrip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let b = Basis::identity(4).unwrap();
        let f = NormModel::sep_quad(vec![1.0, 1.0, 1.0, 1.0]);
        for _ in 0..100 {
            let u: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let code = encode(&u, 0.125, &f, &b, &opts()).unwrap();
            let s = serde_json::to_string(&code).unwrap();
            let back: Code = serde_json::from_str(&s).unwrap();
            for (a, b) in code.entries.iter().zip(&back.entries) {
                assert_eq!(a.0, b.0);
                assert_eq!(a.1.to_bits(), b.1.to_bits());
            }
        }
    }
}
