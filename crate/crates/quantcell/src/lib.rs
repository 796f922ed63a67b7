//! Compression by norm-minimizing projection onto quantization cells.
//!
//! A datum `u` in R^N is quantized onto a grid of step `tau` in the
//! coordinates of a basis; the projection of the resulting cell under a
//! curved norm `f` has a set of active cell faces, and the pair
//! (active indices, face values) is a self-delimiting code for the cell.
//! This crate provides:
//!
//! - [`basis`]: bases, the quantization grid and its cells;
//! - [`norms`]: a catalog of objective and data norms with sampled
//!   hypothesis diagnostics;
//! - [`solver`]: the box-constrained projection solver and its face
//!   patterns;
//! - [`codec`]: encoding a vector as (active set, boundary values) and
//!   decoding back to the cell index;
//! - [`geometry`]: equivalence classes of boundary points, grid counting
//!   and slice-uniqueness checks;
//! - [`scaling`]: Monte Carlo estimation of the code-length law, its
//!   constants and exponent fits;
//! - [`report`]: run manifests, JSON and CSV emission;
//! - [`cli`]: the `quantcell` command-line front end.
//!
//! Norm models evaluate coordinate vectors; operations that accept ambient
//! vectors convert through the [`Basis`] first.
//!
//! ```
//! use quantcell::*;
//!
//! let basis = Basis::identity(2)?;
//! let f = NormModel::sep_quad(vec![1.0, 1.0]);
//! let opts = SolverOptions::default();
//!
//! // encode a datum: quantize, project its cell, keep the active faces
//! let code = encode(&[0.5, 0.1], 0.25, &f, &basis, &opts)?;
//! assert_eq!(code.entries, vec![(0, 0.375)]);
//!
//! // the code alone recovers the cell and the center reconstruction
//! let (cell, reconstruction) = decode(&code, &f, &basis, &opts)?;
//! assert_eq!(cell.as_slice(), &[2, 0]);
//! assert_eq!(reconstruction, vec![0.5, 0.0]);
//! # Ok::<(), quantcell::Error>(())
//! ```
//!
//! Each major capability has a runnable example under `examples/`:
//! `box_projection`, `check_norm`, `encode_decode`, `grid_counts`,
//! `slice_uniqueness`, `scaling_experiment`, `constants`.

pub mod basis;
pub mod cli;
pub mod codec;
pub mod error;
pub mod geometry;
pub(crate) mod linalg;
pub mod norms;
pub mod report;
pub mod scaling;
pub mod solver;

pub use basis::{cell_center, quantize, quantize_coords, Basis, Cell, QuantIndex};
pub use codec::{decode, encode, reconstruction_error, Code};
pub use error::{Error, Result};
pub use geometry::{
    classify, constant_m, count_grid, estimate_a_k, slice_uniqueness_check, ClassId, GridCount,
};
pub use norms::{CurvatureDiagnostic, NormKind, NormModel};
pub use report::RunManifest;
pub use scaling::{
    compute_b, compute_c_monte_carlo, compute_c_quadrature, compute_d_k, fit_exponents,
    run_scaling, sample_uniform_ball, ExperimentConfig, RunOptions, ScalingReport,
};
pub use solver::{clamp_fast_path, solve_p, solve_ptilde, FacePattern, SolveResult, SolverOptions};
