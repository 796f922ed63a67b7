//! Change of coordinates, the quantization grid and its cells.
//!
//! A [`Basis`] holds an invertible N x N matrix whose columns are the basis
//! vectors. The quantization grid with step `tau` has edges at
//! `tau * (k - 1/2)` in each coordinate, so the cell indexed by the integer
//! vector `k` spans `[tau*(k_i - 1/2), tau*(k_i + 1/2))` per coordinate,
//! half-open at the upper edge.

use crate::error::{Error, Result};
use crate::linalg::{mat_vec, one_norm, Lu};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Condition-number gate applied at construction.
pub const CONDITION_LIMIT: f64 = 1e8;
/// Per-entry tolerance on `matrix * inverse = identity`.
pub const INVERSE_RESIDUAL_TOL: f64 = 1e-10;

/// An invertible change of coordinates for R^N.
#[derive(Debug, Clone, Serialize)]
#[serde(into = "BasisSpec")]
pub struct Basis {
    dim: usize,
    matrix: Vec<f64>,
    inverse: Vec<f64>,
    lu: Lu,
    cell_volume: f64,
    condition: f64,
}

/// Wire form of a basis: `{"dim": N}` is the identity, otherwise a row-major
/// matrix of length N*N.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisSpec {
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<f64>>,
}

impl From<Basis> for BasisSpec {
    fn from(b: Basis) -> BasisSpec {
        let identity = b.matrix == identity_matrix(b.dim);
        BasisSpec {
            dim: b.dim,
            matrix: if identity { None } else { Some(b.matrix) },
        }
    }
}

impl TryFrom<BasisSpec> for Basis {
    type Error = Error;
    fn try_from(spec: BasisSpec) -> Result<Basis> {
        match spec.matrix {
            None => Basis::identity(spec.dim),
            Some(m) => Basis::from_matrix(spec.dim, m),
        }
    }
}

impl<'de> Deserialize<'de> for Basis {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Basis, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let spec = BasisSpec::deserialize(deserializer)?;
        Basis::try_from(spec).map_err(serde::de::Error::custom)
    }
}

fn identity_matrix(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

impl Basis {
    /// The identity basis of dimension `n`.
    pub fn identity(n: usize) -> Result<Basis> {
        Basis::from_matrix(n, identity_matrix(n))
    }

    /// Build a basis from a row-major matrix whose columns are the basis
    /// vectors. Rejects singular and ill-conditioned matrices.
    pub fn from_matrix(n: usize, matrix: Vec<f64>) -> Result<Basis> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                message: "dimension must be positive".into(),
            });
        }
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: matrix.len(),
            });
        }
        if let Some(index) = matrix.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        let lu = Lu::factor(&matrix, n).ok_or(Error::SingularBasis)?;
        let inverse = lu.inverse();
        let condition = one_norm(&matrix, n) * one_norm(&inverse, n);
        if !condition.is_finite() || condition > CONDITION_LIMIT {
            return Err(Error::IllConditionedBasis {
                cond: condition,
                limit: CONDITION_LIMIT,
            });
        }
        // matrix * inverse must reproduce the identity entrywise.
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += matrix[i * n + l] * inverse[l * n + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                if (s - target).abs() > INVERSE_RESIDUAL_TOL {
                    return Err(Error::IllConditionedBasis {
                        cond: condition,
                        limit: CONDITION_LIMIT,
                    });
                }
            }
        }
        let cell_volume = lu.det().abs();
        Ok(Basis {
            dim: n,
            matrix,
            inverse,
            lu,
            cell_volume,
            condition,
        })
    }

    /// A random well-conditioned basis: a random rotation with mild
    /// per-column scaling. Useful for experiments and tests.
    pub fn random_well_conditioned<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Basis> {
        loop {
            // Gram-Schmidt on a random Gaussian-ish matrix.
            let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
            for _ in 0..n {
                let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                for c in &cols {
                    let proj = crate::linalg::dot(&v, c);
                    for i in 0..n {
                        v[i] -= proj * c[i];
                    }
                }
                let norm = crate::linalg::norm2(&v);
                if norm < 1e-6 {
                    cols.clear();
                    break;
                }
                cols.push(v.iter().map(|x| x / norm).collect());
            }
            if cols.len() < n {
                continue;
            }
            let mut matrix = vec![0.0; n * n];
            for (j, c) in cols.iter().enumerate() {
                let scale = rng.random_range(0.5..2.0);
                for i in 0..n {
                    matrix[i * n + j] = c[i] * scale;
                }
            }
            if let Ok(b) = Basis::from_matrix(n, matrix) {
                return Ok(b);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn inverse(&self) -> &[f64] {
        &self.inverse
    }

    /// Volume of the unit coordinate cell, `|det|` of the matrix.
    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// True when the columns are pairwise orthogonal.
    pub fn has_orthogonal_columns(&self, tol: f64) -> bool {
        let n = self.dim;
        for a in 0..n {
            for b in a + 1..n {
                let mut s = 0.0;
                let mut na = 0.0;
                let mut nb = 0.0;
                for i in 0..n {
                    s += self.matrix[i * n + a] * self.matrix[i * n + b];
                    na += self.matrix[i * n + a] * self.matrix[i * n + a];
                    nb += self.matrix[i * n + b] * self.matrix[i * n + b];
                }
                if s.abs() > tol * (na * nb).sqrt() {
                    return false;
                }
            }
        }
        true
    }

    /// Coordinates of an ambient vector in this basis (LU solve with one
    /// refinement step).
    pub fn to_coords(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        Ok(self.lu.solve_refined(&self.matrix, u))
    }

    /// Ambient vector with the given coordinates.
    pub fn from_coords(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(mat_vec(&self.matrix, self.dim, x))
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }
}

/// Integer cell index vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuantIndex(pub Vec<i64>);

impl QuantIndex {
    pub fn zeros(n: usize) -> QuantIndex {
        QuantIndex(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    /// Coordinates of the cell center, `tau * k`.
    pub fn center_coords(&self, tau: f64) -> Vec<f64> {
        self.0.iter().map(|&k| tau * k as f64).collect()
    }
}

impl std::fmt::Display for QuantIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// One quantization cell: index plus step.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub k: QuantIndex,
    pub tau: f64,
}

impl Cell {
    pub fn new(k: QuantIndex, tau: f64) -> Result<Cell> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter {
                name: "tau",
                message: format!("step must be a positive finite real, got {tau}"),
            });
        }
        Ok(Cell { k, tau })
    }

    /// Lower edge of coordinate `i`: `tau * (k_i - 1/2)`.
    pub fn lower(&self, i: usize) -> f64 {
        self.tau * (self.k.0[i] as f64 - 0.5)
    }

    /// Upper edge of coordinate `i`: `tau * (k_i + 1/2)`.
    pub fn upper(&self, i: usize) -> f64 {
        self.tau * (self.k.0[i] as f64 + 0.5)
    }

    /// Half-open membership test on a coordinate vector.
    pub fn contains_coords(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lower(i) && v < self.upper(i))
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter {
            name: "tau",
            message: format!("step must be a positive finite real, got {tau}"),
        });
    }
    Ok(())
}

/// Quantize a coordinate vector: `k_i = floor(x_i / tau + 1/2)`, so each
/// coordinate lands in the half-open cell `[tau*(k-1/2), tau*(k+1/2))`.
pub fn quantize_coords(x: &[f64], tau: f64) -> Result<QuantIndex> {
    check_tau(tau)?;
    let mut k = Vec::with_capacity(x.len());
    for (index, &v) in x.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput { index });
        }
        k.push((v / tau + 0.5).floor() as i64);
    }
    Ok(QuantIndex(k))
}

/// Quantize an ambient vector with respect to a basis.
pub fn quantize(u: &[f64], tau: f64, basis: &Basis) -> Result<QuantIndex> {
    let x = basis.to_coords(u)?;
    quantize_coords(&x, tau)
}

/// Ambient center of the cell indexed by `k`: `tau * sum_i k_i psi_i`.
pub fn cell_center(k: &QuantIndex, tau: f64, basis: &Basis) -> Result<Vec<f64>> {
    check_tau(tau)?;
    if k.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: k.len(),
        });
    }
    basis.from_coords(&k.center_coords(tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_coords_roundtrip() {
        let b = Basis::identity(2).unwrap();
        let u = [0.3, -0.7];
        let x = b.to_coords(&u).unwrap();
        assert_eq!(x, vec![0.3, -0.7]);
        assert_eq!(b.from_coords(&x).unwrap(), vec![0.3, -0.7]);
    }

    #[test]
    fn shear_basis_coords() {
        // columns (1,0) and (1,1); u = (2,1) has coordinates (1,1)
        let b = Basis::from_matrix(2, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        let x = b.to_coords(&[2.0, 1.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_basis_roundtrip_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let b = Basis::random_well_conditioned(4, &mut rng).unwrap();
            let u: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let x = b.to_coords(&u).unwrap();
            let back = b.from_coords(&x).unwrap();
            for i in 0..4 {
                assert!(
                    (back[i] - u[i]).abs() <= 1e-10,
                    "roundtrip residual too large: {}",
                    (back[i] - u[i]).abs()
                );
            }
        }
    }

    #[test]
    fn ill_conditioned_rejected() {
        let m = vec![1.0, 0.0, 0.0, 1e-12];
        match Basis::from_matrix(2, m) {
            Err(Error::IllConditionedBasis { .. }) => {}
            other => panic!("expected IllConditionedBasis, got {other:?}"),
        }
    }

    #[test]
    fn quantize_spec_values() {
        let tau = 0.25;
        // u = (0.6 tau, -0.2 tau) -> (1, 0)
        let k = quantize_coords(&[0.6 * tau, -0.2 * tau], tau).unwrap();
        assert_eq!(k.as_slice(), &[1, 0]);
        // half-open edge convention: lower edge included
        let k = quantize_coords(&[tau / 2.0, -tau / 2.0], tau).unwrap();
        assert_eq!(k.as_slice(), &[1, 0]);
        // u = (0.5, 0.1) at tau = 0.25 -> (2, 0); cell 2 spans [0.375, 0.625)
        let k = quantize_coords(&[0.5, 0.1], tau).unwrap();
        assert_eq!(k.as_slice(), &[2, 0]);
    }

    #[test]
    fn quantize_rejects_non_finite() {
        match quantize_coords(&[f64::NAN, 0.0], 0.5) {
            Err(Error::NonFiniteInput { index: 0 }) => {}
            other => panic!("expected NonFiniteInput, got {other:?}"),
        }
    }

    #[test]
    fn cell_center_values() {
        let b = Basis::identity(2).unwrap();
        let k = QuantIndex(vec![0, 0]);
        assert_eq!(cell_center(&k, 0.25, &b).unwrap(), vec![0.0, 0.0]);
        let k = QuantIndex(vec![2, 0]);
        assert_eq!(cell_center(&k, 0.25, &b).unwrap(), vec![0.5, 0.0]);
    }

    #[test]
    fn center_requantizes_to_same_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let b = Basis::random_well_conditioned(3, &mut rng).unwrap();
            let k = QuantIndex((0..3).map(|_| rng.random_range(-9..9)).collect());
            let tau = 0.125;
            let center = cell_center(&k, tau, &b).unwrap();
            assert_eq!(quantize(&center, tau, &b).unwrap(), k);
        }
    }

    #[test]
    fn cell_edges_and_midpoint() {
        let cell = Cell::new(QuantIndex(vec![2]), 0.25).unwrap();
        assert_eq!(cell.lower(0), 0.375);
        assert_eq!(cell.upper(0), 0.625);
        // center coordinate is exactly the midpoint of the edges
        let mid = (cell.lower(0) + cell.upper(0)) / 2.0;
        assert_eq!(mid, cell.k.center_coords(0.25)[0]);
    }

    #[test]
    fn basis_json_shape() {
        let b = Basis::identity(2).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"dim":2}"#);
        let b2: Basis = serde_json::from_str(&s).unwrap();
        assert_eq!(b2.dim(), 2);
        let shear: Basis =
            serde_json::from_str(r#"{"dim":2,"matrix":[1.0,1.0,0.0,1.0]}"#).unwrap();
        assert_eq!(shear.matrix(), &[1.0, 1.0, 0.0, 1.0]);
    }
}
