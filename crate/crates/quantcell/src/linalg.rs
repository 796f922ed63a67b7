//! Minimal dense linear algebra: LU with partial pivoting, solves, inverse,
//! determinant. Everything here is sized for the small dimensions this crate
//! works at (N <= 20), so plain row-major `Vec<f64>` storage is fine.

/// LU factorization with partial pivoting of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    det_sign: f64,
}

impl Lu {
    /// Factor a row-major `n x n` matrix. Returns `None` on a zero pivot.
    pub fn factor(a: &[f64], n: usize) -> Option<Lu> {
        assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut det_sign = 1.0;
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_val = lu[col * n + col].abs();
            for row in col + 1..n {
                let v = lu[row * n + col].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = row;
                }
            }
            if pivot_val == 0.0 || !pivot_val.is_finite() {
                return None;
            }
            if pivot_row != col {
                for j in 0..n {
                    lu.swap(col * n + j, pivot_row * n + j);
                }
                perm.swap(col, pivot_row);
                det_sign = -det_sign;
            }
            let pivot = lu[col * n + col];
            for row in col + 1..n {
                let factor = lu[row * n + col] / pivot;
                lu[row * n + col] = factor;
                for j in col + 1..n {
                    lu[row * n + j] -= factor * lu[col * n + j];
                }
            }
        }
        Some(Lu {
            n,
            lu,
            perm,
            det_sign,
        })
    }

    pub fn det(&self) -> f64 {
        let mut d = self.det_sign;
        for i in 0..self.n {
            d *= self.lu[i * self.n + i];
        }
        d
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solve with one step of iterative refinement against the original matrix.
    pub fn solve_refined(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut x = self.solve(b);
        let n = self.n;
        let mut residual = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for j in 0..n {
                s -= a[i * n + j] * x[j];
            }
            residual[i] = s;
        }
        let correction = self.solve(&residual);
        for i in 0..n {
            x[i] += correction[i];
        }
        x
    }

    /// Explicit inverse, column by column.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for col in 0..n {
            e[col] = 1.0;
            let x = self.solve(&e);
            for row in 0..n {
                inv[row * n + col] = x[row];
            }
            e[col] = 0.0;
        }
        inv
    }
}

/// `y = A x` for a row-major `n x n` matrix.
pub fn mat_vec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    assert_eq!(x.len(), n);
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += a[i * n + j] * x[j];
        }
        y[i] = s;
    }
    y
}

/// Matrix 1-norm (max column sum).
pub fn one_norm(a: &[f64], n: usize) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..n {
            s += a[i * n + j].abs();
        }
        best = best.max(s);
    }
    best
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solve_roundtrip() {
        let a = [4.0, 1.0, 2.0, 1.0, 3.0, 0.5, 2.0, 0.5, 5.0];
        let lu = Lu::factor(&a, 3).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = lu.solve_refined(&a, &b);
        let back = mat_vec(&a, 3, &x);
        for i in 0..3 {
            assert!((back[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn determinant_and_inverse() {
        let a = [2.0, 0.0, 0.0, 3.0];
        let lu = Lu::factor(&a, 2).unwrap();
        assert!((lu.det() - 6.0).abs() < 1e-14);
        let inv = lu.inverse();
        assert!((inv[0] - 0.5).abs() < 1e-14);
        assert!((inv[3] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(Lu::factor(&a, 2).is_none());
    }
}
