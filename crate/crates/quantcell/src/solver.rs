//! Box-constrained projection solver.
//!
//! `solve_p` solves `(P)(u)`: minimize `f(v - u)` over the centered cell
//! `C(0)` (the box `[-tau/2, tau/2]^N` in basis coordinates). `solve_ptilde`
//! minimizes `f(v)` over an arbitrary cell `C(k)` directly. Both return the
//! minimizer, its face pattern (which cell faces are active and on which
//! side) and KKT data.
//!
//! The method is a projected active-set scheme: the working set is read off
//! from position and gradient signs, a reduced Newton step is taken on the
//! free coordinates (exact for quadratic objectives), and progress is
//! safeguarded by a projected Armijo line search with a plain projected
//! gradient fallback. Convergence is declared at a KKT residual of
//! `tol * tau`.

use crate::basis::{Basis, QuantIndex};
use crate::error::{Error, Result};
use crate::linalg::{norm_inf, Lu};
use crate::norms::NormModel;
use serde::{Deserialize, Serialize};

/// Signed active-set pattern: `-1` active at the lower face, `+1` at the
/// upper face, `0` free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FacePattern(pub Vec<i8>);

impl FacePattern {
    pub fn all_free(n: usize) -> FacePattern {
        FacePattern(vec![0; n])
    }

    pub fn from_sides(s: Vec<i8>) -> Result<FacePattern> {
        if s.iter().any(|&v| !(-1..=1).contains(&v)) {
            return Err(Error::InvalidParameter {
                name: "pattern",
                message: "face sides must be -1, 0 or +1".into(),
            });
        }
        Ok(FacePattern(s))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of active coordinates (the code length `K`).
    pub fn active_count(&self) -> usize {
        self.0.iter().filter(|&&s| s != 0).count()
    }

    /// Indices of active coordinates, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != 0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn side(&self, i: usize) -> i8 {
        self.0[i]
    }

    /// Pattern with every face side flipped.
    pub fn mirrored(&self) -> FacePattern {
        FacePattern(self.0.iter().map(|&s| -s).collect())
    }
}

impl std::fmt::Display for FacePattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            match s {
                -1 => write!(f, "-1")?,
                1 => write!(f, "+1")?,
                _ => write!(f, "0")?,
            }
        }
        write!(f, ")")
    }
}

/// Output of a cell projection.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// The minimizer as an ambient vector.
    pub minimizer: Vec<f64>,
    /// The minimizer in basis coordinates.
    pub coords: Vec<f64>,
    /// Active faces of the minimizer.
    pub pattern: FacePattern,
    /// Coordinate gradient of the solver objective at the minimizer.
    pub grad_at_min: Vec<f64>,
    /// Max-norm KKT residual after the final snap.
    pub kkt_residual: f64,
    pub iterations: usize,
    /// True when some active coordinate has a vanishing objective gradient,
    /// making its face side ambiguous for coding.
    pub degenerate: bool,
    pub degenerate_coords: Vec<usize>,
}

/// Solver configuration.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// KKT tolerance, applied as `tol * tau`.
    pub tol: f64,
    /// Active-face detection tolerance relative to the cell width.
    pub eps_active_rel: f64,
    pub max_iterations: usize,
    /// Optional start point in basis coordinates (clamped into the box).
    pub start: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            eps_active_rel: 1e-9,
            max_iterations: 200,
            start: None,
        }
    }
}

impl SolverOptions {
    pub fn with_start(&self, start: Vec<f64>) -> SolverOptions {
        let mut o = self.clone();
        o.start = Some(start);
        o
    }
}

/// Smooth objective seen by the box solver.
pub(crate) trait Objective {
    fn value(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;
    fn hess(&self, x: &[f64]) -> Option<Vec<f64>>;
}

/// `g(x - shift)` for a norm-model surrogate.
pub(crate) struct ShiftedSurrogate<'a> {
    pub model: &'a NormModel,
    pub shift: Option<&'a [f64]>,
}

impl ShiftedSurrogate<'_> {
    fn arg(&self, x: &[f64]) -> Vec<f64> {
        match self.shift {
            Some(s) => x.iter().zip(s).map(|(a, b)| a - b).collect(),
            None => x.to_vec(),
        }
    }
}

impl Objective for ShiftedSurrogate<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.model.solver_objective_value(&self.arg(x))
    }
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.model.solver_objective_grad(&self.arg(x))
    }
    fn hess(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.model.solver_objective_hessian(&self.arg(x))
    }
}

pub(crate) struct BoxOut {
    pub x: Vec<f64>,
    pub iterations: usize,
}

fn kkt_residual(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64], eps: &[f64]) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..x.len() {
        let at_lo = x[i] <= lo[i] + eps[i];
        let at_hi = x[i] >= hi[i] - eps[i];
        let satisfied = (at_lo && g[i] >= 0.0) || (at_hi && g[i] <= 0.0);
        let ri = if satisfied { 0.0 } else { g[i].abs() };
        r = r.max(ri);
    }
    r
}

fn finite_difference_hessian(obj: &dyn Objective, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut h = vec![0.0; n * n];
    let mut xp = x.to_vec();
    for j in 0..n {
        let step = 1e-5 * x[j].abs().max(1.0);
        let orig = xp[j];
        xp[j] = orig + step;
        let gp = obj.grad(&xp);
        xp[j] = orig - step;
        let gm = obj.grad(&xp);
        xp[j] = orig;
        for i in 0..n {
            h[i * n + j] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    // symmetrize
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (h[i * n + j] + h[j * n + i]);
            h[i * n + j] = avg;
            h[j * n + i] = avg;
        }
    }
    h
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        if x[i] < lo[i] {
            x[i] = lo[i];
        } else if x[i] > hi[i] {
            x[i] = hi[i];
        }
    }
}

/// Snap coordinates within `eps` of a bound exactly onto it.
fn snap_bounds(x: &mut [f64], lo: &[f64], hi: &[f64], eps: &[f64]) {
    for i in 0..x.len() {
        if lo[i].is_finite() && x[i] <= lo[i] + eps[i] {
            x[i] = lo[i];
        } else if hi[i].is_finite() && x[i] >= hi[i] - eps[i] {
            x[i] = hi[i];
        }
    }
}

/// Projected active-set Newton loop; bounds may be infinite, which makes it
/// an unconstrained Newton solver.
pub(crate) fn solve_box(
    obj: &dyn Objective,
    lo: &[f64],
    hi: &[f64],
    tol_eff: f64,
    eps: &[f64],
    max_iterations: usize,
    start: Vec<f64>,
) -> Result<BoxOut> {
    let n = lo.len();
    let mut x = start;
    clamp_into(&mut x, lo, hi);
    snap_bounds(&mut x, lo, hi, eps);

    for iter in 0..max_iterations {
        let g = obj.grad(&x);
        let residual = kkt_residual(&x, &g, lo, hi, eps);
        if residual <= tol_eff {
            return Ok(BoxOut { x, iterations: iter });
        }

        // Working set from position and multiplier sign.
        let pinned: Vec<bool> = (0..n)
            .map(|i| {
                (x[i] <= lo[i] + eps[i] && g[i] >= 0.0) || (x[i] >= hi[i] - eps[i] && g[i] <= 0.0)
            })
            .collect();
        let free: Vec<usize> = (0..n).filter(|&i| !pinned[i]).collect();

        let mut direction = vec![0.0; n];
        let mut have_newton = false;
        if !free.is_empty() {
            let hess = obj
                .hess(&x)
                .unwrap_or_else(|| finite_difference_hessian(obj, &x));
            if hess.iter().all(|v| v.is_finite()) {
                let m = free.len();
                let mut hf = vec![0.0; m * m];
                let mut gf = vec![0.0; m];
                for (a, &i) in free.iter().enumerate() {
                    gf[a] = -g[i];
                    for (b, &j) in free.iter().enumerate() {
                        hf[a * m + b] = hess[i * n + j];
                    }
                }
                if let Some(lu) = Lu::factor(&hf, m) {
                    let df = lu.solve_refined(&hf, &gf);
                    let slope: f64 = free.iter().enumerate().map(|(a, &i)| df[a] * g[i]).sum();
                    if slope < 0.0 && df.iter().all(|v| v.is_finite()) {
                        for (a, &i) in free.iter().enumerate() {
                            direction[i] = df[a];
                        }
                        have_newton = true;
                    }
                }
            }
        }
        if !have_newton {
            for i in 0..n {
                if !pinned[i] {
                    direction[i] = -g[i];
                }
            }
        }

        if !projected_line_search(obj, &mut x, &g, &direction, lo, hi) {
            // Newton direction stalled; retry once with plain gradient.
            let mut grad_dir = vec![0.0; n];
            for i in 0..n {
                if !pinned[i] {
                    grad_dir[i] = -g[i];
                }
            }
            if !projected_line_search(obj, &mut x, &g, &grad_dir, lo, hi) {
                return Err(Error::MaxIterations {
                    max_iterations: iter,
                    residual,
                });
            }
        }
        snap_bounds(&mut x, lo, hi, eps);
    }

    let g = obj.grad(&x);
    let residual = kkt_residual(&x, &g, lo, hi, eps);
    if residual <= tol_eff {
        return Ok(BoxOut {
            x,
            iterations: max_iterations,
        });
    }
    Err(Error::MaxIterations {
        max_iterations,
        residual,
    })
}

/// Armijo search along the projected path `x(a) = clip(x + a d)`.
/// Returns false when no acceptable step was found.
fn projected_line_search(
    obj: &dyn Objective,
    x: &mut Vec<f64>,
    g: &[f64],
    d: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> bool {
    const SIGMA: f64 = 1e-4;
    let f0 = obj.value(x);
    let mut alpha = 1.0;
    for _ in 0..60 {
        let mut trial: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        clamp_into(&mut trial, lo, hi);
        let moved: f64 = trial
            .iter()
            .zip(x.iter())
            .zip(g)
            .map(|((t, xi), gi)| gi * (t - xi))
            .sum();
        if moved < 0.0 {
            let ft = obj.value(&trial);
            if ft <= f0 + SIGMA * moved {
                *x = trial;
                return true;
            }
        }
        alpha *= 0.5;
    }
    false
}

struct Finalized {
    pattern: FacePattern,
    grad: Vec<f64>,
    residual: f64,
    degenerate: bool,
    degenerate_coords: Vec<usize>,
}

/// Classify active faces, snap them exactly onto the bounds, and detect
/// degeneracy (an active face with a vanishing gradient component while the
/// overall gradient is not zero).
fn finalize(
    obj: &dyn Objective,
    x: &mut [f64],
    lo: &[f64],
    hi: &[f64],
    eps: &[f64],
    tol_eff: f64,
) -> Finalized {
    let n = x.len();
    let mut sides = vec![0i8; n];
    for i in 0..n {
        if x[i] <= lo[i] + eps[i] {
            sides[i] = -1;
            x[i] = lo[i];
        } else if x[i] >= hi[i] - eps[i] {
            sides[i] = 1;
            x[i] = hi[i];
        }
    }
    let grad = obj.grad(x);
    let residual = kkt_residual(x, &grad, lo, hi, eps);
    let overall = norm_inf(&grad);
    let mut degenerate_coords = Vec::new();
    if overall > tol_eff {
        for i in 0..n {
            if sides[i] != 0 && grad[i].abs() <= tol_eff {
                degenerate_coords.push(i);
            }
        }
    }
    Finalized {
        pattern: FacePattern(sides),
        grad,
        residual,
        degenerate: !degenerate_coords.is_empty(),
        degenerate_coords,
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

fn check_finite(u: &[f64]) -> Result<()> {
    if let Some(index) = u.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput { index });
    }
    Ok(())
}

/// Solve `(P)(u)`: minimize `f(v - u)` over the box `[-tau/2, tau/2]^N` in
/// basis coordinates.
pub fn solve_p(
    u: &[f64],
    tau: f64,
    f: &NormModel,
    basis: &Basis,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_tau(tau)?;
    check_finite(u)?;
    let n = basis.dim();
    f.validate_objective(n)?;
    let xu = basis.to_coords(u)?;
    let lo = vec![-tau / 2.0; n];
    let hi = vec![tau / 2.0; n];
    let obj = ShiftedSurrogate {
        model: f,
        shift: Some(&xu),
    };
    let start = opts.start.clone().unwrap_or_else(|| xu.clone());
    solve_cell(&obj, &lo, &hi, tau, basis, opts, start)
}

/// Solve `(P~)(k)`: minimize `f(v)` over the cell `C(k)` directly.
pub fn solve_ptilde(
    k: &QuantIndex,
    tau: f64,
    f: &NormModel,
    basis: &Basis,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_tau(tau)?;
    let n = basis.dim();
    if k.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: k.len(),
        });
    }
    f.validate_objective(n)?;
    let lo: Vec<f64> = (0..n).map(|i| tau * (k.0[i] as f64 - 0.5)).collect();
    let hi: Vec<f64> = (0..n).map(|i| tau * (k.0[i] as f64 + 0.5)).collect();
    let obj = ShiftedSurrogate {
        model: f,
        shift: None,
    };
    let start = opts.start.clone().unwrap_or_else(|| vec![0.0; n]);
    solve_cell(&obj, &lo, &hi, tau, basis, opts, start)
}

fn solve_cell(
    obj: &dyn Objective,
    lo: &[f64],
    hi: &[f64],
    tau: f64,
    basis: &Basis,
    opts: &SolverOptions,
    start: Vec<f64>,
) -> Result<SolveResult> {
    let tol_eff = opts.tol * tau;
    let eps: Vec<f64> = lo
        .iter()
        .zip(hi)
        .map(|(l, h)| opts.eps_active_rel * (h - l))
        .collect();
    let mut out = solve_box(obj, lo, hi, tol_eff, &eps, opts.max_iterations, start)?;
    let fin = finalize(obj, &mut out.x, lo, hi, &eps, tol_eff);
    Ok(SolveResult {
        minimizer: basis.from_coords(&out.x)?,
        coords: out.x,
        pattern: fin.pattern,
        grad_at_min: fin.grad,
        kkt_residual: fin.residual,
        iterations: out.iterations,
        degenerate: fin.degenerate,
        degenerate_coords: fin.degenerate_coords,
    })
}

/// Coordinatewise clamp, valid for a separable-quadratic objective on a basis
/// with orthogonal columns. Output matches `solve_p` to machine precision.
pub fn clamp_fast_path(
    u: &[f64],
    tau: f64,
    f: &NormModel,
    basis: &Basis,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_tau(tau)?;
    check_finite(u)?;
    if !matches!(f.kind, crate::norms::NormKind::SepQuad { .. }) {
        return Err(Error::FastPathUnavailable {
            reason: "objective is not separable-quadratic".into(),
        });
    }
    if !basis.has_orthogonal_columns(1e-10) {
        return Err(Error::FastPathUnavailable {
            reason: "basis columns are not orthogonal".into(),
        });
    }
    let n = basis.dim();
    f.validate_objective(n)?;
    let xu = basis.to_coords(u)?;
    let half = tau / 2.0;
    let tol_eff = opts.tol * tau;
    let mut coords = vec![0.0; n];
    let mut sides = vec![0i8; n];
    for i in 0..n {
        if xu[i] <= -half {
            coords[i] = -half;
            sides[i] = -1;
        } else if xu[i] >= half {
            coords[i] = half;
            sides[i] = 1;
        } else {
            coords[i] = xu[i];
        }
    }
    let diff: Vec<f64> = coords.iter().zip(&xu).map(|(a, b)| a - b).collect();
    let grad = f.solver_objective_grad(&diff);
    let overall = norm_inf(&grad);
    let mut degenerate_coords = Vec::new();
    if overall > tol_eff {
        for i in 0..n {
            if sides[i] != 0 && grad[i].abs() <= tol_eff {
                degenerate_coords.push(i);
            }
        }
    }
    let lo = vec![-half; n];
    let hi = vec![half; n];
    let eps: Vec<f64> = vec![opts.eps_active_rel * tau; n];
    let residual = kkt_residual(&coords, &grad, &lo, &hi, &eps);
    Ok(SolveResult {
        minimizer: basis.from_coords(&coords)?,
        coords,
        pattern: FacePattern(sides),
        grad_at_min: grad,
        kkt_residual: residual,
        iterations: 0,
        degenerate: !degenerate_coords.is_empty(),
        degenerate_coords,
    })
}

/// Minimize the solver objective of `f` with the listed coordinates fixed and
/// the rest unconstrained. Used by the decoder to recover free coordinates.
pub(crate) fn minimize_with_fixed_coords(
    f: &NormModel,
    n: usize,
    fixed: &[(usize, f64)],
    tau: f64,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    struct Reduced<'a> {
        model: &'a NormModel,
        free: &'a [usize],
        template: Vec<f64>,
    }
    impl Reduced<'_> {
        fn embed(&self, y: &[f64]) -> Vec<f64> {
            let mut x = self.template.clone();
            for (a, &i) in self.free.iter().enumerate() {
                x[i] = y[a];
            }
            x
        }
    }
    impl Objective for Reduced<'_> {
        fn value(&self, y: &[f64]) -> f64 {
            self.model.solver_objective_value(&self.embed(y))
        }
        fn grad(&self, y: &[f64]) -> Vec<f64> {
            let g = self.model.solver_objective_grad(&self.embed(y));
            self.free.iter().map(|&i| g[i]).collect()
        }
        fn hess(&self, y: &[f64]) -> Option<Vec<f64>> {
            let h = self.model.solver_objective_hessian(&self.embed(y))?;
            let n = self.template.len();
            let m = self.free.len();
            let mut hf = vec![0.0; m * m];
            for (a, &i) in self.free.iter().enumerate() {
                for (b, &j) in self.free.iter().enumerate() {
                    hf[a * m + b] = h[i * n + j];
                }
            }
            Some(hf)
        }
    }

    let mut template = vec![0.0; n];
    let mut is_fixed = vec![false; n];
    for &(i, v) in fixed {
        template[i] = v;
        is_fixed[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
    if free.is_empty() {
        return Ok(template);
    }
    let reduced = Reduced {
        model: f,
        free: &free,
        template: template.clone(),
    };
    let m = free.len();
    let lo = vec![f64::NEG_INFINITY; m];
    let hi = vec![f64::INFINITY; m];
    let eps = vec![0.0; m];
    let out = solve_box(
        &reduced,
        &lo,
        &hi,
        opts.tol * tau,
        &eps,
        opts.max_iterations,
        vec![0.0; m],
    )?;
    Ok(reduced.embed(&out.x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{cell_center, Basis};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn sep_quad_clamps() {
        let b = Basis::identity(2).unwrap();
        let f = NormModel::sep_quad(vec![1.0, 1.0]);
        let tau = 0.25;
        let u = [0.8 * tau, 0.3 * tau];
        let r = solve_p(&u, tau, &f, &b, &opts()).unwrap();
        assert_eq!(r.coords, vec![0.5 * tau, 0.3 * tau]);
        assert_eq!(r.pattern.0, vec![1, 0]);
        assert!(r.kkt_residual <= 1e-10);
        assert!(!r.degenerate);
    }

    #[test]
    fn interior_point_is_fixed_point() {
        let b = Basis::identity(3).unwrap();
        let tau = 0.25;
        let u = [0.1 * tau, -0.2 * tau, 0.3 * tau];
        for f in [
            NormModel::sep_quad(vec![1.0, 2.0, 3.0]),
            NormModel::euclidean(),
            NormModel::ellipsoidal(vec![
                2.0, 0.5, 0.0, 0.5, 1.5, 0.25, 0.0, 0.25, 3.0,
            ]),
            NormModel::p_power(2.5),
        ] {
            let r = solve_p(&u, tau, &f, &b, &opts()).unwrap();
            assert_eq!(r.coords, u.to_vec(), "{f:?}");
            assert_eq!(r.pattern.active_count(), 0);
        }
    }

    #[test]
    fn ellipsoidal_matches_dense_grid_oracle() {
        let b = Basis::identity(2).unwrap();
        let f = NormModel::ellipsoidal(vec![4.0, 0.0, 0.0, 1.0]);
        let tau = 0.25;
        let u = [1.0, 1.0];
        let r = solve_p(&u, tau, &f, &b, &opts()).unwrap();

        // dense grid search over the box at resolution tau / 2000
        let m = 2000usize;
        let half = tau / 2.0;
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for i in 0..=m {
            let x0 = -half + tau * i as f64 / m as f64;
            for j in 0..=m {
                let x1 = -half + tau * j as f64 / m as f64;
                let v = f.eval(&[x0 - u[0], x1 - u[1]]);
                if v < best.0 {
                    best = (v, [x0, x1]);
                }
            }
        }
        assert!((r.coords[0] - best.1[0]).abs() < 1e-4);
        assert!((r.coords[1] - best.1[1]).abs() < 1e-4);
        assert!(r.kkt_residual <= 1e-10);
    }

    #[test]
    fn coupled_quadratic_multistart_agrees() {
        let b = Basis::identity(3).unwrap();
        let f = NormModel::ellipsoidal(vec![
            2.0, 0.5, 0.1, 0.5, 1.5, 0.25, 0.1, 0.25, 3.0,
        ]);
        let tau = 0.25;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let u: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let base = solve_p(&u, tau, &f, &b, &opts()).unwrap();
            for _ in 0..5 {
                let start: Vec<f64> = (0..3)
                    .map(|_| rng.random_range(-tau / 2.0..tau / 2.0))
                    .collect();
                let alt = solve_p(&u, tau, &f, &b, &opts().with_start(start)).unwrap();
                for i in 0..3 {
                    assert!(
                        (alt.coords[i] - base.coords[i]).abs() <= 10.0 * 1e-10 * tau,
                        "multistart deviation"
                    );
                }
                assert_eq!(alt.pattern, base.pattern);
            }
        }
    }

    #[test]
    fn ptilde_zero_cell() {
        let b = Basis::identity(2).unwrap();
        let f = NormModel::sep_quad(vec![1.0, 1.0]);
        let r = solve_ptilde(&QuantIndex(vec![0, 0]), 0.25, &f, &b, &opts()).unwrap();
        assert_eq!(r.coords, vec![0.0, 0.0]);
        assert_eq!(r.pattern.active_count(), 0);
    }

    #[test]
    fn ptilde_spec_cell() {
        // cell (2,0) at tau=0.25 spans [0.375,0.625] x [-0.125,0.125];
        // minimizing |v|^2 clamps the origin to (0.375, 0) on the lower face
        let b = Basis::identity(2).unwrap();
        let f = NormModel::sep_quad(vec![1.0, 1.0]);
        let r = solve_ptilde(&QuantIndex(vec![2, 0]), 0.25, &f, &b, &opts()).unwrap();
        assert_eq!(r.coords, vec![0.375, 0.0]);
        assert_eq!(r.pattern.0, vec![-1, 0]);
    }

    #[test]
    fn ptilde_is_mirror_of_translated_p() {
        // direct cell solve vs translated centered solve: the minimizer of f
        // over C(k) is center - u* where u* solves (P)(center); the active
        // set matches with mirrored sides
        let b = Basis::identity(3).unwrap();
        let f = NormModel::ellipsoidal(vec![
            2.0, 0.5, 0.1, 0.5, 1.5, 0.25, 0.1, 0.25, 3.0,
        ]);
        let tau = 0.125;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let k = QuantIndex((0..3).map(|_| rng.random_range(-6..6)).collect());
            let direct = solve_ptilde(&k, tau, &f, &b, &opts()).unwrap();
            let center = cell_center(&k, tau, &b).unwrap();
            let translated = solve_p(&center, tau, &f, &b, &opts()).unwrap();
            for i in 0..3 {
                let mirrored = center[i] - translated.coords[i];
                assert!(
                    (direct.coords[i] - mirrored).abs() < 1e-8,
                    "translation identity violated: {} vs {}",
                    direct.coords[i],
                    mirrored
                );
            }
            assert_eq!(direct.pattern, translated.pattern.mirrored());
            assert_eq!(
                direct.pattern.active_count(),
                translated.pattern.active_count()
            );
        }
    }

    #[test]
    fn fast_path_matches_general_solver() {
        let b = Basis::identity(4).unwrap();
        let f = NormModel::sep_quad(vec![1.0, 0.5, 2.0, 1.5]);
        let tau = 0.25;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..2000 {
            let u: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = clamp_fast_path(&u, tau, &f, &b, &opts()).unwrap();
            let slow = solve_p(&u, tau, &f, &b, &opts()).unwrap();
            for i in 0..4 {
                assert!((fast.coords[i] - slow.coords[i]).abs() <= 1e-10);
            }
            assert_eq!(fast.pattern, slow.pattern);
        }
    }

    #[test]
    fn fast_path_clamp_values() {
        let b = Basis::identity(2).unwrap();
        let f = NormModel::sep_quad(vec![1.0, 1.0]);
        let tau = 0.25;
        let r = clamp_fast_path(&[-3.0 * tau, 0.0], tau, &f, &b, &opts()).unwrap();
        assert_eq!(r.coords, vec![-0.5 * tau, 0.0]);
        assert_eq!(r.pattern.0, vec![-1, 0]);
    }

    #[test]
    fn fast_path_requires_preconditions() {
        let b = Basis::identity(2).unwrap();
        let tau = 0.25;
        match clamp_fast_path(&[0.1, 0.1], tau, &NormModel::euclidean(), &b, &opts()) {
            Err(Error::FastPathUnavailable { .. }) => {}
            other => panic!("expected FastPathUnavailable, got {other:?}"),
        }
        let shear = Basis::from_matrix(2, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        match clamp_fast_path(
            &[0.1, 0.1],
            tau,
            &NormModel::sep_quad(vec![1.0, 1.0]),
            &shear,
            &opts(),
        ) {
            Err(Error::FastPathUnavailable { .. }) => {}
            other => panic!("expected FastPathUnavailable, got {other:?}"),
        }
    }

    #[test]
    fn p_power_objective_solves() {
        let b = Basis::identity(2).unwrap();
        let f = NormModel::p_power(3.0);
        let tau = 0.25;
        let r = solve_ptilde(&QuantIndex(vec![3, 0]), tau, &f, &b, &opts()).unwrap();
        // separable objective: clamp of origin
        assert!((r.coords[0] - tau * 2.5).abs() < 1e-9);
        assert!(r.coords[1].abs() < 1e-9);
        assert_eq!(r.pattern.0, vec![-1, 0]);
    }

    #[test]
    fn rejects_sup_norm_objective() {
        let b = Basis::identity(2).unwrap();
        match solve_p(&[0.1, 0.1], 0.25, &NormModel::coord_sup(), &b, &opts()) {
            Err(Error::UnsupportedNorm { .. }) => {}
            other => panic!("expected UnsupportedNorm, got {other:?}"),
        }
    }

    #[test]
    fn pattern_display() {
        let p = FacePattern(vec![-1, 0, 1]);
        assert_eq!(p.to_string(), "(-1,0,+1)");
        assert_eq!(p.active_count(), 2);
        assert_eq!(p.support(), vec![0, 2]);
    }
}
