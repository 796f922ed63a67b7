//! Cell-boundary equivalence classes, grid counting and slice uniqueness.
//!
//! A boundary point of the centered cell belongs to the class of its face
//! pattern; the class center keeps only the active coordinates at `±tau/2`.
//! For a data norm `f_d` and radius `tau'`, the scaled count
//! `tau^K * #{grid points inside the ball whose cell projection has K active
//! faces}` converges as `tau -> 0` to the summed projected measure `A_K` of
//! the class fans, and each slice of the grid obtained by fixing the active
//! coordinates of a class meets the class fan in at most one grid point.
//! Enumeration radii carry the `tau' ± M tau` slack, where `M tau` bounds
//! `f_d` on the cell boundary, and both bracket counts are reported.

use crate::basis::{Basis, QuantIndex};
use crate::error::{Error, Result};
use crate::norms::NormModel;
use crate::solver::{solve_p, FacePattern, SolverOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Hard cap on enumerated grid points per sweep.
pub const ENUMERATION_BUDGET: u64 = 100_000_000;
/// Vertex enumeration limit for [`constant_m`].
pub const VERTEX_DIM_LIMIT: usize = 20;

/// An equivalence class of cell-boundary points: a face pattern at a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassId {
    pub pattern: FacePattern,
    pub tau: f64,
}

impl ClassId {
    /// The class center in coordinates: active faces at `±tau/2`, free
    /// coordinates zero.
    pub fn center_coords(&self) -> Vec<f64> {
        self.pattern
            .0
            .iter()
            .map(|&s| s as f64 * self.tau / 2.0)
            .collect()
    }

    pub fn active_count(&self) -> usize {
        self.pattern.active_count()
    }
}

/// Grid-count result for one (K, tau) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridCount {
    /// Number of active faces counted for.
    pub k: usize,
    pub tau: f64,
    pub tau_prime: f64,
    /// Points with `f_d(point) <= tau'` and pattern size `k`.
    pub count: u64,
    /// `tau^k * count`.
    pub scaled: f64,
    /// Same count at the shrunken radius `tau' - M tau`.
    pub count_lo: u64,
    /// Same count at the enlarged radius `tau' + M tau`.
    pub count_hi: u64,
    /// Cells with an ambiguous face inside the primary radius; never counted
    /// in any K bucket.
    pub degenerate_count: u64,
}

/// Classify a datum: the class of its cell projection and the `f_d` distance
/// to it.
pub fn classify(
    u: &[f64],
    tau: f64,
    f: &NormModel,
    f_d: &NormModel,
    basis: &Basis,
    opts: &SolverOptions,
) -> Result<(ClassId, f64)> {
    f_d.validate(basis.dim())?;
    let sol = solve_p(u, tau, f, basis, opts)?;
    if sol.degenerate {
        return Err(Error::DegenerateSolve {
            index: sol.degenerate_coords[0],
        });
    }
    let xu = basis.to_coords(u)?;
    let diff: Vec<f64> = xu.iter().zip(&sol.coords).map(|(a, b)| a - b).collect();
    let distance = f_d.eval(&diff);
    Ok((
        ClassId {
            pattern: sol.pattern,
            tau,
        },
        distance,
    ))
}

/// `M = sup f_d` over the unit coordinate cell `{|x_i| <= 1/2}`; by convexity
/// the sup is attained at a vertex, so the 2^N vertices are enumerated.
/// `M * tau` then bounds `f_d` on the boundary of any cell of step `tau`.
pub fn constant_m(f_d: &NormModel, basis: &Basis) -> Result<f64> {
    let n = basis.dim();
    f_d.validate(n)?;
    if n > VERTEX_DIM_LIMIT {
        return Err(Error::DimensionTooLarge {
            dim: n,
            limit: VERTEX_DIM_LIMIT,
        });
    }
    let mut best: f64 = 0.0;
    let mut vertex = vec![0.0f64; n];
    for mask in 0u64..(1u64 << n) {
        for (i, v) in vertex.iter_mut().enumerate() {
            *v = if mask >> i & 1 == 1 { 0.5 } else { -0.5 };
        }
        best = best.max(f_d.eval(&vertex));
    }
    Ok(best)
}

/// One enumerated grid point inside the widened ball.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub k: QuantIndex,
    /// `f_d` of the point itself.
    pub radius: f64,
    /// Pattern of the cell projection (side convention of `solve_p` at the
    /// point, i.e. faces of the projection of the point onto the centered
    /// cell); `None` for degenerate solves.
    pub pattern: Option<FacePattern>,
    /// `f_d` distance from the point to its projection.
    pub distance: f64,
}

/// Shared enumeration sweep: every grid point with
/// `f_d(point) <= tau' + M tau`, classified. Deterministic and order-stable
/// for any worker count.
pub fn enumerate_ball(
    tau: f64,
    tau_prime: f64,
    f: &NormModel,
    f_d: &NormModel,
    basis: &Basis,
    opts: &SolverOptions,
) -> Result<(Vec<GridPoint>, f64)> {
    let n = basis.dim();
    f.validate_objective(n)?;
    f_d.validate_data_norm(n)?;
    if !(tau_prime > 0.0) || !tau_prime.is_finite() {
        return Err(Error::InvalidParameter {
            name: "tau_prime",
            message: format!("data radius must be positive, got {tau_prime}"),
        });
    }
    let m_const = constant_m(f_d, basis)?;
    let hi_radius = tau_prime + m_const * tau;
    let halfwidths = f_d.ball_halfwidths(n, hi_radius)?;
    let ranges: Vec<i64> = halfwidths
        .iter()
        .map(|h| (h / tau * (1.0 + 1e-12)).floor() as i64)
        .collect();
    let mut total: u128 = 1;
    for &r in &ranges {
        total = total.saturating_mul(2 * r as u128 + 1);
    }
    if total > ENUMERATION_BUDGET as u128 {
        let shrink = (total as f64 / ENUMERATION_BUDGET as f64).powf(1.0 / n as f64);
        return Err(Error::EnumerationBudgetExceeded {
            points: total,
            limit: ENUMERATION_BUDGET,
            suggested_tau_floor: tau * shrink,
        });
    }

    // parallelize over the first coordinate; each slice enumerates the rest
    // in lexicographic order, so the concatenated output is order-stable
    let first_range: Vec<i64> = (-ranges[0]..=ranges[0]).collect();
    let slices: Vec<Result<Vec<GridPoint>>> = first_range
        .par_iter()
        .map(|&k0| {
            let mut out = Vec::new();
            let mut k = vec![0i64; n];
            k[0] = k0;
            enumerate_slice(&mut k, 1, &ranges, tau, hi_radius, f, f_d, basis, opts, &mut out)?;
            Ok(out)
        })
        .collect();
    let mut points = Vec::new();
    for s in slices {
        points.extend(s?);
    }
    Ok((points, m_const))
}

#[allow(clippy::too_many_arguments)]
fn enumerate_slice(
    k: &mut Vec<i64>,
    depth: usize,
    ranges: &[i64],
    tau: f64,
    hi_radius: f64,
    f: &NormModel,
    f_d: &NormModel,
    basis: &Basis,
    opts: &SolverOptions,
    out: &mut Vec<GridPoint>,
) -> Result<()> {
    if depth == k.len() {
        let index = QuantIndex(k.clone());
        let coords = index.center_coords(tau);
        let radius = f_d.eval(&coords);
        if radius > hi_radius {
            return Ok(());
        }
        // the projection of the point onto the centered cell; its pattern
        // support equals the active set of the cell solve (mirrored sides)
        let point = basis.from_coords(&coords)?;
        let sol = solve_p(&point, tau, f, basis, opts)?;
        let diff: Vec<f64> = coords.iter().zip(&sol.coords).map(|(a, b)| a - b).collect();
        let distance = f_d.eval(&diff);
        out.push(GridPoint {
            k: index,
            radius,
            pattern: if sol.degenerate { None } else { Some(sol.pattern) },
            distance,
        });
        return Ok(());
    }
    for v in -ranges[depth]..=ranges[depth] {
        k[depth] = v;
        enumerate_slice(k, depth + 1, ranges, tau, hi_radius, f, f_d, basis, opts, out)?;
    }
    Ok(())
}

/// All K buckets of one sweep, plus the degenerate counter.
pub fn count_grid_all(
    tau: f64,
    tau_prime: f64,
    f: &NormModel,
    f_d: &NormModel,
    basis: &Basis,
    opts: &SolverOptions,
) -> Result<Vec<GridCount>> {
    let n = basis.dim();
    let (points, m_const) = enumerate_ball(tau, tau_prime, f, f_d, basis, opts)?;
    let lo_radius = tau_prime - m_const * tau;
    let mut counts = vec![0u64; n + 1];
    let mut counts_lo = vec![0u64; n + 1];
    let mut counts_hi = vec![0u64; n + 1];
    let mut degenerate: u64 = 0;
    for p in &points {
        match &p.pattern {
            None => {
                if p.radius <= tau_prime {
                    degenerate += 1;
                }
            }
            Some(pattern) => {
                let k = pattern.active_count();
                counts_hi[k] += 1;
                if p.radius <= tau_prime {
                    counts[k] += 1;
                }
                if p.radius <= lo_radius {
                    counts_lo[k] += 1;
                }
            }
        }
    }
    Ok((0..=n)
        .map(|k| GridCount {
            k,
            tau,
            tau_prime,
            count: counts[k],
            scaled: tau.powi(k as i32) * counts[k] as f64,
            count_lo: counts_lo[k],
            count_hi: counts_hi[k],
            degenerate_count: degenerate,
        })
        .collect())
}

/// Count grid points inside the `f_d` ball whose cell projection has exactly
/// `k` active faces.
pub fn count_grid(
    k: usize,
    tau: f64,
    tau_prime: f64,
    f: &NormModel,
    f_d: &NormModel,
    basis: &Basis,
    opts: &SolverOptions,
) -> Result<GridCount> {
    let n = basis.dim();
    if k > n {
        return Err(Error::InvalidParameter {
            name: "k",
            message: format!("active count {k} exceeds dimension {n}"),
        });
    }
    let all = count_grid_all(tau, tau_prime, f, f_d, basis, opts)?;
    Ok(all.into_iter().nth(k).unwrap())
}

/// One rung of an `A_K` estimation ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AkRung {
    pub tau: f64,
    pub count: u64,
    pub scaled: f64,
    pub scaled_lo: f64,
    pub scaled_hi: f64,
    /// Difference of `scaled` from the previous (coarser) rung.
    pub diff_from_prev: Option<f64>,
}

/// A ladder estimate of `A_K`, the summed projected class-fan measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AkEstimate {
    pub k: usize,
    /// Scaled count at the smallest step.
    pub estimate: f64,
    pub rungs: Vec<AkRung>,
}

/// Estimate `A_K` as the limit of `tau^K * count` along a decreasing ladder.
pub fn estimate_a_k(
    k: usize,
    tau_prime: f64,
    f: &NormModel,
    f_d: &NormModel,
    basis: &Basis,
    tau_ladder: &[f64],
    opts: &SolverOptions,
) -> Result<AkEstimate> {
    if tau_ladder.len() < 3 {
        return Err(Error::InvalidParameter {
            name: "tau_ladder",
            message: format!("need at least 3 rungs, got {}", tau_ladder.len()),
        });
    }
    if tau_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter {
            name: "tau_ladder",
            message: "ladder must be strictly decreasing".into(),
        });
    }
    let mut rungs: Vec<AkRung> = Vec::with_capacity(tau_ladder.len());
    for &tau in tau_ladder {
        let gc = count_grid(k, tau, tau_prime, f, f_d, basis, opts)?;
        let diff_from_prev = rungs.last().map(|prev: &AkRung| gc.scaled - prev.scaled);
        rungs.push(AkRung {
            tau,
            count: gc.count,
            scaled: gc.scaled,
            scaled_lo: tau.powi(k as i32) * gc.count_lo as f64,
            scaled_hi: tau.powi(k as i32) * gc.count_hi as f64,
            diff_from_prev,
        });
    }
    Ok(AkEstimate {
        k,
        estimate: rungs.last().unwrap().scaled,
        rungs,
    })
}

/// A violating slice: two or more grid points of one class fan share the same
/// active-coordinate sub-vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceWitness {
    pub active_indices: Vec<usize>,
    pub slice_key: Vec<i64>,
    pub points: Vec<QuantIndex>,
}

/// Outcome of a slice-uniqueness sweep for one class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceCheck {
    pub class_pattern: FacePattern,
    pub points_in_class: u64,
    pub slices: u64,
    pub degenerate_count: u64,
    /// First violating slice, if any; `None` means the check passed.
    pub violation: Option<SliceWitness>,
}

impl SliceCheck {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Check that every slice of the grid (fixing the class's active coordinates)
/// meets the class fan `SSAT(class, ]0, tau'])` in at most one point.
///
/// Grid points are classified against the class with the side convention of
/// `solve_p` at the point.
pub fn slice_uniqueness_check(
    class: &ClassId,
    tau: f64,
    tau_prime: f64,
    f: &NormModel,
    f_d: &NormModel,
    basis: &Basis,
    opts: &SolverOptions,
) -> Result<SliceCheck> {
    let n = basis.dim();
    if n > 6 {
        return Err(Error::DimensionTooLarge { dim: n, limit: 6 });
    }
    if class.pattern.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: class.pattern.len(),
        });
    }
    let support = class.pattern.support();
    let (points, _m) = enumerate_ball(tau, tau_prime, f, f_d, basis, opts)?;
    let mut buckets: HashMap<Vec<i64>, Vec<QuantIndex>> = HashMap::new();
    let mut in_class: u64 = 0;
    let mut degenerate: u64 = 0;
    for p in &points {
        match &p.pattern {
            None => degenerate += 1,
            Some(pattern) => {
                if pattern == &class.pattern && p.distance > 0.0 && p.distance <= tau_prime {
                    in_class += 1;
                    let key: Vec<i64> = support.iter().map(|&j| p.k.0[j]).collect();
                    buckets.entry(key).or_default().push(p.k.clone());
                }
            }
        }
    }
    let slices = buckets.len() as u64;
    let mut violation = None;
    let mut keys: Vec<&Vec<i64>> = buckets.keys().collect();
    keys.sort();
    for key in keys {
        let pts = &buckets[key];
        if pts.len() > 1 {
            violation = Some(SliceWitness {
                active_indices: support.clone(),
                slice_key: key.clone(),
                points: pts.clone(),
            });
            break;
        }
    }
    Ok(SliceCheck {
        class_pattern: class.pattern.clone(),
        points_in_class: in_class,
        slices,
        degenerate_count: degenerate,
        violation,
    })
}

/// All face patterns of dimension `n` with at least `min_active` active
/// coordinates, lexicographic.
pub fn all_patterns(n: usize, min_active: usize) -> Vec<FacePattern> {
    let mut out = Vec::new();
    let mut current = vec![0i8; n];
    fn rec(current: &mut Vec<i8>, i: usize, out: &mut Vec<Vec<i8>>) {
        if i == current.len() {
            out.push(current.clone());
            return;
        }
        for s in [-1i8, 0, 1] {
            current[i] = s;
            rec(current, i + 1, out);
        }
        current[i] = 0;
    }
    let mut raw = Vec::new();
    rec(&mut current, 0, &mut raw);
    for s in raw {
        let p = FacePattern(s);
        if p.active_count() >= min_active {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    fn setup_a() -> (Basis, NormModel, NormModel) {
        (
            Basis::identity(2).unwrap(),
            NormModel::sep_quad(vec![1.0, 1.0]),
            NormModel::coord_sup(),
        )
    }

    #[test]
    fn classify_interior_point() {
        let (b, f, fd) = setup_a();
        let tau = 0.25;
        let (class, dist) = classify(&[0.1 * tau, 0.0], tau, &f, &fd, &b, &opts()).unwrap();
        assert_eq!(class.pattern.0, vec![0, 0]);
        assert_eq!(dist, 0.0);
    }

    #[test]
    fn classify_single_face() {
        let (b, f, fd) = setup_a();
        let (class, dist) = classify(&[1.0, 0.0], 0.25, &f, &fd, &b, &opts()).unwrap();
        assert_eq!(class.pattern.0, vec![1, 0]);
        assert!((dist - 0.875).abs() < 1e-12);
    }

    #[test]
    fn classify_corner() {
        let (b, f, fd) = setup_a();
        let (class, dist) = classify(&[1.0, 1.0], 0.25, &f, &fd, &b, &opts()).unwrap();
        assert_eq!(class.pattern.0, vec![1, 1]);
        assert!((dist - 0.875).abs() < 1e-12);
    }

    #[test]
    fn class_center_reclassifies_to_itself() {
        let (b, f, fd) = setup_a();
        let tau = 0.25;
        for pattern in all_patterns(2, 0) {
            let class = ClassId {
                pattern: pattern.clone(),
                tau,
            };
            let center = b.from_coords(&class.center_coords()).unwrap();
            let (got, dist) = classify(&center, tau, &f, &fd, &b, &opts()).unwrap();
            assert_eq!(got.pattern, pattern);
            assert_eq!(dist, 0.0);
        }
    }

    #[test]
    fn constant_m_values() {
        let b = Basis::identity(2).unwrap();
        assert_eq!(constant_m(&NormModel::coord_sup(), &b).unwrap(), 0.5);
        let m = constant_m(&NormModel::euclidean(), &b).unwrap();
        assert!((m - 2.0f64.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_m_matches_dense_sampling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(53);
        let b = Basis::identity(3).unwrap();
        let fd = NormModel::euclidean();
        let m = constant_m(&fd, &b).unwrap();
        let mut sampled: f64 = 0.0;
        for _ in 0..1_000_000 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();
            sampled = sampled.max(fd.eval(&x));
        }
        assert!(sampled <= m + 1e-9);
        assert!(m - sampled < 0.05);
    }

    #[test]
    fn count_grid_setup_a() {
        let (b, f, fd) = setup_a();
        let tau = 0.25;
        // K=1: one nonzero coordinate with |k| in 1..=4, two coordinates,
        // two signs
        let c1 = count_grid(1, tau, 1.0, &f, &fd, &b, &opts()).unwrap();
        assert_eq!(c1.count, 16);
        assert_eq!(c1.scaled, 4.0);
        assert_eq!(c1.degenerate_count, 0);
        // K=2: both nonzero, 8 x 8
        let c2 = count_grid(2, tau, 1.0, &f, &fd, &b, &opts()).unwrap();
        assert_eq!(c2.count, 64);
        assert_eq!(c2.scaled, 4.0);
        // K=0: the origin cell only
        let c0 = count_grid(0, tau, 1.0, &f, &fd, &b, &opts()).unwrap();
        assert_eq!(c0.count, 1);
        assert_eq!(c0.scaled, 1.0);
    }

    #[test]
    fn counts_partition_the_ball() {
        let (b, f, fd) = setup_a();
        let tau = 0.125;
        let all = count_grid_all(tau, 1.0, &f, &fd, &b, &opts()).unwrap();
        let total: u64 = all.iter().map(|c| c.count).sum();
        let degenerate = all[0].degenerate_count;
        // points with sup-norm <= 1: k in [-8,8]^2
        assert_eq!(total + degenerate, 17 * 17);
        assert_eq!(degenerate, 0);
    }

    #[test]
    fn bracket_counts_are_ordered() {
        let (b, f, fd) = setup_a();
        for k in 0..=2usize {
            let c = count_grid(k, 0.25, 1.0, &f, &fd, &b, &opts()).unwrap();
            assert!(c.count_lo <= c.count);
            assert!(c.count <= c.count_hi);
        }
    }

    #[test]
    fn halving_tau_scales_counts() {
        let (b, f, fd) = setup_a();
        for k in 1..=2usize {
            let coarse = count_grid(k, 0.0625, 1.0, &f, &fd, &b, &opts()).unwrap();
            let fine = count_grid(k, 0.03125, 1.0, &f, &fd, &b, &opts()).unwrap();
            let ratio = fine.count as f64 / coarse.count as f64;
            let expected = 2.0f64.powi(k as i32);
            assert!(
                (ratio - expected).abs() / expected < 0.15,
                "K={k}: ratio {ratio} vs {expected}"
            );
        }
    }

    #[test]
    fn estimate_a_k_setup_a() {
        let (b, f, fd) = setup_a();
        let ladder = [0.25, 0.125, 0.0625, 0.03125, 0.015625];
        let a1 = estimate_a_k(1, 1.0, &f, &fd, &b, &ladder, &opts()).unwrap();
        assert_eq!(a1.estimate, 4.0);
        let a2 = estimate_a_k(2, 1.0, &f, &fd, &b, &ladder, &opts()).unwrap();
        assert_eq!(a2.estimate, 4.0);
        // ladder validation
        match estimate_a_k(1, 1.0, &f, &fd, &b, &[0.25, 0.25, 0.125], &opts()) {
            Err(Error::InvalidParameter { .. }) => {}
            other => panic!("expected InvalidParameter, got {other:?}"),
        }
    }

    #[test]
    fn slice_uniqueness_sep_quad_classes() {
        let (b, f, fd) = setup_a();
        let tau = 0.0625;
        for pattern in all_patterns(2, 1) {
            let class = ClassId {
                pattern: pattern.clone(),
                tau,
            };
            let check =
                slice_uniqueness_check(&class, tau, 1.0, &f, &fd, &b, &opts()).unwrap();
            assert!(check.passed(), "violation in class {pattern}");
            assert!(check.points_in_class > 0, "empty class {pattern}");
        }
    }

    #[test]
    fn slice_uniqueness_ellipsoidal() {
        let b = Basis::identity(2).unwrap();
        let f = NormModel::ellipsoidal(vec![4.0, 0.0, 0.0, 1.0]);
        let fd = NormModel::coord_sup();
        let tau = 0.0625;
        for pattern in all_patterns(2, 1) {
            let class = ClassId {
                pattern: pattern.clone(),
                tau,
            };
            let check =
                slice_uniqueness_check(&class, tau, 1.0, &f, &fd, &b, &opts()).unwrap();
            assert!(check.passed(), "violation in class {pattern}");
        }
    }

    #[test]
    fn budget_guard_triggers() {
        let (b, f, fd) = setup_a();
        match count_grid(1, 1e-5, 1.0, &f, &fd, &b, &opts()) {
            Err(Error::EnumerationBudgetExceeded {
                suggested_tau_floor,
                ..
            }) => {
                assert!(suggested_tau_floor > 1e-5);
            }
            other => panic!("expected EnumerationBudgetExceeded, got {other:?}"),
        }
    }

    #[test]
    fn pattern_enumeration_counts() {
        // sum over K of C(N,K) 2^K = 3^N
        assert_eq!(all_patterns(2, 0).len(), 9);
        assert_eq!(all_patterns(2, 1).len(), 8);
        assert_eq!(all_patterns(3, 1).len(), 26);
    }
}
