//! Monte Carlo estimation of the code-length law.
//!
//! For a datum uniform in the `f_d`-ball of radius `tau'`, the harness
//! estimates `P(K active faces)` and the mean reconstruction error per rung
//! of a decreasing `tau` ladder, computes the constants `A_K`, `B`, `C`,
//! `D_K` of the limiting law, and fits the observed exponents of
//! `log P(K)` against both `log tau` and `log E`.
//!
//! Sampling is counter-based: sample `i` of rung `r` draws from its own
//! ChaCha stream derived from the config seed, so runs are bit-identical for
//! any worker count. Per-cell solves are memoized (the face count depends on
//! the datum only through its cell) and 1% of samples are audited against a
//! fresh encode.

use crate::basis::{Basis, QuantIndex};
use crate::codec::encode;
use crate::error::{Error, Result};
use crate::geometry::{constant_m, count_grid_all, AkEstimate, AkRung};
use crate::norms::{CurvatureDiagnostic, NormModel};
use crate::solver::{solve_ptilde, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Per-sample cap on rejection proposals.
const MAX_PROPOSALS_PER_SAMPLE: u64 = 1_000_000;
/// Acceptance-rate floor below which rejection sampling is refused.
const ACCEPTANCE_FLOOR: f64 = 1e-4;

/// Full description of a scaling experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub basis: Basis,
    /// Objective norm `f` driving the cell projection.
    pub f: NormModel,
    /// Data norm defining the sampling ball.
    pub f_d: NormModel,
    /// Norm used for the reconstruction error.
    pub recon_norm: NormModel,
    pub tau_prime: f64,
    pub tau_ladder: Vec<f64>,
    pub samples_per_tau: u64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.basis.dim();
        self.f
            .validate_objective(n)
            .map_err(|e| Error::config(format!("f: {e}")))?;
        self.f_d
            .validate_data_norm(n)
            .map_err(|e| Error::config(format!("f_d: {e}")))?;
        self.recon_norm
            .validate(n)
            .map_err(|e| Error::config(format!("recon_norm: {e}")))?;
        if !(self.tau_prime > 0.0) || !self.tau_prime.is_finite() {
            return Err(Error::config(format!(
                "tau_prime: must be positive, got {}",
                self.tau_prime
            )));
        }
        if self.tau_ladder.is_empty() {
            return Err(Error::config("tau_ladder: must not be empty"));
        }
        for &tau in &self.tau_ladder {
            if !(tau > 0.0) || !tau.is_finite() {
                return Err(Error::config(format!(
                    "tau_ladder: steps must be positive, got {tau}"
                )));
            }
            if tau >= self.tau_prime {
                return Err(Error::config(format!(
                    "tau_ladder: every step must be below tau_prime = {}, got {tau}",
                    self.tau_prime
                )));
            }
        }
        if self.tau_ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::config("tau_ladder: must be strictly decreasing"));
        }
        if self.samples_per_tau == 0 {
            return Err(Error::config("samples_per_tau: must be positive"));
        }
        Ok(())
    }
}

/// Runtime knobs that are not part of the experiment's identity.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub solver: SolverOptions,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Monte Carlo budget for the constant `C`.
    pub c_budget: u64,
    /// Monte Carlo budget for `B` when no closed form exists.
    pub b_budget: u64,
    /// Audit every 100th sample against a fresh encode.
    pub audit: bool,
    /// Pairs for the objective hypothesis gate.
    pub hypothesis_samples: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            solver: SolverOptions::default(),
            threads: None,
            c_budget: 1_000_000,
            b_budget: 1_000_000,
            audit: true,
            hypothesis_samples: 400,
        }
    }
}

/// Rejection sampler for the `f_d` ball, with acceptance accounting.
pub struct BallSampler<'a> {
    f_d: &'a NormModel,
    tau_prime: f64,
    halfwidths: Vec<f64>,
    pub proposals: u64,
    pub accepted: u64,
}

impl<'a> BallSampler<'a> {
    pub fn new(f_d: &'a NormModel, tau_prime: f64, n: usize) -> Result<BallSampler<'a>> {
        let halfwidths = f_d.ball_halfwidths(n, tau_prime)?;
        Ok(BallSampler {
            f_d,
            tau_prime,
            halfwidths,
            proposals: 0,
            accepted: 0,
        })
    }

    /// Draw one coordinate vector uniform in `{x : f_d(x) <= tau'}`.
    pub fn sample_coords<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>> {
        let mut local: u64 = 0;
        loop {
            local += 1;
            self.proposals += 1;
            let x: Vec<f64> = self
                .halfwidths
                .iter()
                .map(|&h| rng.random_range(-h..h))
                .collect();
            if self.f_d.eval(&x) <= self.tau_prime {
                self.accepted += 1;
                return Ok(x);
            }
            if local >= MAX_PROPOSALS_PER_SAMPLE {
                return Err(Error::AcceptanceTooLow {
                    rate: 1.0 / local as f64,
                });
            }
            if self.proposals >= 10_000 {
                let rate = self.accepted as f64 / self.proposals as f64;
                if rate < ACCEPTANCE_FLOOR {
                    return Err(Error::AcceptanceTooLow { rate });
                }
            }
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// Draw one ambient vector uniform in the `f_d` ball of radius `tau'`.
pub fn sample_uniform_ball<R: Rng + ?Sized>(
    f_d: &NormModel,
    tau_prime: f64,
    basis: &Basis,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut sampler = BallSampler::new(f_d, tau_prime, basis.dim())?;
    let x = sampler.sample_coords(rng)?;
    basis.from_coords(&x)
}

/// Summary of one ladder rung.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TauSummary {
    pub tau: f64,
    pub n_samples: u64,
    pub degenerate_samples: u64,
    pub unique_cells: u64,
    pub degenerate_cells: u64,
    pub acceptance_rate: f64,
    /// Mean reconstruction error over non-degenerate samples.
    pub e_hat: f64,
}

/// One (tau, K) row of the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingRow {
    pub tau: f64,
    pub k: usize,
    pub samples: u64,
    pub p_hat: f64,
    pub se: f64,
    pub e_hat: f64,
    /// `p_hat * tau^(K-N)`.
    pub scaled_prob: f64,
    /// Grid count of the same (tau, K) from the counting sweep.
    pub grid_count: u64,
    pub grid_scaled: f64,
    pub grid_scaled_lo: f64,
    pub grid_scaled_hi: f64,
    /// `|p_hat tau^(K-N) B - tau^K count|`, the finite-tau gap of the
    /// counting identity.
    pub consistency_gap: f64,
    /// `3 se tau^(K-N) B` plus the bracket width.
    pub consistency_tol: f64,
}

/// A fitted line with a 95% confidence interval on the slope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub points: usize,
}

/// Exponent fits for one K.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    pub k: usize,
    pub rungs_used: usize,
    /// Slope of `log p_hat(K)` against `log tau`.
    pub slope_tau: LineFit,
    /// Slope of `log p_hat(K)` against `log E_hat`.
    pub slope_e: LineFit,
    /// The counting exponent `N - K`.
    pub n_minus_k: f64,
    /// The printed exponent `(N - K) / (N + 1)` of the limiting law.
    pub paper_exponent: f64,
}

/// Fit result per K; fitting is skipped where the tail has too few samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum FitOutcome {
    Fitted(ExponentFit),
    InsufficientData { k: usize, reason: String },
}

/// Derived constants of the limiting law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DkRow {
    pub k: usize,
    pub a_k: f64,
    /// `D_K = A_K / (B C^((N-K)/(N+1)))`.
    pub d_k: f64,
    /// Alternative `D'_K = A_K / (B C^(N-K))`.
    pub d_prime_k: f64,
    pub exponent: f64,
    pub alt_exponent: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Constants {
    /// Sup of `f_d` over the unit coordinate cell.
    pub m: f64,
    /// Ball-to-cell volume ratio.
    pub b: f64,
    pub b_method: String,
    pub b_se: Option<f64>,
    /// Monte Carlo unit-cell mean of the reconstruction norm.
    pub c_monte_carlo: f64,
    pub c_mc_se: f64,
    /// Midpoint-quadrature value with its refinement delta.
    pub c_quadrature: f64,
    pub c_quad_delta: f64,
    pub a_k: Vec<AkEstimate>,
    pub d: Vec<DkRow>,
}

/// Full output of a scaling run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<crate::report::RunManifest>,
    pub config: ExperimentConfig,
    pub dim: usize,
    pub warnings: Vec<String>,
    pub hypothesis: CurvatureDiagnostic,
    pub taus: Vec<TauSummary>,
    pub rows: Vec<ScalingRow>,
    pub constants: Constants,
    pub fits: Vec<FitOutcome>,
    /// Fit of `log E_hat` against `log tau`.
    pub e_fit: Option<LineFit>,
}

impl ScalingReport {
    pub fn row(&self, tau: f64, k: usize) -> Option<&ScalingRow> {
        self.rows.iter().find(|r| r.tau == tau && r.k == k)
    }

    pub fn tau_summary(&self, tau: f64) -> Option<&TauSummary> {
        self.taus.iter().find(|t| t.tau == tau)
    }
}

struct RungData {
    summary: TauSummary,
    counts: Vec<u64>,
    n_effective: u64,
}

/// Run the full scaling experiment.
pub fn run_scaling(config: &ExperimentConfig, opts: &RunOptions) -> Result<ScalingReport> {
    config.validate()?;
    match opts.threads {
        Some(t) if t > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Internal {
                    message: format!("thread pool: {e}"),
                })?;
            pool.install(|| run_scaling_inner(config, opts))
        }
        _ => run_scaling_inner(config, opts),
    }
}

fn run_scaling_inner(config: &ExperimentConfig, opts: &RunOptions) -> Result<ScalingReport> {
    let n = config.basis.dim();
    let mut warnings = Vec::new();

    // objective hypothesis gate: a non-positive margin is a hard failure
    let hypothesis =
        config
            .f
            .check_hypotheses(n, opts.hypothesis_samples, config.seed ^ 0x47)?;
    if hypothesis.lipschitz_estimate_hinv > 1e3 {
        warnings.push(format!(
            "objective Gauss map looks near-flat: sampled inverse-Lipschitz estimate {:.3e}",
            hypothesis.lipschitz_estimate_hinv
        ));
    }
    if config.samples_per_tau < 10_000 {
        warnings.push(format!(
            "samples_per_tau = {} is below the 10^4 floor expected of acceptance runs",
            config.samples_per_tau
        ));
    }

    let mut taus = Vec::new();
    let mut rows = Vec::new();
    let mut rung_data = Vec::new();
    for (rung, &tau) in config.tau_ladder.iter().enumerate() {
        let data = run_rung(config, opts, rung, tau)?;
        rung_data.push(data);
    }

    // grid counting sweeps on the same ladder
    let mut grid_per_rung = Vec::new();
    for &tau in &config.tau_ladder {
        grid_per_rung.push(count_grid_all(
            tau,
            config.tau_prime,
            &config.f,
            &config.f_d,
            &config.basis,
            &opts.solver,
        )?);
    }

    let m_const = constant_m(&config.f_d, &config.basis)?;
    let (b, b_method, b_se) = compute_b(
        &config.f_d,
        config.tau_prime,
        &config.basis,
        opts.b_budget,
        config.seed ^ 0xB0,
    )?;

    for (rung, data) in rung_data.iter().enumerate() {
        let tau = data.summary.tau;
        let grid = &grid_per_rung[rung];
        for k in 0..=n {
            let p_hat = if data.n_effective == 0 {
                0.0
            } else {
                data.counts[k] as f64 / data.n_effective as f64
            };
            let se = if data.n_effective == 0 {
                0.0
            } else {
                (p_hat * (1.0 - p_hat) / data.n_effective as f64).sqrt()
            };
            let scale = tau.powi(k as i32 - n as i32);
            let gc = &grid[k];
            let grid_scaled_lo = tau.powi(k as i32) * gc.count_lo as f64;
            let grid_scaled_hi = tau.powi(k as i32) * gc.count_hi as f64;
            let lhs = p_hat * scale * b;
            let consistency_gap = (lhs - gc.scaled).abs();
            let consistency_tol = 3.0 * se * scale * b + (grid_scaled_hi - grid_scaled_lo);
            rows.push(ScalingRow {
                tau,
                k,
                samples: data.counts[k],
                p_hat,
                se,
                e_hat: data.summary.e_hat,
                scaled_prob: p_hat * scale,
                grid_count: gc.count,
                grid_scaled: gc.scaled,
                grid_scaled_lo,
                grid_scaled_hi,
                consistency_gap,
                consistency_tol,
            });
        }
        taus.push(data.summary.clone());
    }

    // probability partition sanity
    for data in &rung_data {
        if data.n_effective > 0 {
            let total: u64 = data.counts.iter().sum();
            if total != data.n_effective {
                return Err(Error::Internal {
                    message: "per-K counts do not partition the samples".into(),
                });
            }
        }
    }

    // A_K ladder estimates reuse the grid sweeps
    let mut a_k_estimates = Vec::new();
    for k in 0..=n {
        let mut rungs: Vec<AkRung> = Vec::new();
        for (rung, &tau) in config.tau_ladder.iter().enumerate() {
            let gc = &grid_per_rung[rung][k];
            let diff_from_prev = rungs.last().map(|p: &AkRung| gc.scaled - p.scaled);
            rungs.push(AkRung {
                tau,
                count: gc.count,
                scaled: gc.scaled,
                scaled_lo: tau.powi(k as i32) * gc.count_lo as f64,
                scaled_hi: tau.powi(k as i32) * gc.count_hi as f64,
                diff_from_prev,
            });
        }
        a_k_estimates.push(AkEstimate {
            k,
            estimate: rungs.last().unwrap().scaled,
            rungs,
        });
    }

    let (c_mc, c_mc_se) = compute_c_monte_carlo(
        &config.recon_norm,
        n,
        opts.c_budget,
        config.seed ^ 0xC0,
    )?;
    let (c_quad, c_quad_delta) = compute_c_quadrature(&config.recon_norm, n, opts.c_budget)?;

    let mut d_rows = Vec::new();
    for k in 1..=n {
        let a_k = a_k_estimates[k].estimate;
        let (d_k, d_prime_k) = compute_d_k(a_k, b, c_quad, n, k)?;
        d_rows.push(DkRow {
            k,
            a_k,
            d_k,
            d_prime_k,
            exponent: (n - k) as f64 / (n as f64 + 1.0),
            alt_exponent: (n - k) as f64,
        });
    }

    let constants = Constants {
        m: m_const,
        b,
        b_method,
        b_se,
        c_monte_carlo: c_mc,
        c_mc_se,
        c_quadrature: c_quad,
        c_quad_delta,
        a_k: a_k_estimates,
        d: d_rows,
    };

    let fits = fit_exponents_from_rows(&rows, &taus, n, config.samples_per_tau);
    let e_fit = fit_e_vs_tau(&taus);

    Ok(ScalingReport {
        manifest: None,
        config: config.clone(),
        dim: n,
        warnings,
        hypothesis,
        taus,
        rows,
        constants,
        fits,
        e_fit,
    })
}

fn run_rung(
    config: &ExperimentConfig,
    opts: &RunOptions,
    rung: usize,
    tau: f64,
) -> Result<RungData> {
    let n = config.basis.dim();
    let n_samples = config.samples_per_tau;
    let stream_base = rung as u64 * n_samples;

    // pass 1: draw samples, quantize, measure the reconstruction error
    let per_sample: Vec<Result<(QuantIndex, f64, u64)>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(stream_base + i);
            let mut sampler = BallSampler::new(&config.f_d, config.tau_prime, n)?;
            let x = sampler.sample_coords(&mut rng)?;
            let k = crate::basis::quantize_coords(&x, tau)?;
            let diff: Vec<f64> = x
                .iter()
                .zip(k.center_coords(tau))
                .map(|(xi, ci)| xi - ci)
                .collect();
            let err = config.recon_norm.eval(&diff);
            Ok((k, err, sampler.proposals))
        })
        .collect();
    let mut samples = Vec::with_capacity(n_samples as usize);
    for s in per_sample {
        samples.push(s?);
    }

    // pass 2: solve each distinct cell once, in sorted order
    let mut unique: Vec<QuantIndex> = samples.iter().map(|(k, _, _)| k.clone()).collect();
    unique.sort();
    unique.dedup();
    let solved: Vec<Result<(usize, bool)>> = unique
        .par_iter()
        .map(|k| {
            let sol = solve_ptilde(k, tau, &config.f, &config.basis, &opts.solver)?;
            Ok((sol.pattern.active_count(), sol.degenerate))
        })
        .collect();
    let mut memo: HashMap<&QuantIndex, (usize, bool)> = HashMap::with_capacity(unique.len());
    let mut degenerate_cells: u64 = 0;
    for (k, s) in unique.iter().zip(solved) {
        let (count, degenerate) = s?;
        if degenerate {
            degenerate_cells += 1;
        }
        memo.insert(k, (count, degenerate));
    }

    // pass 3: ordered deterministic reduction
    let mut counts = vec![0u64; n + 1];
    let mut degenerate_samples: u64 = 0;
    let mut error_sum = 0.0f64;
    let mut proposals: u64 = 0;
    for (k, err, prop) in &samples {
        proposals += prop;
        let &(active, degenerate) = memo.get(k).unwrap();
        if degenerate {
            degenerate_samples += 1;
            continue;
        }
        counts[active] += 1;
        error_sum += err;
    }
    let n_effective = n_samples - degenerate_samples;
    let e_hat = if n_effective == 0 {
        0.0
    } else {
        error_sum / n_effective as f64
    };

    // audit 1% of samples against a fresh encode
    if opts.audit {
        for (i, (k, _, _)) in samples.iter().enumerate().step_by(100) {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(stream_base + i as u64);
            let mut sampler = BallSampler::new(&config.f_d, config.tau_prime, n)?;
            let x = sampler.sample_coords(&mut rng)?;
            let u = config.basis.from_coords(&x)?;
            let (memo_active, degenerate) = memo[k];
            if degenerate {
                continue;
            }
            let fresh = encode(&u, tau, &config.f, &config.basis, &opts.solver)?;
            if fresh.len() != memo_active {
                return Err(Error::Internal {
                    message: format!(
                        "memoization audit failed at rung {rung} sample {i}: \
                         memoized K = {memo_active}, fresh K = {}",
                        fresh.len()
                    ),
                });
            }
        }
    }

    Ok(RungData {
        summary: TauSummary {
            tau,
            n_samples,
            degenerate_samples,
            unique_cells: unique.len() as u64,
            degenerate_cells,
            acceptance_rate: n_samples as f64 / proposals as f64,
            e_hat,
        },
        counts,
        n_effective,
    })
}

/// `C` by Monte Carlo: mean of the norm over the unit coordinate cell.
pub fn compute_c_monte_carlo(
    recon_norm: &NormModel,
    n: usize,
    budget: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    recon_norm.validate(n)?;
    if budget < 100_000 {
        return Err(Error::InvalidParameter {
            name: "budget",
            message: format!("need at least 1e5 points, got {budget}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut x = vec![0.0f64; n];
    for _ in 0..budget {
        for xi in x.iter_mut() {
            *xi = rng.random_range(-0.5..0.5);
        }
        let v = recon_norm.eval(&x);
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / budget as f64;
    let var = (sum_sq / budget as f64 - mean * mean).max(0.0);
    Ok((mean, (var / budget as f64).sqrt()))
}

/// `C` by tensor midpoint quadrature at two refinement levels; returns the
/// finer value and the refinement delta.
pub fn compute_c_quadrature(recon_norm: &NormModel, n: usize, budget: u64) -> Result<(f64, f64)> {
    recon_norm.validate(n)?;
    if budget < 100_000 {
        return Err(Error::InvalidParameter {
            name: "budget",
            message: format!("need at least 1e5 points, got {budget}"),
        });
    }
    let per_level = budget as f64 / (1.0 + (1u64 << n) as f64);
    let mut m = per_level.powf(1.0 / n as f64).floor() as usize;
    if m % 2 == 1 {
        m -= 1;
    }
    m = m.max(2);
    let coarse = midpoint_cell_integral(recon_norm, n, m);
    let fine = midpoint_cell_integral(recon_norm, n, 2 * m);
    Ok((fine, (fine - coarse).abs()))
}

fn midpoint_cell_integral(norm: &NormModel, n: usize, m: usize) -> f64 {
    let nodes: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64 - 0.5).collect();
    let weight = 1.0 / (m as f64).powi(n as i32);
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0f64; n];
    let mut sum = 0.0f64;
    loop {
        for (d, &i) in idx.iter().enumerate() {
            x[d] = nodes[i];
        }
        sum += norm.eval(&x);
        // odometer increment
        let mut d = 0;
        loop {
            if d == n {
                return sum * weight;
            }
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// `B`: coordinate-space volume of the `f_d` ball over the unit cell volume.
/// Closed form for the catalog, Monte Carlo fallback otherwise. Returns
/// (value, method, standard error).
pub fn compute_b(
    f_d: &NormModel,
    tau_prime: f64,
    basis: &Basis,
    budget: u64,
    seed: u64,
) -> Result<(f64, String, Option<f64>)> {
    let n = basis.dim();
    f_d.validate_data_norm(n)?;
    if let Some(v) = f_d.ball_volume_closed_form(n, tau_prime) {
        return Ok((v, "closed-form".into(), None));
    }
    let halfwidths = f_d.ball_halfwidths(n, tau_prime)?;
    let box_volume: f64 = halfwidths.iter().map(|h| 2.0 * h).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits: u64 = 0;
    let mut x = vec![0.0f64; n];
    for _ in 0..budget {
        for (xi, &h) in x.iter_mut().zip(&halfwidths) {
            *xi = rng.random_range(-h..h);
        }
        if f_d.eval(&x) <= tau_prime {
            hits += 1;
        }
    }
    let p = hits as f64 / budget as f64;
    let se = (p * (1.0 - p) / budget as f64).sqrt() * box_volume;
    Ok((p * box_volume, "monte-carlo".into(), Some(se)))
}

/// `D_K = A_K / (B C^((N-K)/(N+1)))` together with the alternative
/// `D'_K = A_K / (B C^(N-K))`.
pub fn compute_d_k(a_k: f64, b: f64, c: f64, n: usize, k: usize) -> Result<(f64, f64)> {
    if !(a_k >= 0.0) || !(b > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidParameter {
            name: "constants",
            message: format!("need A_K >= 0, B > 0, C > 0; got {a_k}, {b}, {c}"),
        });
    }
    if k > n {
        return Err(Error::InvalidParameter {
            name: "k",
            message: format!("K = {k} exceeds N = {n}"),
        });
    }
    let exp = (n - k) as f64 / (n as f64 + 1.0);
    Ok((a_k / (b * c.powf(exp)), a_k / (b * c.powi((n - k) as i32))))
}

/// 97.5% two-sided Student t quantile.
fn t_975(df: usize) -> f64 {
    const TABLE: [(usize, f64); 15] = [
        (1, 12.706),
        (2, 4.303),
        (3, 3.182),
        (4, 2.776),
        (5, 2.571),
        (6, 2.447),
        (7, 2.365),
        (8, 2.306),
        (9, 2.262),
        (10, 2.228),
        (12, 2.179),
        (15, 2.131),
        (20, 2.086),
        (25, 2.060),
        (30, 2.042),
    ];
    for &(d, t) in TABLE.iter() {
        if df <= d {
            return t;
        }
    }
    1.96
}

/// Ordinary least squares with a t confidence interval on the slope.
fn line_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let m = xs.len();
    if m < 3 {
        return None;
    }
    let mf = m as f64;
    let x_bar = xs.iter().sum::<f64>() / mf;
    let y_bar = ys.iter().sum::<f64>() / mf;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar) * (x - x_bar)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - x_bar) * (y - y_bar))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let df = m - 2;
    let se = (rss / df as f64 / sxx).sqrt();
    let t = t_975(df);
    Some(LineFit {
        slope,
        intercept,
        ci_lo: slope - t * se,
        ci_hi: slope + t * se,
        points: m,
    })
}

fn fit_exponents_from_rows(
    rows: &[ScalingRow],
    taus: &[TauSummary],
    n: usize,
    samples_per_tau: u64,
) -> Vec<FitOutcome> {
    let floor = 10.0 / samples_per_tau as f64;
    let mut out = Vec::new();
    for k in 0..=n {
        let usable: Vec<&ScalingRow> = rows
            .iter()
            .filter(|r| r.k == k && r.p_hat > floor)
            .collect();
        if usable.len() < 4 {
            out.push(FitOutcome::InsufficientData {
                k,
                reason: format!(
                    "only {} rungs with p_hat above {:.3e}; need 4",
                    usable.len(),
                    floor
                ),
            });
            continue;
        }
        let log_tau: Vec<f64> = usable.iter().map(|r| r.tau.ln()).collect();
        let log_p: Vec<f64> = usable.iter().map(|r| r.p_hat.ln()).collect();
        let log_e: Vec<f64> = usable
            .iter()
            .map(|r| {
                taus.iter()
                    .find(|t| t.tau == r.tau)
                    .map(|t| t.e_hat.ln())
                    .unwrap_or(f64::NAN)
            })
            .collect();
        let slope_tau = line_fit(&log_tau, &log_p);
        let slope_e = line_fit(&log_e, &log_p);
        match (slope_tau, slope_e) {
            (Some(st), Some(se)) => out.push(FitOutcome::Fitted(ExponentFit {
                k,
                rungs_used: usable.len(),
                slope_tau: st,
                slope_e: se,
                n_minus_k: (n - k) as f64,
                paper_exponent: (n - k) as f64 / (n as f64 + 1.0),
            })),
            _ => out.push(FitOutcome::InsufficientData {
                k,
                reason: "degenerate regressors".into(),
            }),
        }
    }
    out
}

fn fit_e_vs_tau(taus: &[TauSummary]) -> Option<LineFit> {
    let usable: Vec<&TauSummary> = taus.iter().filter(|t| t.e_hat > 0.0).collect();
    if usable.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = usable.iter().map(|t| t.tau.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|t| t.e_hat.ln()).collect();
    line_fit(&xs, &ys)
}

/// Standalone re-fit of exponents from an existing report.
pub fn fit_exponents(report: &ScalingReport) -> Vec<FitOutcome> {
    fit_exponents_from_rows(
        &report.rows,
        &report.taus,
        report.dim,
        report.config.samples_per_tau,
    )
}
