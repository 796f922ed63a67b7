//! The `quantcell` command-line front end.
//!
//! Subcommands: `check-norm`, `encode`, `decode`, `experiment`, `count-grid`,
//! `constants`, `fit`. All heavy lifting lives in the library; this module
//! parses arguments, loads JSON inputs, embeds the run manifest in every
//! output file, and maps errors onto exit codes:
//!
//! - 0: success
//! - 1: usage, parse or config errors
//! - 2: objective hypothesis violation
//! - 3: runtime budget exhausted (enumeration, rejection acceptance,
//!   solver iterations)

use crate::error::{Error, Result};
use crate::geometry::count_grid_all;
use crate::norms::NormModel;
use crate::report::{self, RunManifest};
use crate::scaling::{
    compute_b, compute_c_monte_carlo, compute_c_quadrature, compute_d_k, fit_exponents,
    run_scaling, ExperimentConfig, RunOptions, ScalingReport,
};
use crate::solver::SolverOptions;
use crate::Basis;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "quantcell",
    version,
    about = "Projection-onto-quantization-cell codec and code-length scaling experiments"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct GlobalArgs {
    /// Worker threads (falls back to QUANTLAB_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// KKT tolerance, applied relative to tau.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Active-face tolerance relative to the cell width.
    #[arg(long, global = true, default_value_t = 1e-9)]
    eps_active_rel: f64,
    /// Seed override for seeded subcommands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for report files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Probe a norm's strict-convexity and curvature hypotheses.
    CheckNorm {
        /// Norm spec: inline JSON or a path to a JSON file.
        #[arg(long)]
        spec: String,
        /// Ambient dimension to sample in.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Number of sampled level-set pairs.
        #[arg(long, default_value_t = 400)]
        samples: usize,
    },
    /// Encode a vector as (active set, boundary values).
    Encode {
        /// Path to a JSON array of doubles (the ambient vector).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        tau: f64,
        /// Objective norm: inline JSON or a path.
        #[arg(long)]
        norm: String,
        /// Basis JSON file; identity of the input dimension when omitted.
        #[arg(long)]
        basis: Option<PathBuf>,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode a code back to its cell index and reconstruction.
    Decode {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        norm: String,
        #[arg(long)]
        basis: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full scaling experiment from a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Grid counting only: scaled counts with bracketing radii.
    CountGrid {
        #[arg(long)]
        config: PathBuf,
        /// Restrict the printed table to one K.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Compute the constants M, B, C, A_K and D_K for a config.
    Constants {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-derive the exponent fit table from an existing report.
    Fit {
        #[arg(long)]
        report: PathBuf,
    },
}

/// Parse and run; returns the process exit code.
pub fn run<I>(args: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let args: Vec<String> = args.into_iter().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are successful outcomes
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let command_line = args.join(" ");
    match dispatch(cli, command_line) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::HypothesisViolation { .. } => 2,
        Error::EnumerationBudgetExceeded { .. }
        | Error::AcceptanceTooLow { .. }
        | Error::MaxIterations { .. } => 3,
        _ => 1,
    }
}

fn threads_from(global: &GlobalArgs) -> usize {
    global
        .threads
        .or_else(|| {
            std::env::var("QUANTLAB_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0)
}

fn solver_options(global: &GlobalArgs) -> SolverOptions {
    SolverOptions {
        tol: global.tol,
        eps_active_rel: global.eps_active_rel,
        ..SolverOptions::default()
    }
}

fn run_options(global: &GlobalArgs) -> RunOptions {
    let threads = threads_from(global);
    RunOptions {
        solver: solver_options(global),
        threads: if threads > 0 { Some(threads) } else { None },
        ..RunOptions::default()
    }
}

/// Inline JSON when the value starts with '{' or '[', otherwise a file path.
fn load_json_arg<T: serde::de::DeserializeOwned>(value: &str, what: &str) -> Result<T> {
    let text = if value.trim_start().starts_with(['{', '[']) {
        value.to_string()
    } else {
        read_file(Path::new(value))?
    };
    serde_json::from_str(&text).map_err(|e| Error::config(format!("{what}: {e}")))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn load_basis(basis: &Option<PathBuf>, dim: usize) -> Result<Basis> {
    match basis {
        Some(path) => {
            let text = read_file(path)?;
            serde_json::from_str(&text).map_err(|e| Error::config(format!("basis: {e}")))
        }
        None => Basis::identity(dim),
    }
}

fn load_config(path: &Path, seed_override: Option<u64>) -> Result<ExperimentConfig> {
    let text = read_file(path)?;
    let mut config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Error::config(format!("config: {e}")))?;
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn build_manifest(
    command_line: String,
    config: &ExperimentConfig,
    global: &GlobalArgs,
) -> Result<RunManifest> {
    let config_json = serde_json::to_string(config)?;
    let mut manifest = RunManifest::new(command_line, &config_json, config.seed);
    manifest.tol = global.tol;
    manifest.eps_active_rel = global.eps_active_rel;
    manifest.threads = threads_from(global);
    Ok(manifest)
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => report::write_string(path, content),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn dispatch(cli: Cli, command_line: String) -> Result<()> {
    let global = cli.global.clone();
    match cli.command {
        Command::CheckNorm { spec, dim, samples } => cmd_check_norm(&global, &spec, dim, samples),
        Command::Encode {
            input,
            tau,
            norm,
            basis,
            out,
        } => cmd_encode(&global, &input, tau, &norm, &basis, &out),
        Command::Decode {
            code,
            norm,
            basis,
            out,
        } => cmd_decode(&global, &code, &norm, &basis, &out),
        Command::Experiment { config } => cmd_experiment(&global, &config, command_line),
        Command::CountGrid { config, k } => cmd_count_grid(&global, &config, k, command_line),
        Command::Constants { config } => cmd_constants(&global, &config, command_line),
        Command::Fit { report } => cmd_fit(&report),
    }
}

fn cmd_check_norm(global: &GlobalArgs, spec: &str, dim: usize, samples: usize) -> Result<()> {
    let norm: NormModel = load_json_arg(spec, "norm spec")?;
    let seed = global.seed.unwrap_or(1);
    let diag = norm.check_hypotheses(dim, samples, seed)?;
    println!("norm hypotheses: PASS");
    println!("  strict convexity margin: {:.6e}", diag.strict_convexity_margin);
    println!(
        "  inverse Gauss map Lipschitz estimate: {:.6e}",
        diag.lipschitz_estimate_hinv
    );
    println!("  sampled pairs: {}", diag.samples);
    if diag.lipschitz_estimate_hinv > 1e3 {
        println!(
            "warning: level set looks near-flat somewhere; curvature hypothesis is doubtful"
        );
    }
    Ok(())
}

fn cmd_encode(
    global: &GlobalArgs,
    input: &Path,
    tau: f64,
    norm: &str,
    basis: &Option<PathBuf>,
    out: &Option<PathBuf>,
) -> Result<()> {
    let u: Vec<f64> = load_json_arg(&read_file(input)?, "input vector")?;
    let f: NormModel = load_json_arg(norm, "norm spec")?;
    let basis = load_basis(basis, u.len())?;
    let opts = solver_options(global);
    let code = crate::codec::encode(&u, tau, &f, &basis, &opts)?;
    write_output(out, &serde_json::to_string(&code)?)
}

fn cmd_decode(
    global: &GlobalArgs,
    code_path: &Path,
    norm: &str,
    basis: &Option<PathBuf>,
    out: &Option<PathBuf>,
) -> Result<()> {
    let code: crate::codec::Code = load_json_arg(&read_file(code_path)?, "code")?;
    let f: NormModel = load_json_arg(norm, "norm spec")?;
    let basis = load_basis(basis, code.n)?;
    let opts = solver_options(global);
    let (k, reconstruction) = crate::codec::decode(&code, &f, &basis, &opts)?;
    let payload = serde_json::json!({
        "k": k.as_slice(),
        "reconstruction": reconstruction,
    });
    write_output(out, &payload.to_string())
}

fn cmd_experiment(global: &GlobalArgs, config_path: &Path, command_line: String) -> Result<()> {
    let config = load_config(config_path, global.seed)?;
    let mut manifest = build_manifest(command_line, &config, global)?;
    let opts = run_options(global);
    let mut report: ScalingReport = run_scaling(&config, &opts)?;
    manifest.finish();
    report.manifest = Some(manifest);
    ensure_out_dir(&global.out_dir)?;
    report::write_report_json(&global.out_dir.join("report.json"), &report)?;
    report::write_scaling_csv(&global.out_dir.join("scaling.csv"), &report)?;
    report::write_counts_csv(&global.out_dir.join("counts.csv"), &report)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", report::fit_table(&report));
    println!(
        "wrote report.json, scaling.csv, counts.csv to {}",
        global.out_dir.display()
    );
    Ok(())
}

fn cmd_count_grid(
    global: &GlobalArgs,
    config_path: &Path,
    k_filter: Option<usize>,
    command_line: String,
) -> Result<()> {
    let config = load_config(config_path, global.seed)?;
    let mut manifest = build_manifest(command_line, &config, global)?;
    let opts = run_options(global);
    let solver = opts.solver.clone();
    let run = || -> Result<Vec<crate::geometry::GridCount>> {
        let mut all = Vec::new();
        for &tau in &config.tau_ladder {
            let counts = count_grid_all(
                tau,
                config.tau_prime,
                &config.f,
                &config.f_d,
                &config.basis,
                &solver,
            )?;
            all.extend(counts);
        }
        Ok(all)
    };
    let counts = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Internal {
                message: format!("thread pool: {e}"),
            })?
            .install(run),
        None => run(),
    }?;
    manifest.finish();

    let mut csv = format!("# manifest: {}\n", serde_json::to_string(&manifest)?);
    csv.push_str("K,tau,count,scaled,count_lo,count_hi,degenerate_count\n");
    println!("{:>3} {:>12} {:>10} {:>12} {:>10} {:>10} {:>6}", "K", "tau", "count", "scaled", "lo", "hi", "degen");
    for c in &counts {
        if let Some(k) = k_filter {
            if c.k != k {
                continue;
            }
        }
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.k, c.tau, c.count, c.scaled, c.count_lo, c.count_hi, c.degenerate_count
        ));
        println!(
            "{:>3} {:>12} {:>10} {:>12.6} {:>10} {:>10} {:>6}",
            c.k, c.tau, c.count, c.scaled, c.count_lo, c.count_hi, c.degenerate_count
        );
    }
    ensure_out_dir(&global.out_dir)?;
    report::write_string(&global.out_dir.join("counts.csv"), &csv)?;
    println!("wrote counts.csv to {}", global.out_dir.display());
    Ok(())
}

fn cmd_constants(global: &GlobalArgs, config_path: &Path, command_line: String) -> Result<()> {
    let config = load_config(config_path, global.seed)?;
    let mut manifest = build_manifest(command_line, &config, global)?;
    let opts = run_options(global);
    let n = config.basis.dim();
    let m = crate::geometry::constant_m(&config.f_d, &config.basis)?;
    let (b, b_method, b_se) = compute_b(
        &config.f_d,
        config.tau_prime,
        &config.basis,
        opts.b_budget,
        config.seed ^ 0xB0,
    )?;
    let (c_mc, c_mc_se) =
        compute_c_monte_carlo(&config.recon_norm, n, opts.c_budget, config.seed ^ 0xC0)?;
    let (c_quad, c_quad_delta) = compute_c_quadrature(&config.recon_norm, n, opts.c_budget)?;
    let mut a_rows = Vec::new();
    for k in 1..=n {
        let est = crate::geometry::estimate_a_k(
            k,
            config.tau_prime,
            &config.f,
            &config.f_d,
            &config.basis,
            &config.tau_ladder,
            &opts.solver,
        )?;
        let (d_k, d_prime_k) = compute_d_k(est.estimate, b, c_quad, n, k)?;
        a_rows.push(serde_json::json!({
            "k": k,
            "a_k": est.estimate,
            "d_k": d_k,
            "d_prime_k": d_prime_k,
            "rungs": est.rungs,
        }));
    }
    manifest.finish();
    let payload = serde_json::json!({
        "manifest": manifest,
        "m": m,
        "b": b,
        "b_method": b_method,
        "b_se": b_se,
        "c_monte_carlo": c_mc,
        "c_mc_se": c_mc_se,
        "c_quadrature": c_quad,
        "c_quad_delta": c_quad_delta,
        "per_k": a_rows,
    });
    ensure_out_dir(&global.out_dir)?;
    report::write_string(
        &global.out_dir.join("constants.json"),
        &serde_json::to_string_pretty(&payload)?,
    )?;
    println!("M = {m}");
    println!("B = {b} ({b_method})");
    println!("C = {c_mc} +- {c_mc_se} (monte carlo), {c_quad} (quadrature, delta {c_quad_delta})");
    for row in &a_rows {
        println!(
            "K = {}: A_K = {}, D_K = {}, D'_K = {}",
            row["k"], row["a_k"], row["d_k"], row["d_prime_k"]
        );
    }
    println!("wrote constants.json to {}", global.out_dir.display());
    Ok(())
}

fn cmd_fit(report_path: &Path) -> Result<()> {
    let text = read_file(report_path)?;
    let report: ScalingReport =
        serde_json::from_str(&text).map_err(|e| Error::config(format!("report: {e}")))?;
    let refit = fit_exponents(&report);
    let mut display = report.clone();
    display.fits = refit;
    print!("{}", report::fit_table(&display));
    Ok(())
}
