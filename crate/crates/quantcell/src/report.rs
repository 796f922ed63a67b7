//! Run manifests and bit-stable report emission.
//!
//! Every output file embeds the manifest: JSON reports carry it as a field,
//! CSV files as a leading `# manifest:` comment line. Floats are written in
//! Rust's shortest round-trip form, so every CSV value is re-derivable
//! bit-exactly from `report.json`.

use crate::error::{Error, Result};
use crate::scaling::{FitOutcome, ScalingReport};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

/// Provenance of a run, embedded in every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: String,
    /// SHA-256 of the effective config serialization.
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub tol: f64,
    pub eps_active_rel: f64,
    pub threads: usize,
}

impl RunManifest {
    pub fn new(command_line: String, config_json: &str, seed: u64) -> RunManifest {
        RunManifest {
            command_line,
            config_hash: hex::encode(Sha256::digest(config_json.as_bytes())),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: unix_now(),
            finished_unix: 0,
            tol: 1e-10,
            eps_active_rel: 1e-9,
            threads: 0,
        }
    }

    pub fn finish(&mut self) {
        self.finished_unix = unix_now();
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn manifest_comment(manifest: &Option<RunManifest>) -> String {
    match manifest {
        Some(m) => format!(
            "# manifest: {}\n",
            serde_json::to_string(m).unwrap_or_default()
        ),
        None => String::new(),
    }
}

pub fn write_string(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Pretty-printed report JSON.
pub fn report_json(report: &ScalingReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn write_report_json(path: &Path, report: &ScalingReport) -> Result<()> {
    write_string(path, &report_json(report)?)
}

/// The per-(tau, K) scaling table.
pub fn scaling_csv(report: &ScalingReport) -> String {
    let mut out = manifest_comment(&report.manifest);
    out.push_str(
        "tau,K,p_hat,se,E_hat,scaled_prob,A_K,B,C,D_K,Dprime_K,slope_tau,slope_E,ci_lo,ci_hi\n",
    );
    let b = report.constants.b;
    let c = report.constants.c_quadrature;
    for row in &report.rows {
        let a_k = report
            .constants
            .a_k
            .iter()
            .find(|a| a.k == row.k)
            .map(|a| a.estimate)
            .unwrap_or(f64::NAN);
        let (d_k, d_prime_k) = report
            .constants
            .d
            .iter()
            .find(|d| d.k == row.k)
            .map(|d| (d.d_k, d.d_prime_k))
            .unwrap_or((f64::NAN, f64::NAN));
        let fit = report.fits.iter().find_map(|f| match f {
            FitOutcome::Fitted(e) if e.k == row.k => Some(e),
            _ => None,
        });
        let (slope_tau, slope_e, ci_lo, ci_hi) = match fit {
            Some(f) => (
                f.slope_tau.slope,
                f.slope_e.slope,
                f.slope_tau.ci_lo,
                f.slope_tau.ci_hi,
            ),
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.tau,
            row.k,
            row.p_hat,
            row.se,
            row.e_hat,
            row.scaled_prob,
            a_k,
            b,
            c,
            d_k,
            d_prime_k,
            slope_tau,
            slope_e,
            ci_lo,
            ci_hi
        );
    }
    out
}

pub fn write_scaling_csv(path: &Path, report: &ScalingReport) -> Result<()> {
    write_string(path, &scaling_csv(report))
}

/// The grid-count table with the bracketing radii.
pub fn counts_csv(report: &ScalingReport) -> String {
    let mut out = manifest_comment(&report.manifest);
    out.push_str("K,tau,count,scaled,count_lo,count_hi,degenerate_count\n");
    for row in &report.rows {
        let tau = row.tau;
        let degenerate = report
            .taus
            .iter()
            .find(|t| t.tau == tau)
            .map(|t| t.degenerate_cells)
            .unwrap_or(0);
        let count_lo = if tau > 0.0 {
            (row.grid_scaled_lo / tau.powi(row.k as i32)).round() as u64
        } else {
            0
        };
        let count_hi = if tau > 0.0 {
            (row.grid_scaled_hi / tau.powi(row.k as i32)).round() as u64
        } else {
            0
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.k, tau, row.grid_count, row.grid_scaled, count_lo, count_hi, degenerate
        );
    }
    out
}

pub fn write_counts_csv(path: &Path, report: &ScalingReport) -> Result<()> {
    write_string(path, &counts_csv(report))
}

/// Human-oriented fit table, one line per K.
pub fn fit_table(report: &ScalingReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>3} {:>12} {:>18} {:>12} {:>18} {:>8} {:>14}",
        "K", "slope_tau", "ci_tau", "slope_E", "ci_E", "N-K", "(N-K)/(N+1)"
    );
    for fit in &report.fits {
        match fit {
            FitOutcome::Fitted(f) => {
                let _ = writeln!(
                    out,
                    "{:>3} {:>12.4} [{:>7.4},{:>7.4}] {:>12.4} [{:>7.4},{:>7.4}] {:>8.1} {:>14.4}",
                    f.k,
                    f.slope_tau.slope,
                    f.slope_tau.ci_lo,
                    f.slope_tau.ci_hi,
                    f.slope_e.slope,
                    f.slope_e.ci_lo,
                    f.slope_e.ci_hi,
                    f.n_minus_k,
                    f.paper_exponent
                );
            }
            FitOutcome::InsufficientData { k, reason } => {
                let _ = writeln!(out, "{k:>3} insufficient data: {reason}");
            }
        }
    }
    if let Some(e) = &report.e_fit {
        let _ = writeln!(
            out,
            "  E slope(log E vs log tau) = {:.4} [{:.4},{:.4}]",
            e.slope, e.ci_lo, e.ci_hi
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_hash_is_stable() {
        let m1 = RunManifest::new("quantcell experiment".into(), r#"{"seed":42}"#, 42);
        let m2 = RunManifest::new("quantcell experiment".into(), r#"{"seed":42}"#, 42);
        assert_eq!(m1.config_hash, m2.config_hash);
        let m3 = RunManifest::new("quantcell experiment".into(), r#"{"seed":43}"#, 43);
        assert_ne!(m1.config_hash, m3.config_hash);
    }

    #[test]
    fn float_formatting_roundtrips() {
        let v = 0.1f64 + 0.2f64;
        let s = format!("{v}");
        let back: f64 = s.parse().unwrap();
        assert_eq!(v.to_bits(), back.to_bits());
    }
}
