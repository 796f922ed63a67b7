//! File-level tests of the command-line interface, run in-process through
//! `cli::run`.

use quantcell::scaling::ScalingReport;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};

static DIR_COUNTER: AtomicU64 = AtomicU64::new(0);

fn temp_dir(tag: &str) -> PathBuf {
    let id = DIR_COUNTER.fetch_add(1, Ordering::SeqCst);
    let dir = std::env::temp_dir().join(format!(
        "quantcell-cli-{}-{tag}-{id}",
        std::process::id()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> i32 {
    quantcell::cli::run(
        std::iter::once("quantcell".to_string()).chain(args.iter().map(|s| s.to_string())),
    )
}

fn small_config(dir: &std::path::Path, samples: u64) -> PathBuf {
    let path = dir.join("config.json");
    let config = format!(
        r#"{{
  "basis": {{"dim": 2}},
  "f": {{"kind": "sep-quad", "weights": [1.0, 1.0]}},
  "f_d": {{"kind": "coord-sup"}},
  "recon_norm": {{"kind": "p-norm", "p": 1.0}},
  "tau_prime": 1.0,
  "tau_ladder": [0.25, 0.125, 0.0625, 0.03125],
  "samples_per_tau": {samples},
  "seed": 42
}}"#
    );
    std::fs::write(&path, config).unwrap();
    path
}

#[test]
fn encode_decode_roundtrip_through_files() {
    let dir = temp_dir("codec");
    let input = dir.join("u.json");
    let code_path = dir.join("code.json");
    let decoded_path = dir.join("decoded.json");
    std::fs::write(&input, "[0.5, 0.1]").unwrap();

    let norm = r#"{"kind":"sep-quad","weights":[1,1]}"#;
    assert_eq!(
        run(&[
            "encode",
            "--input",
            input.to_str().unwrap(),
            "--tau",
            "0.25",
            "--norm",
            norm,
            "--out",
            code_path.to_str().unwrap(),
        ]),
        0
    );
    let code_text = std::fs::read_to_string(&code_path).unwrap();
    assert_eq!(code_text, r#"{"tau":0.25,"n":2,"entries":[[1,0.375]]}"#);

    assert_eq!(
        run(&[
            "decode",
            "--code",
            code_path.to_str().unwrap(),
            "--norm",
            norm,
            "--out",
            decoded_path.to_str().unwrap(),
        ]),
        0
    );
    let decoded: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&decoded_path).unwrap()).unwrap();
    assert_eq!(decoded["k"], serde_json::json!([2, 0]));
    assert_eq!(decoded["reconstruction"], serde_json::json!([0.5, 0.0]));
}

#[test]
fn experiment_emits_rederivable_files() {
    let dir = temp_dir("experiment");
    let config = small_config(&dir, 5_000);
    let out_dir = dir.join("out");
    assert_eq!(
        run(&[
            "experiment",
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]),
        0
    );
    let report: ScalingReport =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    // every CSV value is re-derivable from report.json
    let scaling_csv = std::fs::read_to_string(out_dir.join("scaling.csv")).unwrap();
    assert_eq!(scaling_csv, quantcell::report::scaling_csv(&report));
    let counts_csv = std::fs::read_to_string(out_dir.join("counts.csv")).unwrap();
    assert_eq!(counts_csv, quantcell::report::counts_csv(&report));
    assert!(report.manifest.is_some());
    assert!(scaling_csv.starts_with("# manifest:"));
    assert!(counts_csv.starts_with("# manifest:"));
}

#[test]
fn experiment_is_idempotent_for_fixed_seed() {
    let dir = temp_dir("idempotent");
    let config = small_config(&dir, 2_000);
    let out1 = dir.join("out1");
    let out2 = dir.join("out2");
    for out in [&out1, &out2] {
        assert_eq!(
            run(&[
                "experiment",
                "--config",
                config.to_str().unwrap(),
                "--out-dir",
                out.to_str().unwrap(),
            ]),
            0
        );
    }
    let mut r1: ScalingReport =
        serde_json::from_str(&std::fs::read_to_string(out1.join("report.json")).unwrap()).unwrap();
    let mut r2: ScalingReport =
        serde_json::from_str(&std::fs::read_to_string(out2.join("report.json")).unwrap()).unwrap();
    // identical numeric payload modulo the manifest timestamps
    r1.manifest = None;
    r2.manifest = None;
    assert_eq!(
        serde_json::to_string(&r1).unwrap(),
        serde_json::to_string(&r2).unwrap()
    );
}

#[test]
fn seed_override_changes_the_payload() {
    let dir = temp_dir("seed");
    let config = small_config(&dir, 2_000);
    let out1 = dir.join("out1");
    let out2 = dir.join("out2");
    assert_eq!(
        run(&[
            "experiment",
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            out1.to_str().unwrap(),
        ]),
        0
    );
    assert_eq!(
        run(&[
            "experiment",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "7",
            "--out-dir",
            out2.to_str().unwrap(),
        ]),
        0
    );
    let r1: ScalingReport =
        serde_json::from_str(&std::fs::read_to_string(out1.join("report.json")).unwrap()).unwrap();
    let r2: ScalingReport =
        serde_json::from_str(&std::fs::read_to_string(out2.join("report.json")).unwrap()).unwrap();
    assert_eq!(r2.config.seed, 7);
    assert_ne!(
        serde_json::to_string(&r1.rows).unwrap(),
        serde_json::to_string(&r2.rows).unwrap()
    );
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = temp_dir("exits");
    // 1: unparsable config
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(run(&["experiment", "--config", bad.to_str().unwrap()]), 1);
    // 1: config validation naming the key
    let invalid = dir.join("invalid.json");
    std::fs::write(
        &invalid,
        r#"{"basis":{"dim":2},"f":{"kind":"sep-quad","weights":[1,1]},
           "f_d":{"kind":"coord-sup"},"recon_norm":{"kind":"p-norm","p":1.0},
           "tau_prime":1.0,"tau_ladder":[],"samples_per_tau":100,"seed":1}"#,
    )
    .unwrap();
    assert_eq!(
        run(&["experiment", "--config", invalid.to_str().unwrap()]),
        1
    );
    // 2: hypothesis violation
    assert_eq!(run(&["check-norm", "--spec", r#"{"kind":"coord-sup"}"#]), 2);
    // 3: enumeration budget
    let tiny_tau = dir.join("tiny.json");
    std::fs::write(
        &tiny_tau,
        r#"{"basis":{"dim":2},"f":{"kind":"sep-quad","weights":[1,1]},
           "f_d":{"kind":"coord-sup"},"recon_norm":{"kind":"p-norm","p":1.0},
           "tau_prime":1.0,"tau_ladder":[0.00001],"samples_per_tau":100,"seed":1}"#,
    )
    .unwrap();
    let out = dir.join("out");
    assert_eq!(
        run(&[
            "count-grid",
            "--config",
            tiny_tau.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ]),
        3
    );
    // 0: passing norm check
    assert_eq!(run(&["check-norm", "--spec", r#"{"kind":"euclidean"}"#]), 0);
    // 1: unknown flag
    assert_eq!(run(&["experiment", "--nope"]), 1);
}

#[test]
fn count_grid_and_constants_write_outputs() {
    let dir = temp_dir("aux");
    let config = small_config(&dir, 100);
    let out = dir.join("out");
    assert_eq!(
        run(&[
            "count-grid",
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ]),
        0
    );
    let counts = std::fs::read_to_string(out.join("counts.csv")).unwrap();
    assert!(counts.contains("K,tau,count,scaled,count_lo,count_hi,degenerate_count"));
    // SETUP-A at tau = 0.25: 16 single-face grid points
    assert!(counts.contains("1,0.25,16,4,"));
    assert_eq!(
        run(&[
            "constants",
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ]),
        0
    );
    let constants: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("constants.json")).unwrap())
            .unwrap();
    assert_eq!(constants["b"], serde_json::json!(4.0));
    assert_eq!(constants["m"], serde_json::json!(0.5));
}

#[test]
fn fit_subcommand_reads_a_report() {
    let dir = temp_dir("fit");
    let config = small_config(&dir, 20_000);
    let out = dir.join("out");
    assert_eq!(
        run(&[
            "experiment",
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ]),
        0
    );
    assert_eq!(
        run(&[
            "fit",
            "--report",
            out.join("report.json").to_str().unwrap(),
        ]),
        0
    );
}
