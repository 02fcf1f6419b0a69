use std::path::Path;
use std::process::{Command, Output};

use anyon_cli::output::{verify_manifest, RunManifest};
use serde_json::Value;

fn anyonsim(out: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_anyonsim"));
    cmd.args(&args[..1]).arg("--out").arg(out).args(&args[1..]);
    cmd.output().expect("spawn anyonsim")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap();
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            headers
                .iter()
                .zip(rec.unwrap().iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn meanfield_free_density_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = anyonsim(
        dir.path(),
        &["meanfield", "--grid.beta=0,1", "--estimator.scales=1"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("meanfield.csv"));
    let rho: Vec<f64> = rows.iter().map(|r| r["rho"].parse().unwrap()).collect();
    assert_eq!(rho[0], 0.5);
    assert!((rho[1] - 0.26894).abs() < 5e-6);
    assert!(verify_manifest(dir.path())
        .unwrap()
        .iter()
        .all(|(_, ok)| *ok));
}

#[test]
fn meanfield_continuum_row_has_small_residual() {
    let dir = tempfile::tempdir().unwrap();
    let o = anyonsim(
        dir.path(),
        &[
            "meanfield",
            "--model.potential=power-law",
            "--model.exponent=4",
            "--meanfield.mode=continuum",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("meanfield.csv"));
    assert!(!rows.is_empty());
    assert!(rows
        .iter()
        .all(|r| r["mode"] == "continuum" && r["residual"].parse::<f64>().unwrap() < 1e-12));
}

#[test]
fn configuration_errors_exit_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = anyonsim(
        dir.path(),
        &[
            "meanfield",
            "--model.potential=power-law",
            "--model.exponent=2",
            "--meanfield.mode=sublinear",
        ],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.exponent"));

    let o = anyonsim(
        dir.path(),
        &["sample", "--chain.sweeps=10", "--chain.burn_in=20"],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("burn_in"));

    let o = anyonsim(dir.path(), &["boson", "--boson.valuez=1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("boson.valuez"));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# free gas\n[model]\nside = 8\ncoupling = 2\n[grid]\nbeta = 1\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_anyonsim"))
        .args(["meanfield", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--model.coupling=1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m.parameters["model.coupling"], "1");
    assert_eq!(m.parameters["model.side"], "8");
}

#[test]
fn sampling_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "sample",
        "--seed",
        "11",
        "--model.side=6",
        "--model.potential=power-law",
        "--chain.sweeps=600",
        "--chain.burn_in=100",
        "--chain.chains=3",
    ];
    assert_eq!(code(&anyonsim(a.path(), &args)), 0);
    let mut threads = args.to_vec();
    threads.splice(1..1, ["--threads", "1"]);
    assert_eq!(code(&anyonsim(b.path(), &threads)), 0);
    assert_eq!(manifest(a.path()).outputs, manifest(b.path()).outputs);
}

#[test]
fn sample_reports_oracle_distance_on_tiny_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let o = anyonsim(
        dir.path(),
        &[
            "sample",
            "--model.side=2",
            "--oracle.check=true",
            "--chain.sweeps=50000",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(s["oracle"]["total_variation"].as_f64().unwrap() < 0.02);
}

#[test]
fn gamma_scan_free_gas_matches_parity_formula() {
    let dir = tempfile::tempdir().unwrap();
    let o = anyonsim(
        dir.path(),
        &[
            "gamma-scan",
            "--grid.sides=32",
            "--grid.beta=3",
            "--chain.sweeps=6000",
            "--chain.burn_in=200",
            "--estimator.scales=1,2,3",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let prof = read_csv(&dir.path().join("gamma_L32_beta3.csv"));
    let rho = 1.0 / (3f64.exp() + 1.0);
    let pi = 1.0 - rho;
    let s = -(pi * pi.ln() + rho * rho.ln());
    let analytic = 2.0 * (2f64.ln() - s);
    let g: f64 = prof[0]["gamma_hat"].parse().unwrap();
    let e: f64 = prof[0]["gamma_err"].parse().unwrap();
    assert!((g - analytic).abs() < 3.0 * e, "{g} ± {e} vs {analytic}");
    let summary = read_csv(&dir.path().join("gamma_scan.csv"));
    assert!(!summary[0]["lambda_status"].is_empty());
}

#[test]
fn gamma_scan_at_infinite_temperature_has_no_entropy_deficit() {
    let dir = tempfile::tempdir().unwrap();
    let o = anyonsim(
        dir.path(),
        &[
            "gamma-scan",
            "--grid.sides=16",
            "--grid.beta=0",
            "--chain.sweeps=3000",
            "--chain.burn_in=100",
            "--estimator.scales=3,4,5",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for row in read_csv(&dir.path().join("gamma_L16_beta0.csv")) {
        let g: f64 = row["gamma_hat"].parse().unwrap();
        assert!(g < 0.01, "l={} gamma={g}", row["l"]);
    }
    let s: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("gamma_L16_beta0.json")).unwrap())
            .unwrap();
    assert!(s["lambda_hat"].is_number() || s["not_crossed"].is_string());
}

#[test]
fn confinement_without_interaction_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let o = anyonsim(
        dir.path(),
        &[
            "confinement",
            "--confinement.amplitude=0",
            "--confinement.source=analytic",
            "--confinement.temperatures=0.5,1",
        ],
    );
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("confinement.json").exists());
    assert!(verify_manifest(dir.path())
        .unwrap()
        .iter()
        .all(|(_, ok)| *ok));
}

#[test]
fn confinement_analytic_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let o = anyonsim(
        dir.path(),
        &["confinement", "--confinement.source=analytic"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("confinement.json")).unwrap())
            .unwrap();
    assert!(r["outcome"]["relative_error"].as_f64().unwrap() < 0.1);
}

fn boson_phases(dir: &Path, extra: &[&str]) -> Vec<(f64, String)> {
    let mut args = vec!["boson"];
    args.extend_from_slice(extra);
    let o = anyonsim(dir, &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&std::fs::read(dir.join("boson.json")).unwrap()).unwrap();
    r["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            (
                e["value"].as_f64().unwrap(),
                e["phase"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

#[test]
fn boson_phase_map() {
    let dir = tempfile::tempdir().unwrap();
    let phases = boson_phases(dir.path(), &["--boson.values=1,2,4"]);
    let labels: Vec<&str> = phases.iter().map(|p| p.1.as_str()).collect();
    assert_eq!(labels, ["WeaklyTO", "Boundary", "StronglyTO"]);

    let phases = boson_phases(dir.path(), &["--boson.form=linear", "--boson.values=0.1,1"]);
    assert!(phases.iter().all(|p| p.1 == "StronglyTO"));
    let rows = read_csv(&dir.path().join("boson.csv"));
    assert!(rows.iter().all(|r| r["phase"] == "StronglyTO"));

    let phases = boson_phases(dir.path(), &["--boson.values=0"]);
    assert_eq!(phases[0].1, "Disordered");
    let rows = read_csv(&dir.path().join("boson.csv"));
    assert!(rows.iter().all(|r| r["rho"] == "0.5"));
}

#[test]
fn help_documents_units_and_exit_codes() {
    let o = Command::new(env!("CARGO_BIN_EXE_anyonsim"))
        .arg("--help")
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("k_B = 1") && text.contains("Exit codes"));
}
