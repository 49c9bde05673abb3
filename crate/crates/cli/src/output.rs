// SPDX-License-Identifier: Apache-2.0

//! Output files. Every file is written to a temporary sibling and renamed
//! into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use nvdyn::linops::DensityMatrix;
use nvdyn::tomography::BootstrapReport;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{OutputFormat, RunConfig};
use crate::pipeline::RunOutcome;
use crate::CliError;

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io(path, e))?;
    tmp.write_all(bytes).map_err(|e| io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io(path, e))?;
    tmp.persist(path).map_err(|e| io(path, e.error))?;
    Ok(())
}

fn json_bytes(value: &impl Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

/// Row-major `[re, im]` pairs.
pub fn matrix_json(rho: &DensityMatrix) -> Value {
    let d = rho.dim();
    let entries: Vec<[f64; 2]> = (0..d * d)
        .map(|k| {
            let z = rho.get(k / d, k % d);
            [z.re, z.im]
        })
        .collect();
    json!({
        "space": rho.space().subsystems().iter().map(|(n, d)| json!([n, d])).collect::<Vec<_>>(),
        "dim": d,
        "entries": entries,
    })
}

pub fn trajectory_csv(outcome: &RunOutcome) -> String {
    let t = &outcome.trajectory;
    let mut s = String::from("time_s,concurrence,coherence_abs");
    if t.concurrence_sigma.is_some() {
        s.push_str(",concurrence_sigma");
    }
    s.push('\n');
    for k in 0..t.times.len() {
        s.push_str(&format!("{:e},{},{}", t.times[k], t.concurrence[k], t.coherence_abs[k]));
        if let Some(sig) = &t.concurrence_sigma {
            s.push_str(&format!(",{}", sig[k]));
        }
        s.push('\n');
    }
    s
}

pub fn report_json(cfg: &RunConfig, outcome: &RunOutcome) -> Value {
    json!({
        "non_markovianity": outcome.report,
        "max_revival": outcome.report.max_revival(),
        "preparation": outcome.preparation,
        "diagnostics": outcome.diagnostics,
        "effective_config": cfg.to_toml(),
    })
}

fn bootstrap_json(b: &BootstrapReport) -> Value {
    json!({
        "concurrence_mean": b.concurrence_mean,
        "concurrence_sigma": b.concurrence_sigma,
        "sigma_re": b.sigma_re,
        "sigma_im": b.sigma_im,
        "n_resamples": b.n_resamples,
    })
}

pub fn states_json(outcome: &RunOutcome) -> Value {
    let t = &outcome.trajectory;
    let simulated: Vec<Value> = outcome
        .states
        .iter()
        .zip(&t.times)
        .map(|(r, &time)| json!({ "time_s": time, "rho": matrix_json(r) }))
        .collect();
    let mut out = json!({ "states": simulated });
    if let Some(tomo) = &outcome.tomography {
        let rec: Vec<Value> = tomo
            .reconstructed
            .iter()
            .zip(&tomo.concurrence)
            .zip(&tomo.bootstrap)
            .zip(&t.times)
            .map(|(((r, c), b), &time)| {
                json!({ "time_s": time, "rho": matrix_json(r), "concurrence": c, "bootstrap": bootstrap_json(b) })
            })
            .collect();
        out["reconstructed"] = Value::Array(rec);
    }
    out
}

/// Writes trajectory, report and states into `dir`; returns the paths written.
pub fn write_run(dir: &Path, cfg: &RunConfig, outcome: &RunOutcome) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let traj = match cfg.output.format {
        OutputFormat::Csv => (dir.join("trajectory.csv"), trajectory_csv(outcome).into_bytes()),
        OutputFormat::Json => (dir.join("trajectory.json"), json_bytes(&outcome.trajectory)),
    };
    let files = vec![
        traj,
        (dir.join("report.json"), json_bytes(&report_json(cfg, outcome))),
        (dir.join("states.json"), json_bytes(&states_json(outcome))),
    ];
    for (path, bytes) in &files {
        write_atomic(path, bytes)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    write_atomic(path, &json_bytes(value))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    write_atomic(path, text.as_bytes())
}
