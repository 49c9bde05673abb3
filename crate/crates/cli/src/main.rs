// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nvdyn_cli::config::{OutputFormat, RunConfig};
use nvdyn_cli::oracle::{cce_vs_exact, FULL_ORDER_TOL, ORDER2_RMS_TOL};
use nvdyn_cli::output::{write_json, write_run, write_text};
use nvdyn_cli::pipeline::execute;
use nvdyn_cli::sweep::{sweep, sweep_csv};
use nvdyn_cli::CliError;

#[derive(Parser)]
#[command(name = "nvdyn", version, about = "Entanglement dynamics of an NV electron–nuclear pair in a ¹³C bath")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `bath.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.path`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trajectory, report and states.
    Run(Common),
    /// Repeat a run over values of one numeric field.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted field path, e.g. `sequence.n_pulses`.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Check a configuration and print it with defaults filled in.
    Validate(Common),
    /// Compare the cluster expansion with exact evolution on small baths.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Number of seeded baths.
        #[arg(long, default_value_t = 20)]
        baths: u64,
    },
}

fn load(c: &Common) -> Result<RunConfig, CliError> {
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.bath.seed = s;
    }
    if let Some(o) = &c.output {
        cfg.output.path = o.clone();
    }
    if let Some(f) = c.format {
        cfg.output.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(c) => {
            let cfg = load(&c)?;
            let out = execute(&cfg)?;
            let files = write_run(&cfg.output.path, &cfg, &out)?;
            let r = &out.report;
            println!(
                "I = {:.6}  total variation = {:.6}  ΔE = {:.6}  revivals = {}",
                r.measure,
                r.total_variation,
                r.delta_e,
                r.revivals.len()
            );
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep { common, axis, values } => {
            let cfg = load(&common)?;
            let rows = sweep(&cfg, &axis, &values)?;
            let dir = &cfg.output.path;
            let path = match cfg.output.format {
                OutputFormat::Csv => {
                    let p = dir.join("sweep.csv");
                    write_text(&p, &sweep_csv(&axis, &rows))?;
                    p
                }
                OutputFormat::Json => {
                    let p = dir.join("sweep.json");
                    write_json(&p, &serde_json::json!({ "axis": axis, "rows": rows }))?;
                    p
                }
            };
            print!("{}", sweep_csv(&axis, &rows));
            println!("wrote {}", path.display());
        }
        Command::Validate(c) => {
            let cfg = load(&c)?;
            print!("{}", cfg.to_toml());
        }
        Command::Oracle { common, baths } => {
            let cfg = load(&common)?;
            let checks = cce_vs_exact(&cfg.system, baths).map_err(|e| CliError::Numerical(e.to_string()))?;
            let mut failed = 0;
            for c in &checks {
                let ok = c.passed();
                failed += usize::from(!ok);
                println!(
                    "{} seed={} seq={} spins={} full_order_max_err={:.2e} (≤ {FULL_ORDER_TOL:.0e}) order2_rms={:.2e} (≤ {ORDER2_RMS_TOL})",
                    if ok { "PASS" } else { "FAIL" },
                    c.seed,
                    c.sequence,
                    c.spins,
                    c.full_order_max_error,
                    c.order2_rms
                );
            }
            if failed > 0 {
                return Err(CliError::Numerical(format!("{failed} oracle checks failed")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nvdyn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
