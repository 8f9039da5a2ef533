//! instab: config-driven runner for the instability laboratory.
//!
//! Subcommands mirror the pipeline: `eig` and `steady` inspect the
//! stationary data, `evolve` integrates a scenario and certifies its
//! clauses, `verify` replays a finished run directory, `batch` sweeps one
//! config parameter across worker threads, and `dichotomy` tabulates the
//! supercritical stability dichotomy. Exit code 0 means every requested
//! clause passed; 2 means a hypothesis or clause verdict failed; 1 means
//! an operational error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use instab_cli::runner::{self, CliError};
use instab_cli::{parse_config, ValidatedConfig};

#[derive(Parser)]
#[command(name = "instab", version, about = "Instability laboratory scenario runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Assemble the linearized operator and report the principal eigenpair.
    Eig {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's output.directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Multiplies the eigensolver tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Build the steady state and report its discrete residual.
    Steady {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the scenario and certify the requested clauses.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Multiplies the eigensolver tolerance and the certification
        /// tolerances.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Recompute the verdicts of a finished run directory from its
    /// artifacts and compare them to the recorded ones.
    Verify {
        dir: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Run a one-parameter sweep defined by the config's [sweep] table.
    Batch {
        #[arg(long)]
        config: PathBuf,
        /// Root directory for the per-run subdirectories; defaults to the
        /// config's output.directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Tabulate the supercritical instability dichotomy as CSV.
    Dichotomy {
        #[arg(long, default_value_t = 11)]
        n_lo: usize,
        #[arg(long, default_value_t = 25)]
        n_hi: usize,
        /// Exponent samples per dimension.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(config: &Path) -> Result<(ValidatedConfig, PathBuf), CliError> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| CliError::Schema(format!("{}: {e}", config.display())))?;
    let cfg = parse_config(&text)?;
    let base = config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, base))
}

fn out_dir(cfg: &ValidatedConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from(&cfg.out_dir))
}

fn fmt_margins(v: &instab_core::io::Verdict) -> String {
    let mut parts: Vec<String> = v
        .margins
        .iter()
        .map(|(k, x)| format!("{k} = {x:.3e}"))
        .collect();
    parts.extend(v.rates.iter().map(|(k, x)| format!("{k} = {x:.4}")));
    parts.join(", ")
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    match cli.cmd {
        Cmd::Eig {
            config,
            out,
            tol_scale,
        } => {
            let (cfg, base) = load(&config)?;
            let dir = out_dir(&cfg, out);
            let s = runner::eig_command(&cfg, &base, &dir, tol_scale)?;
            println!(
                "lambda_1 = {}, sigma^2 = {}, residual = {:.3e}, iterations = {}",
                s.lambda1, s.sigma_sq, s.residual, s.iterations
            );
            println!("wrote {}", s.csv_path.display());
            Ok(true)
        }
        Cmd::Steady { config, out } => {
            let (cfg, base) = load(&config)?;
            let dir = out_dir(&cfg, out);
            let s = runner::steady_command(&cfg, &base, &dir)?;
            println!(
                "residual_max = {:.3e} over {} nodes, boundary value = {:.3e}",
                s.residual_max, s.nodes_checked, s.boundary_value
            );
            println!("wrote {}", s.csv_path.display());
            Ok(true)
        }
        Cmd::Evolve {
            config,
            out,
            tol_scale,
        } => {
            let (cfg, base) = load(&config)?;
            let dir = out_dir(&cfg, out);
            let s = runner::run(&cfg, &base, &dir, tol_scale)?;
            let tail = match s.blowup_time {
                Some(t) => format!("{} at t = {t:.6}", s.status),
                None => s.status.clone(),
            };
            println!("scenario {}: {tail}", s.scenario);
            for v in &s.verdicts {
                let mark = if v.pass { "PASS" } else { "FAIL" };
                println!("[{mark}] {}: {}", v.theorem_clause, fmt_margins(v));
            }
            println!("artifacts in {}", s.out_dir.display());
            Ok(s.all_pass)
        }
        Cmd::Verify { dir, tol_scale } => {
            let report = runner::verify(&dir, tol_scale)?;
            println!("{}", report.json);
            for m in &report.mismatches {
                eprintln!("mismatch: {m}");
            }
            Ok(report.matched && report.recorded_pass)
        }
        Cmd::Batch {
            config,
            out,
            workers,
            tol_scale,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Schema(format!("{}: {e}", config.display())))?;
            let base = config
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("."));
            let root: toml::Value =
                toml::from_str(&text).map_err(|e| CliError::Schema(e.to_string()))?;
            let out_root = out.unwrap_or_else(|| {
                root.get("output")
                    .and_then(|o| o.get("directory"))
                    .and_then(|d| d.as_str())
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("runs/sweep"))
            });
            let outcome = runner::batch(&text, &base, &out_root, workers, tol_scale)?;
            for e in &outcome.entries {
                println!(
                    "run_{:03} value = {}: {} ({}/{} clauses)",
                    e.index, e.value, e.status, e.clauses_passed, e.clauses_total
                );
            }
            println!("summary in {}", outcome.summary_path.display());
            Ok(outcome.all_pass)
        }
        Cmd::Dichotomy {
            n_lo,
            n_hi,
            samples,
            out,
        } => {
            let rows = runner::dichotomy(n_lo, n_hi, samples, &out)?;
            println!("wrote {rows} rows to {}", out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
