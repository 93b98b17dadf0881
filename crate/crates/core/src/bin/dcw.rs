use clap::{Parser, Subcommand};
use dcw_core::cli::{self, CaseConfig, CaseReport, CliError};
use dcw_core::homogeneous_bundle::Mode;
use rayon::prelude::*;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dcw", about = "Moduli of equivariant harmonic maps from the 2-sphere into Grassmannians")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more named case studies and emit JSON reports.
    Case {
        #[arg(required = true)]
        case_ids: Vec<String>,
        #[arg(long = "degree", allow_hyphen_values = true)]
        k: Option<i64>,
        #[arg(long = "level")]
        l: Option<usize>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long = "samples", default_value_t = 64)]
        n_samples: usize,
        #[arg(long, default_value_t = 1e-3)]
        fd_step: f64,
        /// Output file (single case) or directory (several cases).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_timestamp: bool,
        /// Run the listed cases concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Run the acceptance suite; exit status 0 iff every criterion passes.
    Accept {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        fd_step: f64,
    },
    /// Export a membership grid of the moduli body as CSV.
    Grid {
        #[arg(long, default_value = "quadric-deg2")]
        case: String,
        #[arg(long, default_value_t = 0.05)]
        resolution: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// List registered cases.
    List,
}

fn init_threads() {
    if let Some(n) = std::env::var("DCW_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn timestamp() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn emit(report: &CaseReport, out: Option<&PathBuf>, many: bool) -> Result<(), CliError> {
    let text = report.to_json();
    match out {
        None => print!("{text}"),
        Some(dir) if many => {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
            cli::write_atomic(&dir.join(format!("{}.json", report.case_id)), &text)?;
        }
        Some(path) => cli::write_atomic(path, &text)?,
    }
    Ok(())
}

fn run() -> Result<bool, CliError> {
    let args = Args::parse();
    init_threads();
    match args.command {
        Command::List => {
            print!("{}", cli::format_case_list());
            Ok(true)
        }
        Command::Accept { seed, fd_step } => {
            let summary = cli::run_acceptance(seed, fd_step);
            for line in summary.lines() {
                eprintln!("{line}");
            }
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(summary.passed)
        }
        Command::Grid { case, resolution, out } => {
            let cfg = CaseConfig::for_case(&case)?;
            let summary = cli::export_moduli_grid(&cfg, resolution, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(true)
        }
        Command::Case { case_ids, k, l, mode, seed, n_samples, fd_step, out, no_timestamp, parallel } => {
            let configs = case_ids
                .iter()
                .map(|id| {
                    let mut cfg = CaseConfig::for_case(id)?;
                    cfg.k = k.unwrap_or(cfg.k);
                    cfg.l = l.unwrap_or(cfg.l);
                    cfg.mode = mode.unwrap_or(cfg.mode);
                    cfg.seed = seed;
                    cfg.n_samples = n_samples;
                    cfg.fd_step = fd_step;
                    cfg.out_path = out.clone();
                    cfg.validate()?;
                    Ok(cfg)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let one = |cfg: &CaseConfig| {
                cli::run_case(cfg).map(|mut r| {
                    if !no_timestamp {
                        r.timestamp = Some(timestamp());
                    }
                    r
                })
            };
            let reports: Vec<CaseReport> = if parallel {
                configs.par_iter().map(one).collect::<Result<_, _>>()?
            } else {
                configs.iter().map(one).collect::<Result<_, _>>()?
            };
            let many = reports.len() > 1;
            for r in &reports {
                emit(r, out.as_ref(), many)?;
                for e in &r.errors {
                    eprintln!("error: {e}");
                }
            }
            Ok(reports.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("dcw: {e}");
            ExitCode::from(2)
        }
    }
}
