use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hcs_core::experiment::{
    run_experiment, summarize_run_dir, write_outputs, ExperimentBackend, ExperimentConfig, EPOCHS_CSV,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "hcs", version, about = "Run and summarize the drift-feedback experiment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Analytic,
    Sampled,
    Reference,
}

impl From<BackendArg> for ExperimentBackend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Analytic => ExperimentBackend::Analytic,
            BackendArg::Sampled => ExperimentBackend::Sampled,
            BackendArg::Reference => ExperimentBackend::Reference,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment and write CSV, telemetry and resolved config.
    Run {
        /// JSON config; omitted fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "runs/latest")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long = "phi-max")]
        phi_max: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long = "b-max")]
        b_max: Option<f64>,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        /// Keep alpha fixed at its initial value.
        #[arg(long)]
        freeze_alpha: bool,
        /// Identifier used in the telemetry file name; defaults to `seed<seed>`.
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Recompute summary.csv for an existing run directory.
    Summarize { run_dir: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

fn config_error(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.to_string(),
    }
}

fn runtime_error(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        message: message.to_string(),
    }
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    config: Option<PathBuf>,
    seed: Option<u64>,
    epochs: Option<usize>,
    shots: Option<u64>,
    phi_max: Option<f64>,
    eps: Option<f64>,
    b_max: Option<f64>,
    backend: Option<BackendArg>,
    freeze_alpha: bool,
) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match config {
        Some(path) => {
            let text = fs::read_to_string(&path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = seed {
        cfg.seed = v;
    }
    if let Some(v) = epochs {
        cfg.epochs = v;
    }
    if let Some(v) = shots {
        cfg.shots = v;
    }
    if let Some(v) = phi_max {
        cfg.drift.phi_max = v;
    }
    if let Some(v) = eps {
        cfg.drift.eps = v;
    }
    if let Some(v) = b_max {
        cfg.drift.b_max = v;
    }
    if let Some(v) = backend {
        cfg.backend = v.into();
    }
    if freeze_alpha {
        cfg.freeze_alpha = true;
    }
    cfg.validate().map_err(config_error)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            epochs,
            shots,
            phi_max,
            eps,
            b_max,
            backend,
            freeze_alpha,
            run_id,
        } => {
            let cfg = build_config(config, seed, epochs, shots, phi_max, eps, b_max, backend, freeze_alpha)?;
            let run = run_experiment(&cfg).map_err(runtime_error)?;
            let run_id = run_id.unwrap_or_else(|| format!("seed{}", cfg.seed));
            write_outputs(&out, &run, &run_id).map_err(runtime_error)?;
            let last = run.logs.last().expect("at least two epochs");
            println!(
                "{} epochs, final alpha {:.6}, final loss {:.6} -> {}",
                run.logs.len(),
                last.alpha,
                last.loss_total,
                out.join(EPOCHS_CSV).display()
            );
            Ok(())
        }
        Command::Summarize { run_dir } => {
            if !run_dir.is_dir() {
                return Err(config_error(format!("{} is not a directory", run_dir.display())));
            }
            let rows = summarize_run_dir(&run_dir).map_err(runtime_error)?;
            let proxy_mean = rows.iter().map(|r| r.drift_proxy).sum::<f64>() / rows.len() as f64;
            let last = rows.last().expect("nonempty summary");
            println!(
                "{} epochs, final mean state {:.6}, final mean future {:.6}, mean drift proxy {:.6}",
                rows.len(),
                last.mean_state,
                last.mean_future,
                proxy_mean
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
