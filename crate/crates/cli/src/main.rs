use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use rlab_cli::{emit_report, load_record, run_experiment, Experiment, ExperimentConfig, RunRecord};

/// Rearrangement inequalities and stability certificates.
///
/// Exit status: 0 when no certificate is violated, 2 when some are, 1 on errors.
/// `RLAB_OUT` overrides the output root.
#[derive(Parser)]
#[command(name = "rlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random sweeps of the rearrangement inequalities (certify_sweep, corollary1_sweep).
    Certify {
        #[arg(long)]
        config: PathBuf,
    },
    /// 2D Euler experiments.
    Euler {
        #[command(subcommand)]
        which: EulerCommand,
    },
    /// Build a polytropic Vlasov-Poisson steady state and certify perturbations.
    Vp {
        #[arg(long)]
        config: PathBuf,
    },
    /// Regenerate the summary and CSVs of a finished run.
    Report { run_dir: PathBuf },
}

#[derive(Subcommand)]
enum EulerCommand {
    /// Perturbed shear flow on a periodic channel.
    Strip {
        #[arg(long)]
        config: PathBuf,
    },
    /// Radial steady state on the disc.
    Disc {
        #[arg(long)]
        config: PathBuf,
    },
    /// `ω₀ = F(ψ₀)` steady state on the disc.
    Domain {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(path: &Path, allowed: &[Experiment]) -> Result<RunRecord> {
    let cfg = ExperimentConfig::load(path)?;
    if !allowed.contains(&cfg.experiment) {
        let names: Vec<&str> = allowed.iter().map(|e| e.name()).collect();
        bail!("{} runs {}, but the config asks for {}", path.display(), names.join(" or "), cfg.experiment.name());
    }
    let record = run_experiment(&cfg)?;
    if !record.is_empty() {
        emit_report(&record)?;
    }
    Ok(record)
}

fn print_summary(r: &RunRecord) {
    let s = &r.summary;
    println!("experiment   {}", r.config.experiment.name());
    println!("run dir      {}", r.run_dir.display());
    println!("certificates {} (holds {}, violated {}, inconclusive {})", s.certificates, s.holds, s.violations, s.inconclusive);
    if let Some(m) = s.min_relative_slack {
        println!("min relative slack {m:.3e}");
    }
    for (k, v) in &r.diagnostics {
        println!("  {k} = {v:e}");
    }
    for (k, n) in &s.caveat_tally {
        println!("  caveat x{n}: {k}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Certify { config } => run(config, &[Experiment::CertifySweep, Experiment::Corollary1Sweep]),
        Command::Euler { which: EulerCommand::Strip { config } } => run(config, &[Experiment::EulerStripRun]),
        Command::Euler { which: EulerCommand::Disc { config } } => run(config, &[Experiment::EulerDiscCertify]),
        Command::Euler { which: EulerCommand::Domain { config } } => run(config, &[Experiment::EulerDomainCertify]),
        Command::Vp { config } => run(config, &[Experiment::VpBuildAndCertify]),
        Command::Report { run_dir } => load_record(run_dir).and_then(|r| emit_report(&r).map(|_| r)),
    };
    match result {
        Ok(r) => {
            print_summary(&r);
            if r.summary.violations > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
