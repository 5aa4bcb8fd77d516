use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wetsim_cli::config::RunConfig;
use wetsim_cli::{execute, validate, CliError, Command};

#[derive(Parser)]
#[command(name = "wetsim", version, about = "Multi-antenna wireless energy transfer: analytic laws and Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Mean and variance per strategy, analytic and simulated
    Stats(RunArgs),
    /// Density of the harvested energy on a grid
    Pdf(RunArgs),
    /// Distribution function of the harvested energy on a grid
    Cdf(RunArgs),
    /// Energy outage against a threshold sweep
    Outage(RunArgs),
    /// Average harvested energy against the link gain, for three harvester models
    AvgHarvest(RunArgs),
    /// Disk deployment with several users
    Multiuser(RunArgs),
    /// Run the built-in consistency checks
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file
    config: PathBuf,
    /// Write CSV here instead of stdout
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Sample count for the active command's section
    #[arg(long)]
    samples: Option<usize>,
}

fn apply_overrides(cmd: Command, cfg: &mut RunConfig, a: &RunArgs) {
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(w) = a.workers {
        cfg.workers = Some(w);
    }
    if let Some(n) = a.samples {
        match cmd {
            Command::Stats => cfg.stats.iter_mut().for_each(|s| s.samples = n),
            Command::Pdf => cfg.pdf.iter_mut().for_each(|s| s.samples = n),
            Command::Cdf => cfg.cdf.iter_mut().for_each(|s| s.samples = n),
            Command::Outage => cfg.outage.iter_mut().for_each(|s| s.samples = n),
            Command::AvgHarvest => cfg.avg_harvest.iter_mut().for_each(|s| s.samples = n),
            Command::Multiuser => cfg.multiuser.iter_mut().for_each(|s| s.placements = n),
            Command::Validate => {
                let mut v = cfg.validate.clone().unwrap_or_default();
                v.mc_samples = n;
                v.ks_samples = n;
                cfg.validate = Some(v);
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (cmd, args) = match cli.command {
        Cmd::Stats(a) => (Command::Stats, a),
        Cmd::Pdf(a) => (Command::Pdf, a),
        Cmd::Cdf(a) => (Command::Cdf, a),
        Cmd::Outage(a) => (Command::Outage, a),
        Cmd::AvgHarvest(a) => (Command::AvgHarvest, a),
        Cmd::Multiuser(a) => (Command::Multiuser, a),
        Cmd::Validate(a) => (Command::Validate, a),
    };
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    apply_overrides(cmd, &mut cfg, &args);
    if cfg.workers == Some(0) {
        return Err(CliError::config("workers", "must be at least 1"));
    }
    let csv = execute(cmd, &cfg)?;
    let body = csv.render();
    match &args.output {
        Some(p) => std::fs::write(p, body)?,
        None => print!("{body}"),
    }
    if cmd == Command::Validate {
        let failed = validate::failures(&csv);
        if !failed.is_empty() {
            return Err(CliError::ValidationFailed(failed.join(", ")));
        }
        eprintln!("all {} checks passed", csv.rows.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wetsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
