use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lorhol::cli::{self, CliError, Command, Config};

#[derive(Parser)]
#[command(name = "lorhol", version, about = "Walker-coordinate Lorentzian metrics: curvature, holonomy, structures, geodesics")]
struct Args {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomized step (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for report.json and trajectory CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate Walker structure and Lorentzian signature on the probe grid.
    Check,
    /// Sample and classify the holonomy algebra.
    Holonomy,
    /// Integrate geodesics and write one CSV per trajectory.
    Geodesic,
    /// Run the configured structure checks.
    Structure,
    /// Run the completeness probe.
    Complete,
    /// Check and classify a built-in example.
    Demo {
        /// flat, toric-ppwave, toric-prwave, corollary, footnote or example52
        name: String,
    },
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let (command, mut cfg) = match &args.command {
        Cmd::Demo { name } => {
            let cfg = match &args.config {
                Some(p) => Config::load(p)?,
                None => Config::demo(name),
            };
            (Command::Demo, Config { metric: cli::MetricConfig { kind: name.clone(), ..cfg.metric.clone() }, ..cfg })
        }
        other => {
            let path = args.config.as_ref().ok_or_else(|| CliError::config("--config is required"))?;
            let cmd = match other {
                Cmd::Check => Command::Check,
                Cmd::Holonomy => Command::Holonomy,
                Cmd::Geodesic => Command::Geodesic,
                Cmd::Structure => Command::Structure,
                Cmd::Complete => Command::Complete,
                Cmd::Demo { .. } => unreachable!(),
            };
            (cmd, Config::load(path)?)
        }
    };
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    cfg.seed = Some(seed);
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::config(format!("{}: {e}", dir.display())))?;
    }
    let report = cli::run(command, &cfg, seed, args.out.as_deref())?;
    let text = matches!(args.format, Format::Text);
    print!("{}", if text { report.text() } else { report.json() + "\n" });
    if let Some(dir) = &args.out {
        cli::write_report(dir, &report, text)?;
    }
    Ok(report.code)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("lorhol: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
