//! `fy`: command-line front end for the Faddeev and Yakubovsky toolkit.

mod commands;
mod config;
mod error;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::{Context, Hardcore3Args, SpectrumCheckArgs};
use config::{Format, RunConfig};
use error::CliError;
use report::{Header, Report};

#[derive(Debug, Parser)]
#[command(name = "fy", version, about = "Faddeev and Yakubovsky component equations on small lattices")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Suppress warnings on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    /// Write the main operator of the command as a dense text matrix.
    #[arg(long, global = true, value_name = "PATH")]
    dump_matrix: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the chains (two-cluster partition plus internal pair) of N particles.
    Chains {
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    /// Print the off-diagonal block pattern of the four-body operator.
    YakPattern,
    /// Check that the Faddeev operator spectrum contains σ(H) ∪ σ(H0) on random instances.
    SpectrumCheck {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        hermitian: bool,
    },
    /// Lowest levels of the configured model by dense diagonalization.
    Oracle {
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Solve the three-body component equations.
    Solve3,
    /// Solve the four-body component equations.
    Solve4,
    /// Three-body hard-core pencil, optionally swept over core radii.
    Hardcore3 {
        /// Core radius in sites; negative means none.
        #[arg(long, allow_hyphen_values = true)]
        core: Option<i64>,
        /// Comma-separated core radii.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        sweep: Option<Vec<i64>>,
        /// Constrain only the core surface instead of the whole core.
        #[arg(long)]
        surface_only: bool,
    },
    /// Evaluate the four-body hard-core boundary conditions on the restricted ground state.
    Hardcore4Check {
        #[arg(long, allow_hyphen_values = true)]
        core: Option<i64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Chains { .. } => "chains",
            Command::YakPattern => "yak-pattern",
            Command::SpectrumCheck { .. } => "spectrum-check",
            Command::Oracle { .. } => "oracle",
            Command::Solve3 => "solve3",
            Command::Solve4 => "solve4",
            Command::Hardcore3 { .. } => "hardcore3",
            Command::Hardcore4Check { .. } => "hardcore4-check",
        }
    }

    fn needs_model(&self) -> bool {
        !matches!(self, Command::Chains { .. } | Command::YakPattern | Command::SpectrumCheck { .. })
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.apply_env()?;
    if let Some(format) = cli.format {
        config.output.format = format;
    }
    if let Some(path) = &cli.output {
        config.output.path = Some(path.display().to_string());
    }
    if cli.command.needs_model() {
        if cli.config.is_none() {
            return Err(CliError::Config(format!("{} needs --config", cli.command.name())));
        }
        config.resolve_model()?;
    }
    Ok(config)
}

fn run(cli: &Cli, ctx: &Context) -> Result<Report, CliError> {
    let check = &ctx.config.check;
    match &cli.command {
        Command::Chains { n } => commands::chains(*n),
        Command::YakPattern => commands::yak_pattern(),
        Command::SpectrumCheck { n, dim, seeds, hermitian } => commands::spectrum_check(
            ctx,
            &SpectrumCheckArgs {
                n: n.unwrap_or(check.n),
                dim: dim.unwrap_or(check.dim),
                seeds: seeds.unwrap_or(check.seeds),
                hermitian: *hermitian || check.hermitian,
            },
        ),
        Command::Oracle { k } => commands::oracle(ctx, *k),
        Command::Solve3 => commands::solve3(ctx),
        Command::Solve4 => commands::solve4(ctx),
        Command::Hardcore3 { core, sweep, surface_only } => {
            let cores = match (sweep, core) {
                (Some(list), _) if !list.is_empty() => list.clone(),
                (_, Some(c)) => vec![*c],
                _ => vec![ctx.config.model.core_radius.unwrap_or(-1)],
            };
            commands::hardcore3(
                ctx,
                &Hardcore3Args {
                    cores,
                    surface_only: *surface_only,
                },
            )
        }
        Command::Hardcore4Check { core } => commands::hardcore4_check(ctx, *core),
    }
}

fn header(cli: &Cli, config: &RunConfig) -> Header {
    let mut value = serde_json::to_value(config).unwrap_or_default();
    value["seed"] = json!(cli.seed);
    value["args"] = json!(std::env::args().skip(1).collect::<Vec<_>>());
    Header {
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_string(),
        config: value.to_string(),
        config_value: value,
    }
}

fn emit(config: &RunConfig, text: &str) -> Result<(), CliError> {
    match &config.output.path {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_config(&cli).and_then(|config| {
        let ctx = Context {
            config,
            seed: cli.seed,
            quiet: cli.quiet,
            dump_matrix: cli.dump_matrix.clone(),
        };
        let report = run(&cli, &ctx)?;
        let text = report.render(ctx.config.output.format, &header(&cli, &ctx.config));
        emit(&ctx.config, &text)?;
        Ok(report.exit_code)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
