use std::path::PathBuf;

use clap::{Parser, Subcommand};

use rctherm::commands::{estimate, evaluate, forward_sim, generate, report, Context};
use rctherm::config::RunConfig;

/// Grey-box RC thermal models: truth simulation, parameter estimation, and
/// cross-season robustness scoring.
#[derive(Parser)]
#[command(name = "rctherm", version, about)]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true, env = "RCTHERM_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory (overrides the config file).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Root seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Concurrent parameter sets in `evaluate` (overrides the config file).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the weather table and one year-long truth trace per setpoint.
    Generate {
        /// Comma-separated setpoints (18, 22, 26); default: all configured.
        #[arg(long, value_delimiter = ',')]
        setpoints: Vec<String>,
    },
    /// Fit reduced-order parameter sets on their training windows.
    Estimate {
        /// Comma-separated methods (NLS, BE, MLE); default: configured set.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Comma-separated orders (SM1, SM2); default: configured set.
        #[arg(long, value_delimiter = ',')]
        orders: Vec<String>,
        /// Comma-separated training seasons; default: configured set.
        #[arg(long, value_delimiter = ',')]
        seasons: Vec<String>,
    },
    /// Forward-simulate one fit document over a test window.
    ForwardSim {
        /// Fit file written by `estimate`/`evaluate`.
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        test_season: String,
        #[arg(long)]
        setpoint: String,
        /// Window length in days.
        #[arg(long, default_value_t = 30)]
        days: u32,
        /// Assert the fit's model order (SM1/SM2).
        #[arg(long)]
        order: Option<String>,
    },
    /// Run the full fit × scenario robustness matrix.
    Evaluate,
    /// Render `report.md` from an evaluated matrix.
    Report,
}

fn main() {
    let cli = Cli::parse();
    let exit = match dispatch(&cli) {
        Ok(completion) => completion.exit_code(),
        Err(error) => {
            eprintln!("error: {error}");
            2
        }
    };
    std::process::exit(exit);
}

fn dispatch(cli: &Cli) -> rctherm::CliResult<rctherm::Completion> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let ctx = Context::new(config, cli.out_dir.clone(), cli.seed, cli.jobs)?;
    match &cli.command {
        Command::Generate { setpoints } => generate::run(
            &ctx,
            &generate::GenerateArgs {
                setpoints: setpoints.clone(),
            },
        ),
        Command::Estimate {
            methods,
            orders,
            seasons,
        } => estimate::run(
            &ctx,
            &estimate::EstimateArgs {
                methods: methods.clone(),
                orders: orders.clone(),
                seasons: seasons.clone(),
            },
        ),
        Command::ForwardSim {
            result,
            test_season,
            setpoint,
            days,
            order,
        } => forward_sim::run(
            &ctx,
            &forward_sim::ForwardSimArgs {
                result: result.clone(),
                test_season: test_season.clone(),
                setpoint: setpoint.clone(),
                days: *days,
                order: order.clone(),
            },
        ),
        Command::Evaluate => evaluate::run(&ctx),
        Command::Report => report::run(&ctx),
    }
}
