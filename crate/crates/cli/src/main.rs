use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use clamp_risk::{execute, execute_all, CliError, OutputFormat, RunOptions, Verb};

/// Batch risk analysis for leveraged concentrated-liquidity positions.
#[derive(Parser)]
#[command(name = "clamp-risk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the position against the creation rules
    CheckCreate(CommonArgs),
    /// Evaluate the margin level over a price grid
    MarginCurve(CommonArgs),
    /// Compute liquidation price bounds for each configured threshold
    Bounds(CommonArgs),
    /// Solve for the largest liquidity safe over the configured interval
    MaxLiquidity(CommonArgs),
    /// Walk the position along the configured price path
    Simulate(CommonArgs),
    /// Audit resistance to spot-price manipulation
    AuditManipulation(CommonArgs),
    /// Run every analysis the scenario requests
    Run(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (JSON)
    #[arg(long)]
    scenario: PathBuf,
    /// Directory report files are written to
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Which report files to write; overrides the scenario's output.format
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Disable the protocol deleverage trigger during simulation, leaving
    /// deleveraging to the liquidators
    #[arg(long)]
    admin_failure: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Both,
}

impl From<FormatArg> for OutputFormat {
    fn from(arg: FormatArg) -> Self {
        match arg {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Both => OutputFormat::Both,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (verb, args) = match &cli.command {
        Command::CheckCreate(a) => (Some(Verb::CheckCreate), a),
        Command::MarginCurve(a) => (Some(Verb::MarginCurve), a),
        Command::Bounds(a) => (Some(Verb::Bounds), a),
        Command::MaxLiquidity(a) => (Some(Verb::MaxLiquidity), a),
        Command::Simulate(a) => (Some(Verb::Simulate), a),
        Command::AuditManipulation(a) => (Some(Verb::AuditManipulation), a),
        Command::Run(a) => (None, a),
    };
    match run(verb, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            err.exit_code()
        }
    }
}

fn run(verb: Option<Verb>, args: &CommonArgs) -> Result<(), CliError> {
    let scenario = clamp_risk::load(&args.scenario)?;
    let stem = args
        .scenario
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    let opts = RunOptions {
        out_dir: args.out.clone(),
        format: args.format.map(OutputFormat::from),
        admin_failure: args.admin_failure,
    };

    let written = match verb {
        Some(verb) => execute(verb, &scenario, &stem, &opts)?,
        None => execute_all(&scenario, &stem, &opts)?,
    };
    for path in &written {
        println!("wrote {}", path.display());
    }
    if written.is_empty() {
        println!("nothing to write");
    }
    Ok(())
}
