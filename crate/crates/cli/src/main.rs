use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use raqst::simulator::ProtocolKind;
use raqst_cli::{execute, parse_config, Experiment, Overrides};

#[derive(Parser)]
#[command(name = "raqst", version, about = "Monte Carlo studies of adaptive two-qubit state tomography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config file.
    Run(CommonArgs),
    /// Mean infidelity versus copy budget N.
    SweepN(CommonArgs),
    /// Mean infidelity versus purity of Werner states.
    SweepPurity(CommonArgs),
    /// Improvement index over many random states.
    Histogram(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated protocol list, e.g. cube,mub,raqst1.
    #[arg(long, value_delimiter = ',')]
    protocols: Option<Vec<ProtocolKind>>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (experiment, args) = match cli.command {
        Command::Run(a) => (None, a),
        Command::SweepN(a) => (Some(Experiment::SweepN), a),
        Command::SweepPurity(a) => (Some(Experiment::SweepPurity), a),
        Command::Histogram(a) => (Some(Experiment::Histogram), a),
    };
    if experiment.is_none() && args.config.is_none() {
        eprintln!("error: `run` needs --config");
        return ExitCode::from(1);
    }
    let overrides = Overrides {
        experiment,
        seed: args.seed,
        reps: args.reps,
        out_dir: args.out,
        workers: args.workers,
        protocols: args.protocols,
    };
    let result = parse_config(args.config.as_deref(), &overrides).and_then(|cfg| execute(&cfg));
    match result {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
