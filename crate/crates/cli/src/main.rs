use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dfls::problems::StartPolicy;
use dfls_cli::{
    cmd_batch, cmd_list, cmd_run, cmd_verify, parse_seed_range, BatchConfig, CliError,
    ParamOverrides, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "dfls",
    version,
    about = "Derivative-free coordinate line search for bound-constrained problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a suite problem (or a batch over seeds) and write its trace.
    Run(Box<RunArgs>),
    /// Check a saved trace against the convergence and complexity bounds.
    Verify(VerifyArgs),
    /// List the built-in problems.
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Start {
    Center,
    Random,
    Corner,
}

#[derive(Args)]
struct RunArgs {
    /// Problem name; a comma-separated list is allowed with --seeds.
    #[arg(long, value_delimiter = ',', required = true)]
    problem: Vec<String>,
    /// Dimension; a comma-separated list is allowed with --seeds.
    #[arg(short = 'n', long = "dim", value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 0, conflicts_with = "seeds")]
    seed: u64,
    /// Batch mode over the half-open range A..B.
    #[arg(long, value_name = "A..B")]
    seeds: Option<String>,
    #[arg(long, value_enum, default_value = "center")]
    start: Start,
    /// Explicit starting point; overrides --start.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    initial_step: Option<f64>,
    #[arg(long)]
    stop_delta: Option<f64>,
    #[arg(long)]
    max_iterations: Option<u64>,
    #[arg(long)]
    max_evaluations: Option<u64>,
    /// Trace file for a single run.
    #[arg(long, conflicts_with = "seeds")]
    trace: Option<PathBuf>,
    /// Directory for per-session trace files in batch mode.
    #[arg(long, requires = "seeds")]
    trace_dir: Option<PathBuf>,
    /// CSV summary path in batch mode (stdout if omitted).
    #[arg(long, requires = "seeds")]
    summary: Option<PathBuf>,
    /// Criticality thresholds reported in the batch summary.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01")]
    eps: Vec<f64>,
    /// Record intermediate sweep points.
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Args)]
struct VerifyArgs {
    trace: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01")]
    eps: Vec<f64>,
    #[arg(long)]
    json: bool,
}

impl RunArgs {
    fn overrides(&self) -> ParamOverrides {
        ParamOverrides {
            theta: self.theta,
            delta: self.delta,
            gamma: self.gamma,
            c: self.c,
            initial_step: self.initial_step,
            stop_delta: self.stop_delta,
            max_iterations: self.max_iterations,
            max_evaluations: self.max_evaluations,
        }
    }

    fn start_policy(&self) -> StartPolicy {
        match (&self.x0, self.start) {
            (Some(x), _) => StartPolicy::Explicit(x.clone()),
            (None, Start::Center) => StartPolicy::Center,
            (None, Start::Random) => StartPolicy::Random,
            (None, Start::Corner) => StartPolicy::Corner,
        }
    }
}

fn run(args: RunArgs, out: &mut impl Write) -> Result<ExitCode, CliError> {
    if let Some(range) = &args.seeds {
        let config = BatchConfig {
            problems: args.problem.clone(),
            dims: args.dims.clone(),
            seeds: parse_seed_range(range)?,
            params: args.overrides(),
            start: args.start_policy(),
            trace_dir: args.trace_dir.clone(),
            eps: args.eps.clone(),
            verbose: args.verbose,
        };
        cmd_batch(&config, args.summary.as_deref(), out)?;
        return Ok(ExitCode::SUCCESS);
    }
    let (problem, n) = match (args.problem.as_slice(), args.dims.as_slice()) {
        ([p], [n]) => (p.clone(), *n),
        _ => {
            return Err(CliError::Invalid(
                "a single run takes one --problem and one --dim; use --seeds for batches".into(),
            ))
        }
    };
    let config = RunConfig {
        problem,
        n,
        seed: args.seed,
        params: args.overrides(),
        start: args.start_policy(),
        trace_path: args.trace.clone(),
        verbose: args.verbose,
    };
    cmd_run(&config, out)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Run(args) => run(*args, &mut out),
        Command::Verify(args) => {
            cmd_verify(&args.trace, &args.eps, args.json, &mut out).map(|ok| {
                if ok {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            })
        }
        Command::List { json } => cmd_list(json, &mut out).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("dfls: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
