use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fracperim::config::{parse_config, ExperimentSpec};
use fracperim::output::{emit_results, to_csv, to_json, Format};
use fracperim::runner::{run_task, Faults, Status, Task};
use fracperim::suite::{Suite, SuiteOptions};
use fracperim_core::asymptotics::SSchedule;

#[derive(Parser)]
#[command(name = "fracperim", version, about = "Fractional perimeter experiments on model manifolds")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for results.csv / results.json. Without it the results go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Quadrature seed, overriding the config and FRACPERIM_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated s values replacing every schedule of the config.
    #[arg(long, global = true)]
    schedule: Option<String>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: OutFormat,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    BetaSign,
}

#[derive(Subcommand)]
enum Command {
    /// Singular kernel against its flat-space form on a distance grid.
    Kernel,
    /// Fractional perimeter at each s of the schedule.
    Perimeter,
    /// s → 0 sweep of half the perimeter, extrapolated and predicted limits.
    Limit,
    /// Heat density of E at a point.
    Theta,
    /// Three fractional Laplacians and two seminorms on a circle.
    Equiv,
    /// The numbered acceptance criteria.
    Suite {
        /// Comma-separated criterion numbers (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
        /// Run with a deliberate defect, as a negative control.
        #[arg(long, value_enum)]
        inject_fault: Option<Fault>,
    },
}

fn fail(code: Status, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code.exit_code() as u8)
}

fn env_seed() -> Result<Option<u64>, String> {
    match std::env::var("FRACPERIM_SEED") {
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(s) if s <= i64::MAX as u64 => Ok(Some(s)),
            _ => Err(format!("FRACPERIM_SEED must be an integer in [0, {}], got `{v}`", i64::MAX)),
        },
        Err(_) => Ok(None),
    }
}

fn parse_schedule(text: &str) -> Result<SSchedule, String> {
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("--schedule: `{}` is not a number", v.trim())))
        .collect::<Result<Vec<_>, _>>()?;
    SSchedule::new(values).map_err(|e| format!("--schedule: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(seed) = cli.seed {
        if seed > i64::MAX as u64 {
            return fail(Status::ConfigError, format!("--seed must be at most {}", i64::MAX));
        }
    }
    let env_seed = match env_seed() {
        Ok(s) => s,
        Err(e) => return fail(Status::ConfigError, e),
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return fail(Status::ConfigError, "--jobs must be positive");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            return fail(Status::ConfigError, e);
        }
    }
    let format = match cli.format {
        OutFormat::Csv => Format::Csv,
        OutFormat::Json => Format::Json,
        OutFormat::Both => Format::Both,
    };
    let task = match cli.command {
        Command::Suite { criteria, inject_fault } => {
            let opts = SuiteOptions {
                faults: Faults {
                    beta_sign: matches!(inject_fault, Some(Fault::BetaSign)),
                },
                seed: cli.seed,
                env_seed,
            };
            return suite(&criteria, opts, cli.out);
        }
        Command::Kernel => Task::Kernel,
        Command::Perimeter => Task::Perimeter,
        Command::Limit => Task::Limit,
        Command::Theta => Task::Theta,
        Command::Equiv => Task::Equiv,
    };
    let Some(path) = cli.config else {
        return fail(Status::ConfigError, "this subcommand needs --config");
    };
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return fail(Status::ConfigError, format!("{}: {e}", path.display())),
    };
    let mut specs: Vec<ExperimentSpec> = match parse_config(&text, env_seed) {
        Ok(s) => s,
        Err(e) => return fail(Status::ConfigError, format!("{}: {e}", path.display())),
    };
    if let Some(text) = &cli.schedule {
        match parse_schedule(text) {
            Ok(s) => specs.iter_mut().for_each(|x| x.schedule = s.clone()),
            Err(e) => return fail(Status::ConfigError, e),
        }
    }
    if let Some(seed) = cli.seed {
        specs.iter_mut().for_each(|x| x.quad.seed = seed);
    }

    let result = run_task(task, &specs, Faults::default());
    for m in &result.messages {
        eprintln!("{m}");
    }
    match &cli.out {
        Some(dir) => {
            if let Err(e) = emit_results(&result.rows, dir, format) {
                return fail(Status::ConfigError, e);
            }
        }
        None => match format {
            Format::Json => print!("{}", to_json(&result.rows)),
            _ => print!("{}", to_csv(&result.rows)),
        },
    }
    ExitCode::from(result.status.exit_code() as u8)
}

fn suite(criteria: &[u8], opts: SuiteOptions, out: Option<PathBuf>) -> ExitCode {
    let all: Vec<u8> = (1..=12).collect();
    let numbers = if criteria.is_empty() { &all[..] } else { criteria };
    if let Some(bad) = numbers.iter().find(|n| !(1..=12).contains(*n)) {
        return fail(Status::ConfigError, format!("no criterion {bad}; criteria are numbered 1 to 12"));
    }
    let suite = Suite::new(opts);
    let mut results = Vec::new();
    for &n in numbers {
        let r = suite.criterion(n);
        println!("{}", r.line());
        for c in r.checks.iter().filter(|c| !c.passed) {
            eprintln!("  criterion {n}, {}: {}", c.name, c.detail);
        }
        results.push(r);
    }
    if let Some(dir) = out {
        let path = dir.join("suite.json");
        let written = fs::create_dir_all(&dir).and_then(|_| fs::write(&path, serde_json::to_string_pretty(&results).expect("suite results serialize") + "\n"));
        if let Err(e) = written {
            return fail(Status::ConfigError, format!("{}: {e}", path.display()));
        }
    }
    let failed: Vec<String> = results.iter().filter(|r| !r.passed()).map(|r| r.number.to_string()).collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed criteria: {}", failed.join(", "));
        ExitCode::from(Status::VerdictFailure.exit_code() as u8)
    }
}
