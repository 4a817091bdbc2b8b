//! Command-line scenario runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod report;
mod reproduce;
mod scenarios;
mod schema;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use scenarios::{Context, RunError};
use schema::{ConfigError, Params};

#[derive(Debug, Parser)]
#[command(name = "lnoi-hom", version, about = "LNOI coupler and HOM interference toolkit")]
struct Args {
    /// Scenario configuration (TOML).
    #[arg(long, required_unless_present = "print_schema")]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Random seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Print every configuration key and exit.
    #[arg(long)]
    print_schema: bool,
    #[arg(long)]
    verbose: bool,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn load(args: &Args) -> Result<(Params, u64), ConfigError> {
    let path = args.config.as_ref().expect("clap enforces --config");
    let text = std::fs::read_to_string(path)?;
    let params = Params::parse(&text)?;
    let seed = match args.seed {
        Some(s) => s,
        None => {
            let s = params.int("seed");
            u64::try_from(s).map_err(|_| ConfigError::Invalid(format!("seed {s} must be non-negative")))?
        }
    };
    Ok((params, seed))
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.print_schema {
        print!("{}", schema::schema_text());
        return ExitCode::SUCCESS;
    }
    let (params, seed) = match load(&args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create {}: {e}", args.out.display());
        return ExitCode::from(EXIT_FAILURE);
    }
    let ctx = Context { out: args.out.clone(), seed, verbose: args.verbose };
    ctx.note(&format!("scenario {} seed {seed}", params.scenario));
    match scenarios::run(&params, &ctx) {
        Ok(outcome) => {
            let text = match outcome.report.write(&ctx.out) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot write report: {e}");
                    return ExitCode::from(EXIT_FAILURE);
                }
            };
            if params.scenario != schema::Scenario::ReproducePaper || args.verbose {
                print!("{text}");
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("one or more checks failed");
                ExitCode::from(EXIT_FAILURE)
            }
        }
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
