use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hahnloc::binomial::DEFAULT_GRID_DENOMINATOR;
use hahnloc::cli::{run_text, CliError, Command, Format, RunOptions};
use hahnloc::hahnext::DEFAULT_PROBE_DEPTH;

/// Exact checks on localizations, Hahn extensions, binomial alternatives
/// and minimax tests described in a model file.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on
/// input errors.
#[derive(Parser, Debug)]
#[command(name = "hahnloc", version)]
struct Args {
    /// verify-localization, glue, hahn-extend, binomial-validate, binomial-alt,
    /// binomial-cover, na-check, tv, kraft, unbiased or decompose
    #[arg(value_parser = parse_command)]
    command: Command,

    /// Model file; `-` reads standard input.
    model: PathBuf,

    /// Seed for sampled instances.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Denominator of the rational grid used by grid sweeps.
    #[arg(long, default_value_t = DEFAULT_GRID_DENOMINATOR)]
    grid_denominator: u32,

    /// Count any shared atom between supports as an overlap.
    #[arg(long)]
    strict: bool,

    /// Largest number of supports joined into one probe set.
    #[arg(long, default_value_t = DEFAULT_PROBE_DEPTH)]
    probe_depth: usize,

    /// Output format: human or machine.
    #[arg(long, default_value = "human", value_parser = parse_format)]
    format: Format,

    /// Add run metadata, including a timestamp.
    #[arg(long)]
    meta: bool,
}

fn parse_command(s: &str) -> Result<Command, CliError> {
    s.parse()
}

fn parse_format(s: &str) -> Result<Format, CliError> {
    s.parse()
}

fn read_model(path: &PathBuf) -> std::io::Result<String> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        std::fs::read_to_string(path)
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let source = args.model.display().to_string();
    let text = match read_model(&args.model) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("hahnloc: cannot read {source}: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        seed: args.seed,
        grid_denominator: args.grid_denominator,
        strict: args.strict,
        probe_depth: args.probe_depth,
        meta: args.meta,
    };
    match run_text(args.command, &text, &opts) {
        Ok(report) => {
            print!("{}", report.render(args.format));
            ExitCode::from(report.exit_code() as u8)
        }
        Err(CliError::Parse(diags)) => {
            for d in diags {
                eprintln!("{source}:{d}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("hahnloc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
