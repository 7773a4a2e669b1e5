use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use risim_cli::config::parse_override;
use risim_cli::{
    run, CliError, Command, Outcome, RunConfig, DEFAULT_OUT_DIR, DEFAULT_SEED, OUT_DIR_ENV,
};

/// Simulate a 1-bit reconfigurable reflecting surface.
#[derive(Debug, Parser)]
#[command(name = "risim", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Experiment TOML file merged over the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base scenario (parking, gammage, chamber).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Precomputed codebook file for sweep and coverage.
    #[arg(long, global = true)]
    codebook: Option<PathBuf>,
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = DEFAULT_OUT_DIR)]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// `key=value` override, dotted keys address nested sections.
    #[arg(long = "set", global = true, value_parser = parse_override)]
    overrides: Vec<(String, String)>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let cfg = RunConfig {
        command: args.command,
        config: args.config,
        preset: args.preset,
        codebook: args.codebook,
        out_dir: args.out,
        seed: args.seed,
        overrides: args.overrides,
    };
    match run(&cfg) {
        Ok(Outcome::Clean) => {
            println!("ok: no problems found");
            ExitCode::SUCCESS
        }
        Ok(Outcome::Written(paths)) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let CliError::Diagnostics(diags) = &e {
                for d in diags {
                    eprintln!("{d}");
                }
            }
            eprintln!("risim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
