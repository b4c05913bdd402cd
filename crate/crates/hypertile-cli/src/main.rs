use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hypertile_cli::{run_scenario_file, serialize_result, AuditLevel, RunOptions};

#[derive(Parser)]
#[command(name = "hypertile", about = "Run decomposition, marker, region, and witness scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write the result JSON.
    Run {
        /// Path to the scenario config (JSON; numbers are rational strings).
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Result file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// How much exact auditing to run.
        #[arg(long, value_enum, default_value_t = AuditArg::Full)]
        audit_level: AuditArg,
        /// Also write an SVG figure (2-D partition scenarios only).
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditArg {
    Fast,
    Full,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            audit_level,
            svg,
        } => {
            let opts = RunOptions {
                seed_override: seed,
                audit_level: match audit_level {
                    AuditArg::Fast => AuditLevel::Fast,
                    AuditArg::Full => AuditLevel::Full,
                },
            };
            match run_scenario_file(&config, &opts, out.as_deref(), svg.as_deref()) {
                Ok(doc) => {
                    if out.is_none() {
                        let bytes = serialize_result(&doc);
                        print!("{}", String::from_utf8_lossy(&bytes));
                    }
                    ExitCode::SUCCESS
                }
                Err(err) => {
                    println!("{}", err.to_json());
                    ExitCode::from(err.exit_code() as u8)
                }
            }
        }
    }
}
