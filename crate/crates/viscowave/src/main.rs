use clap::{Parser, Subcommand};
use std::path::PathBuf;
use viscowave::harness;

#[derive(Parser)]
#[command(name = "viscowave", about = "Coupled viscoelastic waves with distributed delay", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and emit energy.csv + summary.json
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Downgrade stability-margin/CFL failures to warnings
        #[arg(long)]
        allow_unstable: bool,
        /// Diagnostic sampling stride in steps
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Run a parameter sweep described by a manifest
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        /// Parallel worker cap (env VISCOWAVE_WORKERS also applies)
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the bundled verification suite
    Verify {
        /// Only criteria whose name contains this substring
        #[arg(long)]
        filter: Option<String>,
    },
    /// Validate a configuration and print the findings
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            out,
            allow_unstable,
            stride,
        } => {
            let flags = harness::RunFlags {
                allow_unstable,
                stride,
            };
            unwrap_or_report(harness::cmd_run(&config, &out, &flags))
        }
        Command::Sweep { manifest, workers } => {
            unwrap_or_report(harness::cmd_sweep(&manifest, workers))
        }
        Command::Verify { filter } => harness::cmd_verify(filter.as_deref()),
        Command::Validate { config } => unwrap_or_report(harness::cmd_validate(&config)),
    };
    std::process::exit(code);
}

fn unwrap_or_report(result: Result<i32, harness::HarnessError>) -> i32 {
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            harness::EXIT_VALIDATION
        }
    }
}
