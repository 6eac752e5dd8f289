use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use opdomain_cli::examples::{self, EXAMPLES};
use opdomain_cli::report::EXIT_ERROR;
use opdomain_cli::run::{out_dir, write_outputs};
use opdomain_cli::JobConfig;

#[derive(Parser)]
#[command(name = "opdomain", version, about = "Finite-section certificates for adjoint-domain criteria")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a job from a JSON configuration or a bundled example.
    Run {
        /// Configuration file.
        #[arg(required_unless_present = "example", conflicts_with = "example")]
        config: Option<PathBuf>,
        /// Name of a bundled example (see `opdomain examples`).
        #[arg(long)]
        example: Option<String>,
        /// Output directory for the report and CSV files.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Cap every window ladder at this size.
        #[arg(long)]
        max_window: Option<usize>,
        /// Suppress the per-check summary.
        #[arg(long, short)]
        quiet: bool,
    },
    /// List the bundled examples.
    Examples,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_ERROR as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match cli.cmd {
        Cmd::Examples => {
            for e in EXAMPLES {
                println!("{:<28} {}", e.name, e.exercises);
            }
            ExitCode::SUCCESS
        }
        Cmd::Run {
            config,
            example,
            out,
            seed,
            max_window,
            quiet,
        } => {
            let loaded = match (config, example) {
                (Some(path), _) => JobConfig::load(&path),
                (None, Some(name)) => match examples::find(&name) {
                    Some(e) => JobConfig::from_str_in(e.config, &std::env::current_dir().unwrap_or_default()),
                    None => return fail(format!("unknown example `{name}`; try `opdomain examples`")),
                },
                (None, None) => unreachable!("clap requires one of them"),
            };
            let mut cfg = match loaded {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            cfg.apply_overrides(seed, max_window, out);
            let outcome = match opdomain_cli::run(&cfg) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            let path = match write_outputs(&outcome, &out_dir(&cfg), &cfg.output.report) {
                Ok(p) => p,
                Err(e) => return fail(format!("cannot write outputs: {e}")),
            };
            if !quiet {
                print!("{}", outcome.report.summary());
            }
            println!("report: {}", path.display());
            ExitCode::from(outcome.report.exit_code as u8)
        }
    }
}
