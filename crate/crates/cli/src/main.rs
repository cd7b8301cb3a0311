use std::io::{self, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ssq_cli::{exit_code, Format, Session};
use ssq_core::engine::Limits;
use ssq_core::omega::Criterion;

#[derive(Parser)]
#[command(name = "ssq", version, about = "Run subset queries over CSV tables")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every `;`-separated query in a file.
    Run {
        /// Query file; `-` reads standard input.
        file: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Interactive session.
    Repl {
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args)]
struct Opts {
    /// Register a table, as NAME=PATH. Repeatable.
    #[arg(long = "table", value_name = "NAME=PATH", value_parser = parse_table)]
    tables: Vec<(String, PathBuf)>,
    #[arg(long, default_value = "table")]
    format: Format,
    #[arg(long, default_value_t = Limits::default().max_generated)]
    max_generated: u64,
    #[arg(long, default_value_t = Limits::default().max_results)]
    max_results: u64,
    /// How MAXIMAL and MINIMAL compare subsets: inclusion or cardinality.
    #[arg(long, default_value = "inclusion")]
    maxmin_criterion: Criterion,
    /// Evaluate with the brute-force reference evaluator.
    #[arg(long, hide = true)]
    oracle: bool,
}

fn parse_table(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), path.into()))
        }
        _ => Err(format!("expected NAME=PATH, got `{s}`")),
    }
}

fn session(opts: &Opts) -> Result<Session, ExitCode> {
    if opts.max_generated == 0 || opts.max_results == 0 {
        eprintln!("ssq: limits must be positive");
        return Err(ExitCode::from(1));
    }
    let mut s = Session {
        limits: Limits {
            max_generated: opts.max_generated,
            max_results: opts.max_results,
            ..Limits::default()
        },
        format: opts.format,
        criterion: opts.maxmin_criterion,
        oracle: opts.oracle,
        ..Session::default()
    };
    for (name, path) in &opts.tables {
        if let Err(e) = s.load(name, path) {
            eprintln!("ssq: {e}");
            return Err(ExitCode::from(exit_code(&e) as u8));
        }
    }
    Ok(s)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Cmd::Run { file, opts } => {
            let s = match session(&opts) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let text = if file.as_os_str() == "-" {
                io::read_to_string(io::stdin())
            } else {
                std::fs::read_to_string(&file)
            };
            let text = match text {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("ssq: cannot read {}: {e}", file.display());
                    return ExitCode::from(1);
                }
            };
            match s.run_script(&text) {
                Ok(out) => {
                    let mut stdout = io::stdout().lock();
                    if stdout
                        .write_all(out.as_bytes())
                        .and_then(|_| stdout.flush())
                        .is_err()
                    {
                        return ExitCode::from(1);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("ssq: {e}");
                    ExitCode::from(exit_code(&e) as u8)
                }
            }
        }
        Cmd::Repl { opts } => {
            let mut s = match session(&opts) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let interactive = io::stdin().is_terminal();
            match s.repl(io::stdin().lock(), io::stdout().lock(), interactive) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("ssq: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
