use std::io::{BufRead, Write};
use std::path::Path;

use ssq_core::engine::{evaluate, Catalog, Limits, QueryResult};
use ssq_core::error::{Error, ErrorCategory, Result};
use ssq_core::omega::Criterion;
use ssq_core::relation::load_csv;
use ssq_core::sql::{lower, parse_script, Query};

use crate::render::{render, Format};

/// Tables, limits and output settings shared by the batch runner and the
/// REPL.
#[derive(Debug, Clone, Default)]
pub struct Session {
    pub catalog: Catalog,
    pub limits: Limits,
    pub format: Format,
    pub criterion: Criterion,
    /// Evaluate with the brute-force reference evaluator instead.
    pub oracle: bool,
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e.category() {
        ErrorCategory::Load => 2,
        ErrorCategory::Query => 3,
        ErrorCategory::Limit => 4,
    }
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads a CSV file as table `name`, replacing any table of that name.
    pub fn load(&mut self, name: &str, path: impl AsRef<Path>) -> Result<usize> {
        let r = load_csv(path, name, None)?;
        Ok(self.catalog.replace(r).len())
    }

    pub fn query(&self, q: &Query) -> Result<QueryResult> {
        let plan = lower(q, &self.catalog, self.criterion)?;
        if self.oracle {
            ssq_core::oracle::evaluate(&plan, &self.catalog)
        } else {
            evaluate(&plan, &self.catalog, &self.limits)
        }
    }

    /// Runs every query of a script. Output is only returned when all of
    /// them succeed; results are separated by blank lines.
    pub fn run_script(&self, text: &str) -> Result<String> {
        let mut out = Vec::new();
        for q in parse_script(text)? {
            out.push(render(&self.query(&q)?, self.format));
        }
        Ok(out.join("\n"))
    }

    /// Interactive loop. Lines starting with `\` are commands; anything
    /// else accumulates into a query that runs at a `;` or a blank line.
    pub fn repl(
        &mut self,
        input: impl BufRead,
        mut out: impl Write,
        interactive: bool,
    ) -> std::io::Result<()> {
        let mut buffer = String::new();
        let mut lines = input.lines();
        loop {
            if interactive {
                write!(out, "{}", if buffer.is_empty() { "ssq> " } else { "...> " })?;
                out.flush()?;
            }
            let Some(line) = lines.next().transpose()? else {
                break;
            };
            let trimmed = line.trim();
            if buffer.is_empty() && trimmed.starts_with('\\') {
                match self.command(trimmed) {
                    Command::Quit => break,
                    Command::Reply(text) => out.write_all(text.as_bytes())?,
                }
                continue;
            }
            if !trimmed.is_empty() {
                buffer.push_str(&line);
                buffer.push('\n');
            }
            if !buffer.is_empty() && (trimmed.is_empty() || trimmed.ends_with(';')) {
                match self.run_script(&buffer) {
                    Ok(text) => out.write_all(text.as_bytes())?,
                    Err(e) => writeln!(out, "error: {e}")?,
                }
                buffer.clear();
            }
        }
        if !buffer.trim().is_empty() {
            match self.run_script(&buffer) {
                Ok(text) => out.write_all(text.as_bytes())?,
                Err(e) => writeln!(out, "error: {e}")?,
            }
        }
        Ok(())
    }

    fn command(&mut self, line: &str) -> Command {
        let mut words = line.split_whitespace();
        let cmd = words.next().unwrap_or_default();
        let args: Vec<&str> = words.collect();
        let reply = |s: String| Command::Reply(s + "\n");
        match (cmd, args.as_slice()) {
            ("\\quit" | "\\q", []) => Command::Quit,
            ("\\load", [name, path]) => match self.load(name, path) {
                Ok(n) => reply(format!("loaded {name} ({n} rows)")),
                Err(e) => reply(format!("error: {e}")),
            },
            ("\\tables", []) => {
                let names: Vec<String> = self
                    .catalog
                    .relations()
                    .map(|r| format!("{} ({} rows)", r.name(), r.len()))
                    .collect();
                reply(if names.is_empty() { "no tables".into() } else { names.join("\n") })
            }
            ("\\limits", []) => reply(format!(
                "max_generated {}\nmax_results {}",
                self.limits.max_generated, self.limits.max_results
            )),
            ("\\limits", [key, value]) => match (*key, value.parse::<u64>()) {
                (_, Ok(0)) | (_, Err(_)) => reply(format!("error: `{value}` is not a positive integer")),
                ("max_generated", Ok(v)) => {
                    self.limits.max_generated = v;
                    reply(format!("max_generated {v}"))
                }
                ("max_results", Ok(v)) => {
                    self.limits.max_results = v;
                    reply(format!("max_results {v}"))
                }
                _ => reply(format!("error: unknown limit `{key}`")),
            },
            ("\\format", []) => reply(self.format.to_string()),
            ("\\format", [f]) => match f.parse() {
                Ok(f) => {
                    self.format = f;
                    reply(format!("format {f}"))
                }
                Err(e) => reply(format!("error: {e}")),
            },
            _ => reply(format!(
                "error: unknown command `{line}`; try \\load NAME PATH, \\tables, \\limits, \\format FMT or \\quit"
            )),
        }
    }
}

enum Command {
    Quit,
    Reply(String),
}
