//! Command results and their text and JSON renderings.

use std::io::{self, Write};
use std::process::ExitCode;

use serde::Serialize;
use serde_json::Value;

use satfrac::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Fail,
}

/// Outcome of a non-streaming verb. `text` is the human rendering of
/// `payload`; diagnostics go to standard error in text mode.
#[derive(Debug, Serialize)]
pub struct Report {
    pub verb: &'static str,
    pub status: Status,
    pub payload: Value,
    pub diagnostics: Vec<String>,
    #[serde(skip)]
    pub text: String,
}

impl Report {
    pub fn new(verb: &'static str, status: Status) -> Self {
        Self {
            verb,
            status,
            payload: Value::Null,
            diagnostics: Vec::new(),
            text: String::new(),
        }
    }

    pub fn emit(&self, json: bool) -> ExitCode {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        let written = if json {
            serde_json::to_writer(&mut out, self)
                .map_err(io::Error::from)
                .and_then(|()| out.write_all(b"\n"))
        } else {
            writeln!(out, "{}", self.text)
        };
        if let Err(e) = written.and_then(|()| out.flush()) {
            if e.kind() != io::ErrorKind::BrokenPipe {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
        if !json || self.status == Status::Fail {
            for d in &self.diagnostics {
                eprintln!("{d}");
            }
        }
        match self.status {
            Status::Ok => ExitCode::SUCCESS,
            Status::Fail => ExitCode::from(1),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input, inconsistent flags.
    Input(String),
    /// The requested operation failed.
    Op(satfrac::Error),
    Io(io::Error),
}

impl From<satfrac::Error> for CliError {
    fn from(e: satfrac::Error) -> Self {
        CliError::Op(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit(self) -> ExitCode {
        match self {
            CliError::Input(msg) => {
                eprintln!("input error: {msg}");
                ExitCode::from(2)
            }
            CliError::Op(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
            CliError::Io(e) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
            CliError::Io(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        }
    }
}

pub fn points_json(points: &[Point]) -> Value {
    points.iter().map(|p| serde_json::json!([p.i, p.j])).collect()
}

pub fn points_text(points: &[Point]) -> String {
    let parts: Vec<String> = points.iter().map(ToString::to_string).collect();
    format!("[{}]", parts.join(", "))
}
