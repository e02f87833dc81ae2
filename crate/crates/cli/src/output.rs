//! Result envelopes and writers.

use std::fmt::Display;
use std::io::Write;

use serde::Serialize;

use crate::config::Globals;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Every JSON artifact: schema version, the command, its resolved configuration and
/// the result. No timestamps, so reruns are byte-identical.
#[derive(Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub config: Resolved<'a, C>,
    pub result: R,
}

#[derive(Serialize)]
pub struct Resolved<'a, C: Serialize> {
    #[serde(flatten)]
    pub globals: &'a Globals,
    #[serde(flatten)]
    pub params: &'a C,
}

pub fn json<C: Serialize, R: Serialize>(
    command: &str,
    globals: &Globals,
    params: &C,
    result: R,
) -> Result<String, CliError> {
    let env = Envelope { schema_version: SCHEMA_VERSION, command, config: Resolved { globals, params }, result };
    let mut s = serde_json::to_string_pretty(&env).map_err(|e| CliError::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Shortest round-trip form; exponent notation for very small or large magnitudes.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// CSV with a header line and `\n` endings.
pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: Display,
{
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn emit(globals: &Globals, text: &str) -> Result<(), CliError> {
    match &globals.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
        }
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Input(format!("cannot write to stdout: {e}"))),
    }
}
