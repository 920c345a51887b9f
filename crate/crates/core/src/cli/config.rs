//! Flat `key = value` configuration files.
//!
//! Keys are long flag names of the chosen subcommand. The file is spliced into the
//! argument list before the real flags, and any flag given on the command line replaces
//! the file's entries for that key.

use std::collections::HashSet;
use std::path::Path;

use clap::{ArgAction, Command};

use crate::error::{Error, Result};

/// Parsed `(key, value, line)` entries.
pub fn parse(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, message: format!("expected key = value, got '{line}'") })?;
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() {
            return Err(Error::Parse { line: i + 1, message: "empty key".into() });
        }
        out.push((key.to_string(), value.trim().to_string(), i + 1));
    }
    Ok(out)
}

/// Location of `--config` in the subcommand arguments.
pub fn find_config(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(path) = a.strip_prefix("--config=") {
            return Some(path.to_string());
        }
    }
    None
}

/// Flags for the entries of `path`, skipping keys already given in `explicit`.
pub fn expand(path: &Path, sub: &Command, explicit: &[String]) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read config file {}: {e}", path.display())))?;
    let given: HashSet<&str> =
        explicit.iter().filter_map(|a| a.strip_prefix("--")).map(|a| a.split_once('=').map_or(a, |(k, _)| k)).collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (key, value, line) in parse(&text)? {
        let arg =
            sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())).filter(|_| key != "config").ok_or_else(
                || Error::Parse { line, message: format!("unknown key '{key}' for '{}'", sub.get_name()) },
            )?;
        let repeatable = matches!(arg.get_action(), ArgAction::Append | ArgAction::Count);
        if !seen.insert(key.clone()) && !repeatable {
            return Err(Error::Parse { line, message: format!("duplicate key '{key}'") });
        }
        if given.contains(key.as_str()) {
            continue;
        }
        if arg.get_action().takes_values() {
            out.push(format!("--{key}={value}"));
        } else {
            match value.as_str() {
                "true" => out.push(format!("--{key}")),
                "false" => {}
                _ => return Err(Error::Parse { line, message: format!("'{key}' takes true or false, got '{value}'") }),
            }
        }
    }
    Ok(out)
}
