//! Plain-text configuration files: one `key=value` per line, `#` comments.
//! Command-line flags override file values; the CLI assembles the final
//! [`ExperimentConfig`](super::ExperimentConfig) from both.

use std::collections::BTreeMap;

use crate::{Error, Result};

/// Keys a config file may set, mirroring the CLI flags.
pub const KNOWN_KEYS: [&str; 11] = [
    "n", "d", "k", "theta", "trials", "seed", "solver", "lambda", "method", "rescale", "out",
];

/// Parse `key=value` lines. Blank lines and `#` comments are skipped;
/// unknown keys are rejected so typos fail loudly.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected key=value, got '{raw}'",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "line {}: unknown key '{key}' (known: {})",
                lineno + 1,
                KNOWN_KEYS.join(", ")
            )));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key '{key}'",
                lineno + 1
            )));
        }
    }
    Ok(map)
}

/// Parse a comma-separated list of positive integers (used for `k`).
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("bad integer '{tok}': {e}")))
        })
        .collect()
}

/// Parse a comma-separated list of method names.
pub fn parse_name_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(|tok| tok.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}
