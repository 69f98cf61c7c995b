//! Flat `key = value` configuration files.
//!
//! One entry per line; blank lines and lines starting with `#` are ignored.
//! Keys are normalized to lower case with `-` in place of `_`, and may carry
//! a leading `--`, so that a file can use the same names as command-line
//! flags. Values may be wrapped in double quotes.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    MissingEquals { line: usize },
    #[error("line {line}: empty key")]
    EmptyKey { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    /// One-based line number.
    pub line: usize,
}

fn normalize_key(key: &str) -> String {
    key.trim()
        .trim_start_matches("--")
        .to_ascii_lowercase()
        .replace('_', "-")
}

fn unquote(value: &str) -> &str {
    let v = value.trim();
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>, ConfigError> {
    let mut entries: Vec<ConfigEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or(ConfigError::MissingEquals { line })?;
        let key = normalize_key(key);
        if key.is_empty() {
            return Err(ConfigError::EmptyKey { line });
        }
        if entries.iter().any(|e| e.key == key) {
            return Err(ConfigError::DuplicateKey { line, key });
        }
        entries.push(ConfigEntry {
            key,
            value: unquote(value).to_string(),
            line,
        });
    }
    Ok(entries)
}

pub fn load_config(path: &Path) -> Result<Vec<ConfigEntry>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

/// Fails on the first entry whose key is not in `known`.
pub fn check_keys(entries: &[ConfigEntry], known: &[&str]) -> Result<(), ConfigError> {
    match entries.iter().find(|e| !known.contains(&e.key.as_str())) {
        Some(e) => Err(ConfigError::UnknownKey {
            line: e.line,
            key: e.key.clone(),
        }),
        None => Ok(()),
    }
}
