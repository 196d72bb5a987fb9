//! Flat JSON config files mirroring the command-line flags.
//!
//! Each key `k` becomes `--k value` inserted right after the subcommand,
//! so flags given on the command line win. Underscores in keys are read
//! as dashes. Relative paths are resolved against the config file's
//! directory.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config {path} is not valid JSON: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("config {0} must be a flat JSON object")]
    NotAnObject(PathBuf),
    #[error("config key {key:?}: {msg}")]
    BadValue { key: String, msg: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("config key \"dropout\" is not supported: only edge dropping is implemented")]
    Dropout,
    #[error("--config needs a file path")]
    MissingPath,
}

/// Keys whose values are file system paths.
const PATH_KEYS: &[&str] = &[
    "graph",
    "features",
    "labels",
    "weights",
    "train-mask",
    "val-mask",
    "test-mask",
    "dataset",
    "out",
    "report",
];

/// Result of merging a config file into the argument list.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Expanded {
    pub args: Vec<OsString>,
    /// `(flag name, key as written)` for every option taken from the config file.
    pub config_keys: Vec<(String, String)>,
}

fn bad(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn scalar(key: &str, v: &Value) -> Result<String, ConfigError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(bad(key, "list entries must be strings or numbers")),
    }
}

/// Turns a parsed config object into flag arguments.
pub fn config_to_args(value: &Value, base: &Path) -> Result<Expanded, ConfigError> {
    let Value::Object(map) = value else {
        return Err(ConfigError::NotAnObject(base.to_path_buf()));
    };
    let mut out = Expanded::default();
    for (raw, v) in map {
        let key = raw.replace('_', "-");
        if key == "dropout" {
            return Err(ConfigError::Dropout);
        }
        if key == "config" {
            return Err(bad(&key, "config files cannot include other config files"));
        }
        let flag = format!("--{key}");
        match v {
            Value::Null | Value::Bool(false) => continue,
            Value::Bool(true) => out.args.push(flag.into()),
            Value::Array(items) => {
                let parts = items
                    .iter()
                    .map(|x| scalar(&key, x))
                    .collect::<Result<Vec<_>, _>>()?;
                out.args.push(flag.into());
                out.args.push(parts.join(",").into());
            }
            Value::Object(_) => return Err(bad(&key, "nested objects are not allowed")),
            Value::String(s) if PATH_KEYS.contains(&key.as_str()) => {
                let p = Path::new(s);
                let p = if p.is_relative() {
                    base.join(p)
                } else {
                    p.to_path_buf()
                };
                out.args.push(flag.into());
                out.args.push(p.into());
            }
            other => {
                out.args.push(flag.into());
                out.args.push(scalar(&key, other)?.into());
            }
        }
        out.config_keys.push((key, raw.clone()));
    }
    Ok(out)
}

/// Removes `--config FILE` from `argv` and splices the file's flags in
/// after the subcommand (the first argument after the program name).
pub fn expand(argv: Vec<OsString>) -> Result<Expanded, ConfigError> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(PathBuf::from(it.next().ok_or(ConfigError::MissingPath)?));
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(Expanded {
            args: rest,
            config_keys: Vec::new(),
        });
    };
    let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Read {
        path: path.clone(),
        source,
    })?;
    let value: Value = serde_json::from_str(&text).map_err(|source| ConfigError::Json {
        path: path.clone(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut cfg = config_to_args(&value, &base)?;
    let at = rest.len().min(2);
    let tail = rest.split_off(at);
    rest.append(&mut cfg.args);
    rest.extend(tail);
    Ok(Expanded {
        args: rest,
        config_keys: cfg.config_keys,
    })
}
