//! Run configuration: `key = value` text files with `#` comments, plus
//! `--set key=value` command-line overrides.
//!
//! Commands pull the keys they understand out of the map; anything left
//! over afterwards is an unknown key and rejects the run with its line
//! number, so typos fail loudly instead of silently using a default.

use fringe_core::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Where a value came from, for error messages.
#[derive(Debug, Clone)]
enum Origin {
    File { line: usize },
    Flag,
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Origin::File { line } => write!(f, "line {line}"),
            Origin::Flag => write!(f, "--set"),
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    origin: Origin,
}

/// Parsed configuration with consumption tracking.
#[derive(Debug, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, Entry>,
    /// Keys in effect for this run, in consumption order, echoed to the
    /// resolved-config file.
    resolved: Vec<(String, String)>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl RunConfig {
    /// Loads an optional config file and applies `--set` overrides on top.
    pub fn load(file: Option<&Path>, sets: &[String]) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            if !path.is_file() {
                return Err(Error::validation(format!(
                    "config file {} not found",
                    path.display()
                )));
            }
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            cfg.parse_file(path, &text)?;
        }
        for spec in sets {
            let (key, value) = spec.split_once('=').ok_or_else(|| {
                Error::config(format!("--set {spec:?} is not of the form key=value"))
            })?;
            let key = key.trim();
            if !valid_key(key) {
                return Err(Error::config(format!("--set key {key:?} is not a valid key")));
            }
            cfg.entries.insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    origin: Origin::Flag,
                },
            );
        }
        Ok(cfg)
    }

    fn parse_file(&mut self, path: &Path, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            // everything after '#' is a comment
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::format(
                    path,
                    format!("line {line_no}: expected `key = value`, got {raw:?}"),
                ));
            };
            let key = key.trim();
            if !valid_key(key) {
                return Err(Error::format(
                    path,
                    format!("line {line_no}: invalid key {key:?}"),
                ));
            }
            if let Some(prev) = self.entries.get(key) {
                return Err(Error::format(
                    path,
                    format!(
                        "line {line_no}: duplicate key {key:?} (first set at {})",
                        prev.origin
                    ),
                ));
            }
            self.entries.insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    origin: Origin::File { line: line_no },
                },
            );
        }
        Ok(())
    }

    /// Consumes `key`, parsing it as `T`; `default` applies when absent.
    /// Either way the effective value lands in the resolved echo.
    pub fn take<T>(&mut self, key: &str, default: T) -> Result<T>
    where
        T: FromStr + Display,
    {
        let value = match self.entries.remove(key) {
            Some(entry) => entry.value.parse::<T>().map_err(|_| {
                Error::config(format!(
                    "key {key:?} ({}): cannot parse {:?}",
                    entry.origin, entry.value
                ))
            })?,
            None => default,
        };
        self.resolved.push((key.to_string(), value.to_string()));
        Ok(value)
    }

    /// Consumes an optional string key (paths, method lists); absent keys
    /// stay out of the resolved echo.
    pub fn take_opt(&mut self, key: &str) -> Option<String> {
        let value = self.entries.remove(key).map(|e| e.value);
        if let Some(v) = &value {
            self.resolved.push((key.to_string(), v.clone()));
        }
        value
    }

    /// Applies a command-line flag on top of whatever the file said; flags
    /// always win. The key echoes like any other.
    pub fn override_value(&mut self, key: &str, value: impl Display) {
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                origin: Origin::Flag,
            },
        );
    }

    /// Rejects any keys nothing consumed.
    pub fn finish(self) -> Result<ResolvedConfig> {
        if let Some((key, entry)) = self.entries.iter().next() {
            return Err(Error::config(format!(
                "unknown key {key:?} ({})",
                entry.origin
            )));
        }
        Ok(ResolvedConfig {
            lines: self.resolved,
        })
    }
}

/// The fully-resolved configuration of a run, written next to its outputs;
/// feeding it back through `--config` reproduces the run.
pub struct ResolvedConfig {
    lines: Vec<(String, String)>,
}

pub const RESOLVED_NAME: &str = "resolved.cfg";

impl ResolvedConfig {
    pub fn to_text(&self) -> String {
        let mut out = String::from("# resolved configuration; rerun with --config to reproduce\n");
        for (k, v) in &self.lines {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(RESOLVED_NAME);
        std::fs::write(&path, self.to_text()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
