//! Run configuration: flat key=value files, command-line overrides, and
//! manifest emission.
//!
//! Precedence is flags > config file > built-in defaults. Every run
//! writes `manifest.txt` with the fully resolved configuration, itself
//! a valid config file, so any run can be replayed bit-exactly with
//! `<command> --config manifest.txt`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub type CliResult<T> = Result<T, String>;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Resolve a configuration: defaults, then the optional config
    /// file, then explicit flag overrides (`None` flags are skipped).
    pub fn resolve(
        command: &str,
        defaults: &[(&str, &str)],
        config_path: Option<&Path>,
        overrides: &[(&str, Option<String>)],
    ) -> CliResult<RunConfig> {
        let mut values: BTreeMap<String, String> = defaults
            .iter()
            .map(|&(k, v)| (k.to_string(), v.to_string()))
            .collect();
        if let Some(path) = config_path {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(format!(
                        "{}:{}: expected key=value, got {line:?}",
                        path.display(),
                        lineno + 1
                    ));
                };
                let key = key.trim();
                let value = value.trim();
                if key == "command" {
                    if value != command {
                        return Err(format!(
                            "config was written for `{value}`, not `{command}`"
                        ));
                    }
                    continue;
                }
                if !values.contains_key(key) {
                    return Err(format!(
                        "{}: unknown key {key:?} for `{command}`",
                        path.display()
                    ));
                }
                values.insert(key.to_string(), value.to_string());
            }
        }
        for (key, value) in overrides {
            if let Some(v) = value {
                debug_assert!(values.contains_key(*key), "unregistered key {key}");
                values.insert(key.to_string(), v.clone());
            }
        }
        Ok(RunConfig {
            command: command.to_string(),
            values,
        })
    }

    pub fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("unregistered key {key}"))
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> CliResult<T> {
        let raw = self.get(key);
        raw.parse()
            .map_err(|_| format!("invalid value for {key}: {raw:?}"))
    }

    /// Comma-separated list; empty string means empty list.
    pub fn parse_list<T: std::str::FromStr>(&self, key: &str) -> CliResult<Vec<T>> {
        let raw = self.get(key);
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| format!("invalid entry {s:?} in {key}"))
            })
            .collect()
    }

    /// Optional path value: the empty string means "not set".
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let raw = self.get(key);
        if raw.is_empty() {
            None
        } else {
            Some(PathBuf::from(raw))
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.get("out"))
    }

    /// Write `manifest.txt` into the output directory (created if
    /// missing) and return its path.
    pub fn write_manifest(&self) -> CliResult<PathBuf> {
        let dir = self.out_dir();
        fs::create_dir_all(&dir)
            .map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        let mut text = String::new();
        let _ = writeln!(text, "command={}", self.command);
        for (k, v) in &self.values {
            let _ = writeln!(text, "{k}={v}");
        }
        let path = dir.join("manifest.txt");
        fs::write(&path, text).map_err(|e| format!("cannot write manifest: {e}"))?;
        Ok(path)
    }
}

/// Write a CSV artifact with a header row. Floats must already be
/// formatted by the caller (use `{}` so values round-trip exactly).
pub fn write_csv_file(dir: &Path, name: &str, header: &str, rows: &[String]) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path)
}
