//! `key = value` run files. Keys are long flag names; a `[name]` header
//! limits the following keys to that subcommand. Flags given on the command
//! line win.

use crate::error::CliError;
use std::ffi::OsString;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigEntry {
    pub section: Option<String>,
    pub key: String,
    pub value: String,
}

pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>, String> {
    let mut section = None;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(name.trim().to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        out.push(ConfigEntry {
            section: section.clone(),
            key,
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn has_flag(args: &[OsString], flag: &str) -> bool {
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&format!("{flag}="))
    })
}

/// Appends flags from the `--config` file that the command line does not
/// already set. Keys outside a section are only passed to subcommands that
/// `accepts(subcommand, key)`; sectioned keys always are, so typos surface.
pub fn inject_config(
    args: Vec<OsString>,
    subcommands: &[&str],
    accepts: impl Fn(&str, &str) -> bool,
) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
    let entries = parse_config(&text).map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
    let sub = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .find(|a| subcommands.contains(&a.as_str()));
    let mut out = args.clone();
    for e in entries {
        match (&e.section, &sub) {
            (Some(_), _) if e.section != sub => continue,
            (None, None) => continue,
            (None, Some(s)) if !accepts(s, &e.key) => continue,
            _ => {}
        }
        let flag = format!("--{}", e.key);
        if has_flag(&args, &flag) {
            continue;
        }
        match e.value.as_str() {
            "true" => out.push(flag.into()),
            "false" => {}
            v => {
                out.push(flag.into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}
