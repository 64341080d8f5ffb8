//! Run manifests and `key=value` config files for the command-line tool.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{read_file, write_file};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance of one command run: the command line, every configuration
/// value after defaulting, and a digest of every input file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub command_line: String,
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<(PathBuf, String)>,
    pub version: String,
}

impl RunManifest {
    pub fn new(command_line: impl Into<String>) -> Self {
        Self {
            command_line: command_line.into(),
            version: VERSION.to_string(),
            ..Default::default()
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.push((path.to_path_buf(), digest));
        Ok(())
    }

    /// Where the manifest for `primary` lives.
    pub fn path_for(primary: &Path) -> PathBuf {
        let mut name = primary.as_os_str().to_owned();
        name.push(".manifest");
        PathBuf::from(name)
    }

    pub fn format(&self) -> String {
        let mut out = format!("MANIFEST subsel {}\n", self.version);
        let _ = writeln!(out, "command {}", self.command_line);
        for (k, v) in &self.config {
            let _ = writeln!(out, "config {k}={v}");
        }
        for (p, d) in &self.inputs {
            let _ = writeln!(out, "input {d} {}", p.display());
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, head) = lines.next().ok_or_else(|| Error::parse(1, "empty manifest"))?;
        let version = head
            .strip_prefix("MANIFEST subsel ")
            .ok_or_else(|| Error::parse(1, "malformed manifest header"))?;
        let mut m = RunManifest {
            version: version.to_string(),
            ..Default::default()
        };
        for (i, l) in lines {
            let (kind, rest) = l.split_once(' ').unwrap_or((l, ""));
            match kind {
                "command" => m.command_line = rest.to_string(),
                "config" => {
                    let (k, v) = rest
                        .split_once('=')
                        .ok_or_else(|| Error::parse(i + 1, "config entry is not key=value"))?;
                    m.config.insert(k.to_string(), v.to_string());
                }
                "input" => {
                    let (d, p) = rest
                        .split_once(' ')
                        .ok_or_else(|| Error::parse(i + 1, "input entry needs digest and path"))?;
                    m.inputs.push((PathBuf::from(p), d.to_string()));
                }
                _ => return Err(Error::parse(i + 1, format!("unknown manifest entry {kind:?}"))),
            }
        }
        Ok(m)
    }

    /// Writes the manifest next to `primary` and returns its path.
    pub fn write_next_to(&self, primary: &Path) -> Result<PathBuf> {
        let path = Self::path_for(primary);
        write_file(&path, &self.format())?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Parses a config file of `key=value` lines; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected key=value, got {l:?}")))?;
        let k = k.trim().trim_start_matches("--").to_string();
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::parse(i + 1, format!("duplicate key {k}")));
        }
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_config(&read_file(path)?)
}
