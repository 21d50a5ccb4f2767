//! Flag resolution: command line, then config file, then `BKP_*` environment, then built-in default.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};
use bkp_core::orchestrate::Config;
use bkp_core::Error;

pub struct Resolver {
    file: Config,
    /// Everything resolved so far, written back as provenance.
    pub used: Config,
}

fn env_key(key: &str) -> String {
    format!("BKP_{}", key.to_uppercase().replace('-', "_"))
}

fn invalid(msg: String) -> anyhow::Error {
    Error::InvalidParameter(msg).into()
}

impl Resolver {
    pub fn new(config: Option<&Path>) -> Result<Self> {
        let file = match config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
                Config::load(&text).with_context(|| format!("parsing config {}", path.display()))?
            }
            None => Config::default(),
        };
        Ok(Self { file, used: Config::default() })
    }

    /// Drop file entries that a command-line flag makes meaningless.
    pub fn forget(&mut self, keys: &[&str]) {
        for k in keys {
            self.file.0.remove(*k);
        }
    }

    fn lookup(&self, key: &str) -> Option<String> {
        self.file
            .get(key)
            .map(str::to_string)
            .or_else(|| std::env::var(env_key(key)).ok())
    }

    pub fn opt<T>(&mut self, key: &str, cli: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        let value = match cli {
            Some(v) => Some(v),
            None => match self.lookup(key) {
                Some(s) => Some(s.trim().parse::<T>().map_err(|e| invalid(format!("{key} = {s:?}: {e}")))?),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.used.set(key, v.to_string());
        }
        Ok(value)
    }

    pub fn or<T>(&mut self, key: &str, cli: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        match self.opt(key, cli)? {
            Some(v) => Ok(v),
            None => {
                self.used.set(key, default.to_string());
                Ok(default)
            }
        }
    }

    pub fn req<T>(&mut self, key: &str, cli: Option<T>) -> Result<T>
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        self.opt(key, cli)?
            .ok_or_else(|| invalid(format!("missing --{key} (flag, config file or {})", env_key(key))))
    }

    /// Repeated flag, stored as a comma-separated list.
    pub fn list(&mut self, key: &str, cli: Vec<String>) -> Vec<String> {
        let items = if !cli.is_empty() {
            cli
        } else {
            self.lookup(key)
                .map(|s| s.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect())
                .unwrap_or_default()
        };
        if !items.is_empty() {
            self.used.set(key, items.join(","));
        }
        items
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl Format {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            "svg" => Some(Format::Svg),
            _ => None,
        }
    }
}

/// Where each rendered format goes. Without `--out`, a single format goes to stdout.
pub fn targets(out: &[PathBuf], format: Option<Format>, default: Format) -> Result<Vec<(Option<PathBuf>, Format)>> {
    if out.is_empty() {
        return Ok(vec![(None, format.unwrap_or(default))]);
    }
    out.iter()
        .map(|p| {
            let f = Format::from_path(p).or(format).ok_or_else(|| {
                invalid(format!("cannot infer a format for {}; use a .json/.csv/.svg extension or --format", p.display()))
            })?;
            Ok((Some(p.clone()), f))
        })
        .collect()
}

pub fn parse_list<T>(items: &[String]) -> Result<Vec<T>>
where
    T: FromStr<Err = Error>,
{
    items.iter().map(|s| s.parse::<T>().map_err(|e| anyhow!(e))).collect()
}
