use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// One recognised parameter of a subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    /// Empty means "unset"; the command picks its own fallback.
    pub default: &'static str,
    pub help: &'static str,
}

pub const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, default, help }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or config; exit 64.
    Usage(String),
    Core(touchpoint_core::Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<touchpoint_core::Error> for CliError {
    fn from(e: touchpoint_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

/// Fully resolved parameters of one run: defaults, then the config file,
/// then command-line flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    pub values: Vec<(String, String)>,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

/// Parses `key=value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return usage(format!("config line {}: expected key=value, got '{line}'", ln + 1));
        };
        let k = k.trim();
        if k.is_empty() {
            return usage(format!("config line {}: empty key", ln + 1));
        }
        pairs.push((k.to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

impl RunConfig {
    pub fn resolve(
        command: &str,
        keys: &[Key],
        file: Option<&Path>,
        flags: &[(String, String)],
        out: Option<PathBuf>,
        seed_flag: Option<u64>,
    ) -> Result<RunConfig, CliError> {
        let mut values: Vec<(String, String)> =
            keys.iter().map(|k| (k.name.to_string(), k.default.to_string())).collect();
        let mut seed = 0u64;
        let mut set = |k: &str, v: &str, seed: &mut u64| -> Result<(), CliError> {
            if k == "seed" {
                *seed = v.parse().map_err(|_| CliError::Usage(format!("bad seed '{v}'")))?;
                return Ok(());
            }
            match values.iter_mut().find(|(name, _)| name == k) {
                Some(slot) => {
                    slot.1 = v.to_string();
                    Ok(())
                }
                None => usage(format!("unknown key '{k}' for {command}")),
            }
        };
        if let Some(path) = file {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            for (k, v) in parse_config_text(&text)? {
                set(&k, &v, &mut seed)?;
            }
        }
        for (k, v) in flags {
            set(k, v, &mut seed)?;
        }
        if let Some(s) = seed_flag {
            seed = s;
        }
        Ok(RunConfig { command: command.to_string(), values, out, seed })
    }

    pub fn raw(&self, k: &str) -> &str {
        self.values
            .iter()
            .find(|(name, _)| name == k)
            .map(|(_, v)| v.as_str())
            .unwrap_or_else(|| panic!("key '{k}' not declared for {}", self.command))
    }

    /// `None` when the value is empty.
    pub fn opt(&self, k: &str) -> Option<&str> {
        Some(self.raw(k)).filter(|v| !v.is_empty())
    }

    pub fn parse<T: FromStr>(&self, k: &str) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        let v = self.raw(k);
        v.parse().map_err(|e| CliError::Usage(format!("bad value for {k} '{v}': {e}")))
    }

    pub fn real(&self, k: &str) -> Result<f64, CliError> {
        touchpoint_core::text::parse_real(self.raw(k)).map_err(|e| CliError::Usage(format!("bad value for {k}: {e}")))
    }

    pub fn real_opt(&self, k: &str) -> Result<Option<f64>, CliError> {
        match self.opt(k) {
            None => Ok(None),
            Some(_) => self.real(k).map(Some),
        }
    }

    /// Comma-separated reals.
    pub fn reals(&self, k: &str) -> Result<Vec<f64>, CliError> {
        self.raw(k)
            .split(',')
            .map(|t| {
                touchpoint_core::text::parse_real(t).map_err(|e| CliError::Usage(format!("bad value in {k}: {e}")))
            })
            .collect()
    }

    pub fn flag(&self, k: &str) -> Result<bool, CliError> {
        match self.raw(k) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => usage(format!("bad value for {k} '{v}': expected true or false")),
        }
    }

    /// The `# config:` echo that opens every output.
    pub fn header(&self) -> String {
        let mut s = format!("# config: command={}\n", self.command);
        for (k, v) in &self.values {
            s.push_str(&format!("# config: {k}={v}\n"));
        }
        s.push_str(&format!("# config: seed={}\n", self.seed));
        s
    }
}
