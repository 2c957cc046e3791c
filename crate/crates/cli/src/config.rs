//! Flat key-value configuration with flag overrides.
//!
//! A config file holds one `key = value` entry per line (`#` starts a
//! comment). Keys follow the long-flag spellings; anything outside the
//! documented schema is rejected up front. Flags always win over file
//! entries, and both go through the same typed parsers so error messages
//! do not depend on where a value came from.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

/// Every key any command understands. Instance keys are shared; the rest
/// are read only by the commands that need them, so one file can drive
/// several commands.
pub const SCHEMA: &[&str] = &[
    // instance
    "n",
    "c",
    "scheme",
    "dist",
    "breakpoints",
    "values",
    // command options
    "epsilon",
    "max-rounds",
    "start",
    "profile",
    "applicants",
    "seed",
    "p1",
    "p2",
    "q",
    "q-list",
    "p2-stop",
    "p2-step",
    "k-max",
    "axis",
    "grid",
    "welfare",
    "n-list",
    // output
    "out",
    "out-dir",
];

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: unknown key, unparseable value, missing input.
    Usage(String),
    /// An error surfaced by the engine; classified for the exit code.
    Core(hiregame::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<hiregame::Error> for CliError {
    fn from(e: hiregame::Error) -> Self {
        CliError::Core(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Exit status classes: 1 for argument/validation problems, 2 for
/// numerical or convergence failures.
pub fn exit_code(e: &CliError) -> i32 {
    use hiregame::Error::*;
    match e {
        CliError::Usage(_) => 1,
        CliError::Core(err) => match err {
            InvalidArgument(_) | OutOfRange(_) | Validation(_) | Precondition(_) => 1,
            Numerical(_) | NonConvergence { .. } | SearchExhausted { .. } => 2,
        },
    }
}

/// Merged view of the config file and command-line flags.
#[derive(Debug)]
pub struct Settings {
    file: BTreeMap<String, String>,
    flags: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut file = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    usage(format!(
                        "{}:{}: expected `key = value`, got {raw:?}",
                        path.display(),
                        lineno + 1
                    ))
                })?;
                let key = key.trim().to_string();
                if !SCHEMA.contains(&key.as_str()) {
                    return Err(usage(format!(
                        "{}:{}: unknown key {key:?}",
                        path.display(),
                        lineno + 1
                    )));
                }
                if file.insert(key.clone(), value.trim().to_string()).is_some() {
                    return Err(usage(format!(
                        "{}:{}: duplicate key {key:?}",
                        path.display(),
                        lineno + 1
                    )));
                }
            }
        }
        Ok(Settings {
            file,
            flags: BTreeMap::new(),
        })
    }

    /// Records a present flag; flags shadow config entries.
    pub fn flag(&mut self, key: &str, value: &Option<String>) {
        debug_assert!(SCHEMA.contains(&key));
        if let Some(v) = value {
            self.flags.insert(key.to_string(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.flags
            .get(key)
            .or_else(|| self.file.get(key))
            .map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| usage(format!("missing `{key}` (flag --{key} or config entry)")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, raw: &str) -> Result<T> {
        raw.parse().map_err(|_| {
            usage(format!(
                "bad value for `{key}`: {raw:?} is not a {}",
                std::any::type_name::<T>()
            ))
        })
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key).map(|raw| self.parse(key, raw)).transpose()
    }

    pub fn req_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        self.parse(key, raw)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.get_parsed(key)?.unwrap_or(default))
    }

    pub fn u32_or(&self, key: &str, default: u32) -> Result<u32> {
        Ok(self.get_parsed(key)?.unwrap_or(default))
    }

    /// Comma-separated list, e.g. `0.05,0.1,0.2`.
    pub fn req_list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self.require(key)?.to_string();
        let mut out = Vec::new();
        for tok in raw.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            out.push(self.parse(key, tok)?);
        }
        if out.is_empty() {
            return Err(usage(format!("`{key}` must list at least one value")));
        }
        Ok(out)
    }
}
