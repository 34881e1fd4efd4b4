use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;

use shortdot_core::io::parse_key_values;
use shortdot_core::{ErrorClass, StrategyId};

use crate::CommonArgs;

pub const THREADS_ENV: &str = "SHORTDOT_THREADS";

/// A bad flag, config entry or environment value.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// A result that ran but does not hold, e.g. a failed self check.
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

/// 2 validation, 3 numerical, 4 I/O.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<shortdot_core::Error>() {
            return match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::Numerical => 3,
                ErrorClass::Io => 4,
            };
        }
        if cause.is::<Usage>() {
            return 2;
        }
        if cause.is::<CheckFailed>() {
            return 3;
        }
        if cause.is::<std::io::Error>() {
            return 4;
        }
    }
    1
}

/// Flags merged over the optional config file.
pub struct Settings {
    flags: CommonArgs,
    file: BTreeMap<String, String>,
    threads: Option<usize>,
}

/// Keys a config file may set.
const KNOWN_KEYS: &[&str] = &[
    "p", "k", "m", "n", "mu", "trials", "seed", "strategy", "s", "out", "a", "x", "code", "responders",
    "max_errors", "corrupt", "generator", "m_range", "p_values",
];

impl Settings {
    pub fn load(flags: &CommonArgs) -> anyhow::Result<Self> {
        let file = match &flags.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        let threads = match std::env::var(THREADS_ENV) {
            Ok(raw) => match raw.trim().parse::<usize>() {
                Ok(n) if n >= 1 => Some(n),
                _ => return Err(usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))),
            },
            Err(_) => None,
        };
        Ok(Settings { flags: flags.clone(), file, threads })
    }

    /// `flag`, else the config entry `key`, parsed.
    pub fn get<T: FromStr>(&self, key: &str, flag: Option<T>) -> anyhow::Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| usage(format!("config entry {key}={raw} is not valid"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str, flag: Option<T>) -> anyhow::Result<T> {
        self.get(key, flag)?.ok_or_else(|| usage(format!("missing --{}", key.replace('_', "-"))))
    }

    pub fn p(&self) -> anyhow::Result<usize> {
        self.require("p", self.flags.p)
    }

    pub fn m(&self) -> anyhow::Result<Option<usize>> {
        self.get("m", self.flags.m)
    }

    pub fn n(&self) -> anyhow::Result<Option<usize>> {
        self.get("n", self.flags.n)
    }

    /// `None` for "auto".
    pub fn k(&self) -> anyhow::Result<Option<usize>> {
        match self.get::<String>("k", self.flags.k.clone())? {
            None => Err(usage("missing --k (an integer or \"auto\")")),
            Some(raw) if raw == "auto" => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| usage(format!("--k must be an integer or \"auto\", got {raw:?}"))),
        }
    }

    pub fn model(&self) -> anyhow::Result<shortdot_core::DelayModel> {
        let mu = self.get("mu", self.flags.mu)?.unwrap_or(5.0);
        Ok(shortdot_core::DelayModel::new(mu)?)
    }

    pub fn trials(&self, default: usize) -> anyhow::Result<usize> {
        Ok(self.get("trials", self.flags.trials)?.unwrap_or(default))
    }

    pub fn seed(&self, default: u64) -> anyhow::Result<u64> {
        Ok(self.get("seed", self.flags.seed)?.unwrap_or(default))
    }

    pub fn s(&self) -> anyhow::Result<Option<usize>> {
        self.get("s", self.flags.s)
    }

    pub fn out(&self) -> anyhow::Result<Option<PathBuf>> {
        self.get("out", self.flags.out.clone())
    }

    pub fn strategies(&self) -> anyhow::Result<Option<Vec<StrategyId>>> {
        let Some(raw) = self.get::<String>("strategy", self.flags.strategy.clone())? else {
            return Ok(None);
        };
        raw.split(',')
            .map(|name| name.trim().parse::<StrategyId>().map_err(anyhow::Error::from))
            .collect::<anyhow::Result<Vec<_>>>()
            .map(Some)
    }

    pub fn threads(&self) -> Option<usize> {
        self.threads
    }
}

fn read_config(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let map = parse_key_values(&text, path)?;
    if let Some(key) = map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(usage(format!("unknown config key {key:?} in {}", path.display())));
    }
    Ok(map)
}

/// "3,1,5" or "2-6" (or a mix) of 1-based indices, returned 0-based.
pub fn parse_index_list(raw: &str, upper: usize) -> anyhow::Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (parse_index(a)?, parse_index(b)?),
            None => {
                let i = parse_index(part)?;
                (i, i)
            }
        };
        if lo == 0 || hi > upper || lo > hi {
            return Err(usage(format!("index range {part:?} outside 1..={upper}")));
        }
        out.extend(lo - 1..hi);
    }
    Ok(out)
}

fn parse_index(raw: &str) -> anyhow::Result<usize> {
    raw.trim().parse().map_err(|_| usage(format!("bad index {raw:?}")))
}

/// Inclusive "a-b".
pub fn parse_range(raw: &str) -> anyhow::Result<(usize, usize)> {
    let (a, b) = raw.split_once('-').ok_or_else(|| usage(format!("expected a range a-b, got {raw:?}")))?;
    let (a, b) = (parse_index(a)?, parse_index(b)?);
    if a == 0 || a > b {
        return Err(usage(format!("empty or invalid range {raw:?}")));
    }
    Ok((a, b))
}
