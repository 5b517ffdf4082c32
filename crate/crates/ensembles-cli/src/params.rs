//! Flat parameter maps: `key = value` config files merged with command-line
//! flags, plus typed accessors.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::CliError;

/// Parameters for one run, after the config file and the flags are merged.
#[derive(Debug, Default, Clone)]
pub struct Params {
    values: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`, got `{}`", i + 1, raw.trim())))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

impl Params {
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn parse<T: FromStr>(&self, key: &str, v: &str) -> Result<T, CliError> {
        v.parse().map_err(|_| CliError::Usage(format!("--{key}: cannot parse `{v}`")))
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.raw(key).map(|v| self.parse(key, v)).transpose()
    }

    pub fn req<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.opt(key)?.ok_or_else(|| CliError::Usage(format!("--{key} is required")))
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key) {
            None => Ok(false),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(CliError::Usage(format!("--{key}: expected true or false, got `{v}`"))),
        }
    }

    /// The master seed, which stochastic commands cannot run without.
    pub fn seed(&self) -> Result<u64, CliError> {
        self.opt("seed")?.ok_or_else(|| CliError::Usage("--seed is required for stochastic commands".into()))
    }

    /// A comma-separated list, or `lo:hi:step` (inclusive) for reals.
    pub fn reals(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_reals(key, v),
        }
    }

    /// A comma-separated list, or `lo:hi` (inclusive) for integers.
    pub fn ints<T: FromStr + Copy + TryFrom<i64>>(&self, key: &str, default: &[T]) -> Result<Vec<T>, CliError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_ints(key, v),
        }
    }
}

pub fn parse_reals(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("--{key}: cannot parse `{v}` as a list or lo:hi:step grid"));
    if v.contains(':') {
        let parts: Vec<f64> = v.split(':').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        let [lo, hi, step] = parts[..] else { return Err(bad()) };
        if !(step > 0.0) || hi < lo {
            return Err(CliError::Usage(format!("--{key}: grid needs lo ≤ hi and step > 0, got `{v}`")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| lo + i as f64 * step).collect());
    }
    v.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

pub fn parse_ints<T: FromStr + Copy + TryFrom<i64>>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    let bad = || CliError::Usage(format!("--{key}: cannot parse `{v}` as an integer list or lo:hi range"));
    if let Some((lo, hi)) = v.split_once(':') {
        let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
        if hi < lo {
            return Err(bad());
        }
        return (lo..=hi).map(|i| T::try_from(i).map_err(|_| bad())).collect();
    }
    v.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}
