//! Plain-text `key = value` files shared by the robot description and the
//! run configuration.
//!
//! One assignment per line. Blank lines and anything after `#` are ignored.
//! Keys are unique; later duplicates are rejected rather than silently
//! overriding earlier ones.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!(
                    "line {}: expected 'key = value', got '{}'",
                    lineno + 1,
                    raw
                ))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::config(format!("line {}: empty key", lineno + 1)));
            }
            if entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::config(format!(
                    "line {}: duplicate key '{}'",
                    lineno + 1,
                    key
                )));
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses `key` into `T`, returning `Ok(None)` when the key is absent.
    pub fn parsed<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                Error::config(format!("key '{}': cannot parse '{}': {}", key, raw, e))
            }),
        }
    }

    /// Overwrites `slot` when `key` is present.
    pub fn read_into<T>(&self, key: &str, slot: &mut T) -> Result<()>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = self.parsed(key)? {
            *slot = v;
        }
        Ok(())
    }

    /// Reads a comma-separated triple such as `1.0, 0, -0.5`.
    pub fn read_vec3(&self, key: &str, slot: &mut [f64; 3]) -> Result<()> {
        if let Some(raw) = self.get(key) {
            *slot = parse_vec3(raw).map_err(|e| Error::config(format!("key '{}': {}", key, e)))?;
        }
        Ok(())
    }

    /// Fails on the first key that is not in `known`.
    pub fn reject_unknown(&self, known: impl Fn(&str) -> bool) -> Result<()> {
        for key in self.keys() {
            if !known(key) {
                return Err(Error::config(format!("unknown key '{}'", key)));
            }
        }
        Ok(())
    }
}

pub fn parse_vec3(raw: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!(
            "expected three comma-separated numbers, got '{}'",
            raw
        ));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .parse::<f64>()
            .map_err(|e| format!("cannot parse '{}': {}", part, e))?;
    }
    Ok(out)
}

pub fn format_vec3(v: &[f64; 3]) -> String {
    format!("{}, {}, {}", v[0], v[1], v[2])
}
