//! Flat key-value settings.
//!
//! Every subcommand declares a table of [`Key`]s. Values come from an
//! INI-style file (`key = value`, `#` or `;` comments) and are overridden by
//! `--key value` flags. Everything is kept as text until a [`Reader`] parses
//! it, so type errors and precondition failures can all name the key.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::{Arg, ArgAction, ArgMatches};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Text,
    Flag,
}

#[derive(Clone, Copy, Debug)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

impl Key {
    pub const fn new(name: &'static str, kind: Kind, default: Option<&'static str>, help: &'static str) -> Self {
        Self { name, kind, default, help }
    }

    /// Flag spelling of the key: underscores become hyphens.
    pub fn long(&self) -> String {
        self.name.replace('_', "-")
    }

    pub fn arg(&self) -> Arg {
        let mut help = self.help.to_string();
        if let Some(d) = self.default {
            help.push_str(&format!(" [default: {d}]"));
        }
        let arg = Arg::new(self.name).long(self.long()).help(help);
        match self.kind {
            Kind::Flag => arg.action(ArgAction::SetTrue),
            Kind::Float | Kind::Int | Kind::Text => arg.value_name("VALUE").allow_hyphen_values(true),
        }
    }
}

/// Human-readable configuration errors, one per offending key.
#[derive(Debug, Default)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "error: {e}")?;
        }
        Ok(())
    }
}

/// Merged settings for one subcommand, before typing.
#[derive(Clone, Debug)]
pub struct Settings {
    pub command: &'static str,
    keys: Vec<Key>,
    explicit: BTreeMap<&'static str, String>,
}

fn key_for(keys: &[Key], name: &str) -> Option<Key> {
    keys.iter().find(|k| k.name == name).copied()
}

impl Settings {
    /// Reads `file` (if any), then lets flags present in `matches` override.
    pub fn load(
        command: &'static str,
        keys: Vec<Key>,
        file: Option<&Path>,
        matches: &ArgMatches,
    ) -> Result<Self, ConfigErrors> {
        let mut errors = Vec::new();
        let mut explicit = BTreeMap::new();
        if let Some(path) = file {
            match std::fs::read_to_string(path) {
                Ok(text) => {
                    for (name, value) in parse_ini(&text, path, &mut errors) {
                        match key_for(&keys, &name) {
                            Some(k) => {
                                explicit.insert(k.name, value);
                            }
                            None => errors.push(format!("unknown key `{name}` in {} for `{command}`", path.display())),
                        }
                    }
                }
                Err(e) => errors.push(format!("config: cannot read {}: {e}", path.display())),
            }
        }
        for k in &keys {
            match k.kind {
                Kind::Flag => {
                    if matches.get_flag(k.name) {
                        explicit.insert(k.name, "true".into());
                    }
                }
                _ => {
                    if let Some(v) = matches.get_one::<String>(k.name) {
                        explicit.insert(k.name, v.clone());
                    }
                }
            }
        }
        if errors.is_empty() {
            Ok(Self { command, keys, explicit })
        } else {
            Err(ConfigErrors(errors))
        }
    }

    #[cfg(test)]
    pub fn from_pairs(command: &'static str, keys: Vec<Key>, pairs: &[(&str, &str)]) -> Result<Self, ConfigErrors> {
        let mut explicit = BTreeMap::new();
        let mut errors = Vec::new();
        for (name, value) in pairs {
            match key_for(&keys, name) {
                Some(k) => {
                    explicit.insert(k.name, value.to_string());
                }
                None => errors.push(format!("unknown key `{name}` for `{command}`")),
            }
        }
        if errors.is_empty() {
            Ok(Self { command, keys, explicit })
        } else {
            Err(ConfigErrors(errors))
        }
    }

    pub fn raw(&self, name: &str) -> Option<&str> {
        self.explicit.get(name).map(String::as_str).or_else(|| key_for(&self.keys, name).and_then(|k| k.default))
    }

    pub fn is_explicit(&self, name: &str) -> bool {
        self.explicit.contains_key(name)
    }

    /// Effective values of every key that has one, sorted by name.
    pub fn canonical(&self) -> BTreeMap<String, String> {
        self.keys.iter().filter_map(|k| self.raw(k.name).map(|v| (k.name.to_string(), v.trim().to_string()))).collect()
    }

    pub fn reader(&self) -> Reader<'_> {
        Reader { settings: self, errors: Vec::new() }
    }
}

fn parse_ini(text: &str, path: &Path, errors: &mut Vec<String>) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => out.push((k.trim().to_string(), v.trim().to_string())),
            _ => errors.push(format!("{}:{}: expected `key = value`, found `{line}`", path.display(), i + 1)),
        }
    }
    out
}

/// Typed access that collects every error instead of stopping at the first.
pub struct Reader<'a> {
    settings: &'a Settings,
    errors: Vec<String>,
}

impl Reader<'_> {
    pub fn fail(&mut self, key: &str, msg: impl fmt::Display) {
        self.errors.push(format!("{key}: {msg}"));
    }

    /// Records a library precondition failure against `key`.
    pub fn check<T>(&mut self, key: &str, r: logspiral::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.fail(key, e);
                None
            }
        }
    }

    pub fn text(&mut self, key: &str) -> Option<String> {
        match self.settings.raw(key) {
            Some(v) => Some(v.trim().to_string()),
            None => {
                self.fail(key, "missing required value");
                None
            }
        }
    }

    pub fn opt_text(&mut self, key: &str) -> Option<String> {
        self.settings.raw(key).map(|v| v.trim().to_string())
    }

    pub fn opt_parse<T: FromStr>(&mut self, key: &str, what: &str) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.settings.raw(key)?;
        match raw.trim().parse::<T>() {
            Ok(v) => Some(v),
            Err(e) => {
                self.fail(key, format!("expected {what}, found `{raw}` ({e})"));
                None
            }
        }
    }

    pub fn parse<T: FromStr>(&mut self, key: &str, what: &str) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        if self.settings.raw(key).is_none() {
            self.fail(key, "missing required value");
            return None;
        }
        self.opt_parse(key, what)
    }

    /// A finite float.
    pub fn float(&mut self, key: &str) -> Option<f64> {
        let v: f64 = self.parse(key, "a number")?;
        if v.is_finite() {
            Some(v)
        } else {
            self.fail(key, format!("{v} is not finite"));
            None
        }
    }

    pub fn positive(&mut self, key: &str) -> Option<f64> {
        let v = self.float(key)?;
        if v > 0.0 {
            Some(v)
        } else {
            self.fail(key, format!("{v} must be positive"));
            None
        }
    }

    pub fn int<T: FromStr>(&mut self, key: &str) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        self.parse(key, "a non-negative integer")
    }

    pub fn flag(&mut self, key: &str) -> bool {
        match self.settings.raw(key).map(str::trim) {
            None | Some("false") | Some("0") | Some("no") => false,
            Some("true") | Some("1") | Some("yes") => true,
            Some(other) => {
                self.fail(key, format!("expected true or false, found `{other}`"));
                false
            }
        }
    }

    /// Comma-separated finite floats.
    pub fn float_list(&mut self, key: &str) -> Option<Vec<f64>> {
        let raw = self.text(key)?;
        let mut out = Vec::new();
        for part in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match part.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(v),
                _ => {
                    self.fail(key, format!("expected a comma-separated list of numbers, found `{part}`"));
                    return None;
                }
            }
        }
        if out.is_empty() {
            self.fail(key, "list is empty");
            return None;
        }
        Some(out)
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.settings.is_explicit(key)
    }

    pub fn finish(self) -> Result<(), ConfigErrors> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(self.errors))
        }
    }
}
