use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    /// File path, relative to the config file; must exist.
    Path,
    Float,
    /// Non-negative integer.
    Int,
    Bool,
    Floats,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    /// JSON literal; `None` means optional with no default.
    pub default: Option<&'static str>,
    pub help: &'static str,
}

pub const fn key(name: &'static str, kind: Kind, default: Option<&'static str>, help: &'static str) -> Key {
    Key { name, kind, default, help }
}

pub const SEED: Key = key("seed", Kind::Int, None, "random seed (overridden by --seed)");

fn kind_name(k: Kind) -> String {
    match k {
        Kind::Path => "path".into(),
        Kind::Float => "number".into(),
        Kind::Int => "integer".into(),
        Kind::Bool => "bool".into(),
        Kind::Floats => "number list".into(),
        Kind::Choice(c) => c.join("|"),
    }
}

/// The "Config keys" section of a subcommand's help.
pub fn help_text(keys: &[Key]) -> String {
    let mut s = String::from("Config keys (JSON object):\n");
    for k in keys.iter().chain(std::iter::once(&SEED)) {
        let default = k.default.map_or("optional".to_string(), |d| format!("default {d}"));
        let _ = writeln!(s, "  {:<14} {} [{}; {default}]", k.name, k.help, kind_name(k.kind));
    }
    s
}

pub struct Config {
    pub task: &'static str,
    keys: &'static [Key],
    values: Map<String, Value>,
    seed: Option<u64>,
}

fn check(k: &Key, v: &Value, dir: &Path) -> CliResult<Value> {
    let bad = || CliError::validation(format!("key {:?} must be {}", k.name, kind_name(k.kind)));
    Ok(match k.kind {
        Kind::Path => {
            let p = dir.join(v.as_str().ok_or_else(bad)?);
            if !p.exists() {
                return Err(CliError::validation(format!("key {:?}: {} does not exist", k.name, p.display())));
            }
            Value::String(p.to_string_lossy().into_owned())
        }
        Kind::Float => {
            let f = v.as_f64().ok_or_else(bad)?;
            if !f.is_finite() {
                return Err(bad());
            }
            v.clone()
        }
        Kind::Int => Value::from(v.as_u64().ok_or_else(bad)?),
        Kind::Bool => Value::Bool(v.as_bool().ok_or_else(bad)?),
        Kind::Floats => {
            let a = v.as_array().ok_or_else(bad)?;
            if a.iter().any(|x| x.as_f64().is_none_or(|f| !f.is_finite())) {
                return Err(bad());
            }
            v.clone()
        }
        Kind::Choice(options) => {
            let s = v.as_str().ok_or_else(bad)?;
            if !options.contains(&s) {
                return Err(CliError::validation(format!("key {:?} must be one of {}, got {s:?}", k.name, options.join(", "))));
            }
            v.clone()
        }
    })
}

impl Config {
    /// Parses and validates against `keys`. Unknown keys are rejected.
    pub fn load(task: &'static str, keys: &'static [Key], path: &Path, seed: Option<u64>) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::from_json(task, keys, &text, dir, seed)
    }

    pub fn from_json(task: &'static str, keys: &'static [Key], text: &str, dir: &Path, seed: Option<u64>) -> CliResult<Self> {
        let raw: Value = serde_json::from_str(text).map_err(|e| CliError::validation(format!("config is not JSON: {e}")))?;
        let Value::Object(obj) = raw else {
            return Err(CliError::validation("config must be a JSON object"));
        };
        let mut values = Map::new();
        let mut cfg_seed = None;
        for (name, v) in &obj {
            if name == SEED.name {
                cfg_seed = Some(check(&SEED, v, dir)?.as_u64().expect("checked"));
                continue;
            }
            let k = keys.iter().find(|k| k.name == name).ok_or_else(|| {
                let known: Vec<&str> = keys.iter().map(|k| k.name).collect();
                CliError::validation(format!("unknown key {name:?} for {task}; known keys: {}", known.join(", ")))
            })?;
            values.insert(name.clone(), check(k, v, dir)?);
        }
        for k in keys {
            if let (None, Some(d)) = (values.get(k.name), k.default) {
                let v: Value = serde_json::from_str(d).expect("schema defaults are JSON");
                values.insert(k.name.to_string(), v);
            }
        }
        Ok(Config { task, keys, values, seed: seed.or(cfg_seed) })
    }

    fn get(&self, name: &str) -> Option<&Value> {
        debug_assert!(self.keys.iter().any(|k| k.name == name), "{name} not in the {} schema", self.task);
        self.values.get(name)
    }

    fn required(&self, name: &str) -> CliResult<&Value> {
        self.get(name).ok_or_else(|| CliError::validation(format!("{} needs key {name:?}", self.task)))
    }

    pub fn is_set(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn f64(&self, name: &str) -> CliResult<f64> {
        Ok(self.required(name)?.as_f64().expect("checked"))
    }

    pub fn positive(&self, name: &str) -> CliResult<f64> {
        let v = self.f64(name)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::validation(format!("key {name:?} must be positive, got {v}")))
        }
    }

    pub fn usize(&self, name: &str) -> CliResult<usize> {
        Ok(self.required(name)?.as_u64().expect("checked") as usize)
    }

    /// Integer key that must be at least `min`.
    pub fn at_least(&self, name: &str, min: usize) -> CliResult<usize> {
        let v = self.usize(name)?;
        if v >= min {
            Ok(v)
        } else {
            Err(CliError::validation(format!("key {name:?} must be at least {min}, got {v}")))
        }
    }

    pub fn bool(&self, name: &str) -> CliResult<bool> {
        Ok(self.required(name)?.as_bool().expect("checked"))
    }

    pub fn str(&self, name: &str) -> CliResult<&str> {
        Ok(self.required(name)?.as_str().expect("checked"))
    }

    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        self.get(name).map(|v| v.as_array().expect("checked").iter().map(|x| x.as_f64().expect("checked")).collect())
    }

    pub fn path(&self, name: &str) -> Option<PathBuf> {
        self.get(name).map(|v| PathBuf::from(v.as_str().expect("checked")))
    }

    /// The seed actually used: FNV-1a hash of the task name xor the user seed.
    pub fn seed(&self) -> CliResult<u64> {
        let s = self.seed.ok_or_else(|| CliError::validation(format!("{} is stochastic and needs a seed", self.task)))?;
        Ok(fnv1a(self.task.as_bytes()) ^ s)
    }

    pub fn user_seed(&self) -> Option<u64> {
        self.seed
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEYS: &[Key] = &[
        key("h", Kind::Float, Some("0.5"), "bandwidth"),
        key("mode", Kind::Choice(&["a", "b"]), Some("\"a\""), "mode"),
        key("grid", Kind::Floats, None, "grid"),
    ];

    #[test]
    fn defaults_and_overrides() {
        let c = Config::from_json("t", KEYS, r#"{"h": 2, "seed": 5}"#, Path::new("."), None).unwrap();
        assert_eq!(c.f64("h").unwrap(), 2.0);
        assert_eq!(c.str("mode").unwrap(), "a");
        assert_eq!(c.floats("grid"), None);
        assert_eq!(c.user_seed(), Some(5));
        let c = Config::from_json("t", KEYS, r#"{"seed": 5}"#, Path::new("."), Some(9)).unwrap();
        assert_eq!(c.seed().unwrap(), fnv1a(b"t") ^ 9);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [r#"{"x": 1}"#, r#"{"h": "wide"}"#, r#"{"mode": "c"}"#, r#"{"grid": [1, "a"]}"#, "[1]", "{"] {
            assert!(matches!(Config::from_json("t", KEYS, text, Path::new("."), None), Err(CliError::Validation(_))), "{text}");
        }
    }

    #[test]
    fn help_lists_every_key() {
        let h = help_text(KEYS);
        for k in KEYS {
            assert!(h.contains(k.name));
        }
        assert!(h.contains("seed"));
    }

    #[test]
    fn fnv_reference_value() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
    }
}
