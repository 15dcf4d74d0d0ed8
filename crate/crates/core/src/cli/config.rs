use std::path::{Path, PathBuf};

use crate::model::train::CONFIG_KEYS;
use crate::model::TrainConfig;

/// Everything a subcommand may read from a `key = value` config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub input: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub lexicon: Vec<PathBuf>,
    pub model: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub tables: Vec<PathBuf>,
    pub train: TrainConfig,
}

const PATH_KEYS: [&str; 6] = ["input", "out", "lexicon", "model", "dev", "tables"];

fn paths(value: &str) -> Vec<PathBuf> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(PathBuf::from)
        .collect()
}

impl RunConfig {
    /// Every key a config file may set.
    pub fn keys() -> impl Iterator<Item = &'static str> {
        PATH_KEYS.into_iter().chain(CONFIG_KEYS)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let one = |v: &str| Some(PathBuf::from(v.trim()));
        match key {
            "input" => self.input = paths(value),
            "out" => self.out = one(value),
            "lexicon" => self.lexicon = paths(value),
            "model" => self.model = one(value),
            "dev" => self.dev = one(value),
            "tables" => self.tables = paths(value),
            _ if CONFIG_KEYS.contains(&key) => {
                self.train.set(key, value).map_err(|e| e.to_string())?
            }
            _ => return Err(format!("unknown config key {key:?}")),
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        Ok(cfg)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    RunConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}
