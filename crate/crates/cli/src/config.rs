//! `key = value` run configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use regsel_core::crossval::{DEFAULT_REPLICATIONS, DEFAULT_SEED, DEFAULT_TRAIN_FRACTION};
use regsel_core::dataset::{FactorCoercion, DEFAULT_MAX_LEVELS};
use regsel_core::selection::Direction;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepwiseStart {
    Full,
    Intercept,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Tables merged by id in the given order; one of them carries the response.
    pub tables: Vec<PathBuf>,
    pub schema: PathBuf,
    pub na_ratio: f64,
    pub factors: FactorCoercion,
    pub max_levels: usize,
    pub vstar: f64,
    pub modes: Vec<Direction>,
    pub k: f64,
    pub stepwise_start: StepwiseStart,
    /// 1-based rows of the cleaned, id-sorted data to drop in the rerun.
    pub exclude_rows: Vec<usize>,
    pub replications: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub workers: usize,
    pub top_m: usize,
    pub log_response: bool,
    pub chosen_model: Direction,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tables: Vec::new(),
            schema: PathBuf::new(),
            na_ratio: 0.01,
            factors: FactorCoercion::Explicit(Vec::new()),
            max_levels: DEFAULT_MAX_LEVELS,
            vstar: 10.0,
            modes: Direction::ALL.to_vec(),
            k: 2.0,
            stepwise_start: StepwiseStart::Full,
            exclude_rows: Vec::new(),
            replications: DEFAULT_REPLICATIONS,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            seed: DEFAULT_SEED,
            workers: 0,
            top_m: 15,
            log_response: true,
            chosen_model: Direction::Forward,
            out: PathBuf::from("regsel-out"),
        }
    }
}

fn list(value: &str) -> Vec<&str> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_num<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Line {
        line,
        message: format!("`{key}` expects a number, got `{value}`"),
    })
}

pub fn parse_rows(text: &str) -> Result<Vec<usize>, String> {
    let mut rows = BTreeSet::new();
    for tok in list(text) {
        let r: usize = tok.parse().map_err(|_| format!("bad row number `{tok}`"))?;
        if r == 0 {
            return Err("row numbers are 1-based".into());
        }
        rows.insert(r);
    }
    Ok(rows.into_iter().collect())
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::Line {
            line,
            message: format!("`{key}` expects true or false, got `{value}`"),
        }),
    }
}

impl RunConfig {
    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        let resolve = |p: &str| base.join(p);
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Line {
                    line,
                    message: "expected `key = value`".into(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            let bad = |message: String| ConfigError::Line { line, message };
            match key {
                "tables" => cfg.tables = list(value).into_iter().map(resolve).collect(),
                "schema" => cfg.schema = resolve(value),
                "na_ratio" => cfg.na_ratio = parse_num(line, key, value)?,
                "factors" => {
                    cfg.factors = if value == "auto" {
                        FactorCoercion::AutoBinary
                    } else {
                        FactorCoercion::Explicit(list(value).into_iter().map(String::from).collect())
                    }
                }
                "max_levels" => cfg.max_levels = parse_num(line, key, value)?,
                "vstar" => cfg.vstar = parse_num(line, key, value)?,
                "modes" => {
                    cfg.modes = list(value)
                        .into_iter()
                        .filter(|m| *m != "none")
                        .map(|m| m.parse().map_err(|e: regsel_core::Error| bad(e.to_string())))
                        .collect::<Result<_, _>>()?;
                    cfg.modes.sort();
                    cfg.modes.dedup();
                }
                "k" => cfg.k = parse_num(line, key, value)?,
                "stepwise_start" => {
                    cfg.stepwise_start = match value {
                        "full" => StepwiseStart::Full,
                        "intercept" => StepwiseStart::Intercept,
                        _ => return Err(bad(format!("stepwise_start must be full or intercept, got `{value}`"))),
                    }
                }
                "exclude_rows" => cfg.exclude_rows = parse_rows(value).map_err(bad)?,
                "replications" => cfg.replications = parse_num(line, key, value)?,
                "train_fraction" => cfg.train_fraction = parse_num(line, key, value)?,
                "seed" => cfg.seed = parse_num(line, key, value)?,
                "workers" => cfg.workers = parse_num(line, key, value)?,
                "top_m" => cfg.top_m = parse_num(line, key, value)?,
                "log_response" => cfg.log_response = parse_bool(line, key, value)?,
                "chosen_model" => {
                    cfg.chosen_model = value.parse().map_err(|e: regsel_core::Error| bad(e.to_string()))?
                }
                "out" => cfg.out = resolve(value),
                _ => return Err(bad(format!("unknown key `{key}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        if self.tables.is_empty() {
            return invalid("no input tables given");
        }
        if self.schema.as_os_str().is_empty() {
            return invalid("no schema given");
        }
        if !(0.0..=1.0).contains(&self.na_ratio) {
            return invalid("na_ratio must lie in [0, 1]");
        }
        if !(self.vstar > 1.0) {
            return invalid("vstar must exceed 1");
        }
        if !(self.k > 0.0) {
            return invalid("k must be positive");
        }
        if self.replications == 0 {
            return invalid("replications must be at least 1");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return invalid("train_fraction must lie in (0, 1)");
        }
        if self.top_m == 0 {
            return invalid("top_m must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_reference_constants() {
        let c = RunConfig::default();
        assert_eq!(
            (c.na_ratio, c.vstar, c.k, c.replications, c.train_fraction, c.seed),
            (0.01, 10.0, 2.0, 8000, 0.8, 20883271)
        );
        assert_eq!(c.modes, Direction::ALL);
        assert_eq!(c.stepwise_start, StepwiseStart::Full);
    }

    #[test]
    fn parses_keys_and_resolves_paths() {
        let text = "# run\ntables = a.tsv, b.tsv\nschema = s.schema\nmodes = both, forward\n\
                    exclude_rows = 9, 3\nfactors = auto\nlog_response = no\nout = res\n";
        let c = RunConfig::parse(text, Path::new("/data")).unwrap();
        assert_eq!(c.tables, [PathBuf::from("/data/a.tsv"), PathBuf::from("/data/b.tsv")]);
        assert_eq!(c.modes, [Direction::Forward, Direction::Both]);
        assert_eq!(c.exclude_rows, [3, 9]);
        assert_eq!(c.factors, FactorCoercion::AutoBinary);
        assert!(!c.log_response);
        assert_eq!(c.out, PathBuf::from("/data/res"));
    }

    #[test]
    fn rejects_bad_lines() {
        let base = Path::new(".");
        assert!(RunConfig::parse("tables = a\nschema = s\nbogus = 1\n", base).is_err());
        assert!(RunConfig::parse("tables = a\nschema = s\nvstar = ten\n", base).is_err());
        assert!(RunConfig::parse("tables = a\nschema = s\nexclude_rows = 0\n", base).is_err());
        assert!(RunConfig::parse("tables = a\nschema = s\nno equals\n", base).is_err());
        assert!(RunConfig::parse("schema = s\n", base).is_err());
    }
}
