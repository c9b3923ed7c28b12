//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comment
//! x_list = 1e5, 1e6
//! k_list = 1, 2
//! w_rule = paper            # or squared_loglog, or fixed:4900
//! y_grid = -1, 0, 1
//! ell_max = 8               # optional: Thm2 rows
//! moments = 2, 4            # optional: Remark1 rows
//! ks = true                 # optional: Kolmogorov distance rows
//! baseline = true           # optional: unweighted comparison rows
//! d_k_c = 4                 # optional: large-prime diagnostic rows
//! totals = true             # optional: S_k vs predicted main term
//! truncation_prime = 1e7
//! output_dir = reports
//! cache_dir = cache         # optional
//! threads = 4               # 0 = runtime default
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use omega_shift::constants::{loglog, DEFAULT_RADIUS, DEFAULT_TRUNCATION};
use omega_shift::stats::{paper_rule_w, squared_loglog_w};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("key `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How `w` is chosen for each `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WRule {
    /// `w = exp(ln x / (ln ln x)²)`.
    PaperRule,
    /// `w = exp((ln ln x)²)`.
    SquaredLogLog,
    Fixed(u64),
}

impl WRule {
    pub fn resolve(&self, x: u64) -> u64 {
        match *self {
            WRule::PaperRule => paper_rule_w(x),
            WRule::SquaredLogLog => squared_loglog_w(x),
            WRule::Fixed(w) => w.clamp(2, x),
        }
    }
}

impl fmt::Display for WRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WRule::PaperRule => write!(f, "paper"),
            WRule::SquaredLogLog => write!(f, "squared_loglog"),
            WRule::Fixed(w) => write!(f, "fixed:{w}"),
        }
    }
}

impl std::str::FromStr for WRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" | "paper_rule_3_2" => Ok(WRule::PaperRule),
            "squared_loglog" => Ok(WRule::SquaredLogLog),
            other => other
                .strip_prefix("fixed:")
                .ok_or_else(|| format!("unknown w rule `{other}`"))
                .and_then(|v| parse_int(v).map(WRule::Fixed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub x_list: Vec<u64>,
    pub k_list: Vec<u32>,
    pub w_rule: WRule,
    pub y_grid: Vec<f64>,
    pub ell_max: Option<u32>,
    pub moments: Vec<u32>,
    pub ks: bool,
    pub baseline: bool,
    pub d_k_c: Option<f64>,
    pub totals: bool,
    pub truncation_prime: u64,
    pub output_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub threads: usize,
    pub r_max: f64,
}

impl ExperimentConfig {
    /// A config with the required fields set and every optional section off.
    pub fn new(x_list: Vec<u64>, k_list: Vec<u32>, y_grid: Vec<f64>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            x_list,
            k_list,
            w_rule: WRule::PaperRule,
            y_grid,
            ell_max: None,
            moments: Vec::new(),
            ks: false,
            baseline: false,
            d_k_c: None,
            totals: false,
            truncation_prime: DEFAULT_TRUNCATION,
            output_dir: output_dir.into(),
            cache_dir: None,
            threads: 0,
            r_max: DEFAULT_RADIUS,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        // relative paths resolve against the config file's directory
        if let Some(base) = path.parent() {
            if cfg.output_dir.is_relative() {
                cfg.output_dir = base.join(&cfg.output_dir);
            }
            if let Some(c) = cfg.cache_dir.as_mut().filter(|c| c.is_relative()) {
                *c = base.join(&*c);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Syntax {
                    line: idx + 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }

        let value_err = |key: &str, msg: String| ConfigError::Value {
            key: key.to_string(),
            msg,
        };
        let mut take = |key: &str| entries.remove(key);

        let x_list = take("x_list")
            .ok_or(ConfigError::Missing("x_list"))
            .and_then(|v| parse_list(&v, parse_int).map_err(|m| value_err("x_list", m)))?;
        let k_list = take("k_list").ok_or(ConfigError::Missing("k_list")).and_then(|v| {
            parse_list(&v, |s| {
                parse_int(s).and_then(|k| u32::try_from(k).map_err(|e| e.to_string()))
            })
            .map_err(|m| value_err("k_list", m))
        })?;
        let y_grid = take("y_grid")
            .ok_or(ConfigError::Missing("y_grid"))
            .and_then(|v| parse_list(&v, parse_float).map_err(|m| value_err("y_grid", m)))?;
        let output_dir = take("output_dir")
            .map(PathBuf::from)
            .ok_or(ConfigError::Missing("output_dir"))?;

        let mut cfg = ExperimentConfig::new(x_list, k_list, y_grid, output_dir);
        if let Some(v) = take("w_rule") {
            cfg.w_rule = v.parse().map_err(|m| value_err("w_rule", m))?;
        }
        if let Some(v) = take("ell_max") {
            cfg.ell_max = Some(parse_int(&v).map_err(|m| value_err("ell_max", m))? as u32);
        }
        if let Some(v) = take("moments") {
            cfg.moments = parse_list(&v, |s| parse_int(s).map(|m| m as u32)).map_err(|m| value_err("moments", m))?;
        }
        if let Some(v) = take("ks") {
            cfg.ks = parse_bool(&v).map_err(|m| value_err("ks", m))?;
        }
        if let Some(v) = take("baseline") {
            cfg.baseline = parse_bool(&v).map_err(|m| value_err("baseline", m))?;
        }
        if let Some(v) = take("totals") {
            cfg.totals = parse_bool(&v).map_err(|m| value_err("totals", m))?;
        }
        if let Some(v) = take("d_k_c") {
            cfg.d_k_c = Some(parse_float(&v).map_err(|m| value_err("d_k_c", m))?);
        }
        if let Some(v) = take("truncation_prime") {
            cfg.truncation_prime = parse_int(&v).map_err(|m| value_err("truncation_prime", m))?;
        }
        if let Some(v) = take("cache_dir") {
            cfg.cache_dir = Some(PathBuf::from(v));
        }
        if let Some(v) = take("threads") {
            cfg.threads = parse_int(&v).map_err(|m| value_err("threads", m))? as usize;
        }
        if let Some(v) = take("r_max") {
            cfg.r_max = parse_float(&v).map_err(|m| value_err("r_max", m))?;
        }
        if let Some(key) = entries.into_keys().next() {
            return Err(ConfigError::UnknownKey(key));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.x_list.is_empty() {
            return invalid("x_list is empty".into());
        }
        if !self.x_list.windows(2).all(|p| p[0] < p[1]) {
            return invalid("x_list must be strictly ascending".into());
        }
        let x_min = self.x_list[0];
        if x_min < 16 {
            return invalid(format!("x values must be at least 16, got {x_min}"));
        }
        if self.k_list.is_empty() || self.k_list.contains(&0) {
            return invalid("k_list must be non-empty with every k >= 1".into());
        }
        let k_cap = self.r_max * loglog(x_min as f64);
        if let Some(&k) = self.k_list.iter().find(|&&k| f64::from(k) > k_cap) {
            return invalid(format!(
                "k = {k} exceeds R · ln ln x_min = {k_cap:.3} (R = {})",
                self.r_max
            ));
        }
        if self.y_grid.iter().any(|y| !y.is_finite()) {
            return invalid("y_grid values must be finite".into());
        }
        if self.truncation_prime < 100 {
            return invalid("truncation_prime must be at least 100".into());
        }
        if let WRule::Fixed(w) = self.w_rule {
            if w < 2 {
                return invalid("fixed w must be at least 2".into());
            }
        }
        Ok(())
    }

    /// Canonical `key = value` text; the basis of [`Self::hash`].
    pub fn canonical(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line("x_list", join(self.x_list.iter().map(u64::to_string).collect()));
        line("k_list", join(self.k_list.iter().map(u32::to_string).collect()));
        line("w_rule", self.w_rule.to_string());
        line("y_grid", join(self.y_grid.iter().map(|y| format!("{y:?}")).collect()));
        line("ell_max", self.ell_max.map_or("none".into(), |v| v.to_string()));
        line("moments", join(self.moments.iter().map(u32::to_string).collect()));
        line("ks", self.ks.to_string());
        line("baseline", self.baseline.to_string());
        line("d_k_c", self.d_k_c.map_or("none".into(), |v| format!("{v:?}")));
        line("totals", self.totals.to_string());
        line("truncation_prime", self.truncation_prime.to_string());
        line("r_max", format!("{:?}", self.r_max));
        out
    }

    /// SHA-256 of the canonical text, hex encoded. Paths and thread counts
    /// are excluded: they do not change the statistics.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Integer in plain or scientific notation (`100000`, `1e5`, `1_000`).
pub fn parse_int(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("`{s}` is not an integer"))?;
    if f < 0.0 || f.fract() != 0.0 || f > 9.007_199_254_740_992e15 {
        return Err(format!("`{s}` is not a non-negative integer"));
    }
    Ok(f as u64)
}

fn parse_float(s: &str) -> Result<f64, String> {
    s.trim().parse().map_err(|_| format!("`{}` is not a number", s.trim()))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(item)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "x_list = 1e4\nk_list = 2\ny_grid = -1, 0, 1\noutput_dir = out\n";

    #[test]
    fn parses_minimal_and_full() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.x_list, vec![10_000]);
        assert_eq!(cfg.y_grid, vec![-1.0, 0.0, 1.0]);
        assert_eq!(cfg.w_rule, WRule::PaperRule);
        assert_eq!(cfg.truncation_prime, 10_000_000);

        let full = format!(
            "{MINIMAL}w_rule = fixed:4900 # comment\nell_max = 6\nmoments = 2,4\nks = true\n\
             baseline = yes\nd_k_c = 4\ntotals = true\ntruncation_prime = 1e6\ncache_dir = c\nthreads = 3\n"
        );
        let cfg = ExperimentConfig::parse(&full).unwrap();
        assert_eq!(cfg.w_rule, WRule::Fixed(4900));
        assert_eq!(cfg.ell_max, Some(6));
        assert_eq!(cfg.moments, vec![2, 4]);
        assert!(cfg.ks && cfg.baseline && cfg.totals);
        assert_eq!(cfg.d_k_c, Some(4.0));
        assert_eq!(cfg.threads, 3);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(
            ExperimentConfig::parse("k_list = 1\ny_grid = 0\noutput_dir = o\n"),
            Err(ConfigError::Missing("x_list"))
        ));
        assert!(matches!(
            ExperimentConfig::parse(&format!("{MINIMAL}bogus = 1\n")),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse("x_list = 1e6, 1e5\nk_list = 1\ny_grid = 0\noutput_dir = o\n"),
            Err(ConfigError::Invalid(_))
        ));
        // 4 · ln ln 1e4 ≈ 8.9
        assert!(matches!(
            ExperimentConfig::parse("x_list = 1e4\nk_list = 9\ny_grid = 0\noutput_dir = o\n"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse("x_list = 1e4\nk_list = 1\ny_grid = 0\noutput_dir = o\nks = maybe\n"),
            Err(ConfigError::Value { .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("garbage\n"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn hash_ignores_paths_and_threads() {
        let a = ExperimentConfig::parse(MINIMAL).unwrap();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        b.threads = 8;
        assert_eq!(a.hash(), b.hash());
        b.y_grid.push(2.0);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn int_parsing() {
        assert_eq!(parse_int("1e8"), Ok(100_000_000));
        assert_eq!(parse_int("1_000"), Ok(1000));
        assert!(parse_int("1.5").is_err());
        assert!(parse_int("-3").is_err());
    }
}
