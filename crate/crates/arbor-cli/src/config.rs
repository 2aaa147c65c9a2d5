//! Resolved run configuration and the strict key=value config reader.
//!
//! Precedence, lowest to highest: built-in defaults, then the config file,
//! then environment variables (prefix `ARBOR_`), then explicit flags. The
//! reader rejects unknown keys outright and reports parse problems with
//! line and column; validation failures name the offending key.

use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

/// Default seed for the named Monte Carlo generator (chacha8).
pub const DEFAULT_SEED: u64 = 0x5EED_CAFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Format, ConfigError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(ConfigError::Invalid {
                key: "format".into(),
                msg: format!("expected 'csv' or 'json', got '{other}'"),
            }),
        }
    }
}

/// Everything a run needs, fully resolved. Serialized verbatim into the
/// reproducibility header of every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub rank: usize,
    pub epsilon: f64,
    pub t: f64,
    pub t_prime: Option<f64>,
    /// Single working level, or the low end when `level_hi` is present.
    pub level: usize,
    pub level_hi: Option<usize>,
    pub n_max: usize,
    pub tolerance: f64,
    pub experiment: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub cache_dir: Option<PathBuf>,
    /// Worker pool size; 0 leaves the runtime default.
    pub threads: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            rank: 2,
            epsilon: 1.0,
            t: 0.25,
            t_prime: None,
            level: 2,
            level_hi: None,
            n_max: 12,
            tolerance: 0.05,
            experiment: None,
            out: None,
            format: Format::Csv,
            cache_dir: None,
            threads: 0,
            seed: DEFAULT_SEED,
        }
    }
}

/// Keys read from a config file or the command line; `None` means "not
/// given here", so layers merge by overlaying the `Some` fields.
#[derive(Debug, Clone, Default)]
pub struct Overlay {
    pub rank: Option<usize>,
    pub epsilon: Option<f64>,
    pub t: Option<f64>,
    pub t_prime: Option<f64>,
    pub level: Option<(usize, Option<usize>)>,
    pub n_max: Option<usize>,
    pub tolerance: Option<f64>,
    pub experiment: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub cache_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overlay) {
        if let Some(v) = o.rank {
            self.rank = v;
        }
        if let Some(v) = o.epsilon {
            self.epsilon = v;
        }
        if let Some(v) = o.t {
            self.t = v;
        }
        if let Some(v) = o.t_prime {
            self.t_prime = Some(v);
        }
        if let Some((lo, hi)) = o.level {
            self.level = lo;
            self.level_hi = hi;
        }
        if let Some(v) = o.n_max {
            self.n_max = v;
        }
        if let Some(v) = o.tolerance {
            self.tolerance = v;
        }
        if let Some(v) = &o.experiment {
            self.experiment = Some(v.clone());
        }
        if let Some(v) = &o.out {
            self.out = Some(v.clone());
        }
        if let Some(v) = o.format {
            self.format = v;
        }
        if let Some(v) = &o.cache_dir {
            self.cache_dir = Some(v.clone());
        }
        if let Some(v) = o.threads {
            self.threads = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("unknown config key '{key}' at line {line}, column {col}")]
    UnknownKey { key: String, line: usize, col: usize },

    #[error("invalid value for '{key}': {msg}")]
    Invalid { key: String, msg: String },

    #[error("precondition violated for '{key}': {msg}")]
    Precondition { key: String, msg: String },
}

/// Experiment ids accepted in configs: the subcommand names plus the two
/// pairing families that carry their own parameter ranges.
const KNOWN_EXPERIMENTS: &[&str] = &[
    "phi", "sigma", "gram", "scan-positivity", "equi", "pairs", "bml", "schur", "rd",
    "besov", "poisson", "mixing", "selftest", "ht", "kt",
];

/// Parses a level spec: a single integer or an inclusive range `lo..hi`.
pub fn parse_level_spec(s: &str) -> Result<(usize, Option<usize>), ConfigError> {
    let bad = |msg: String| ConfigError::Invalid { key: "level".into(), msg };
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad(format!("bad range start '{lo}'")))?;
        let hi: usize = hi.trim().parse().map_err(|_| bad(format!("bad range end '{hi}'")))?;
        if hi < lo {
            return Err(bad(format!("range {lo}..{hi} is empty")));
        }
        Ok((lo, Some(hi)))
    } else {
        let k: usize = s.trim().parse().map_err(|_| bad(format!("not an integer: '{s}'")))?;
        Ok((k, None))
    }
}

/// Parses a seed: decimal, or hex with a 0x prefix.
pub fn parse_seed(s: &str) -> Result<u64, ConfigError> {
    let parsed = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        s.parse()
    };
    parsed.map_err(|_| ConfigError::Invalid {
        key: "seed".into(),
        msg: format!("not a u64 (decimal or 0x hex): '{s}'"),
    })
}

fn parse_f64(key: &str, s: &str) -> Result<f64, ConfigError> {
    s.parse().map_err(|_| ConfigError::Invalid {
        key: key.into(),
        msg: format!("not a number: '{s}'"),
    })
}

fn parse_usize(key: &str, s: &str) -> Result<usize, ConfigError> {
    s.parse().map_err(|_| ConfigError::Invalid {
        key: key.into(),
        msg: format!("not a non-negative integer: '{s}'"),
    })
}

/// Reads `key = value` text into an overlay. Blank lines and `#` comments
/// are skipped; everything else must be a known key, or the read fails.
pub fn parse_config(text: &str) -> Result<Overlay, ConfigError> {
    let mut o = Overlay::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        let body = line.trim_start();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let indent = line.len() - body.len();
        let Some(eq) = body.find('=') else {
            return Err(ConfigError::Parse {
                line: line_no,
                col: indent + body.len() + 1,
                msg: "expected 'key = value'".into(),
            });
        };
        let key = body[..eq].trim();
        let value = body[eq + 1..].trim();
        if key.is_empty() {
            return Err(ConfigError::Parse {
                line: line_no,
                col: indent + 1,
                msg: "empty key before '='".into(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Parse {
                line: line_no,
                col: indent + eq + 2,
                msg: format!("empty value for '{key}'"),
            });
        }
        match key {
            "r" | "rank" => o.rank = Some(parse_usize("rank", value)?),
            "epsilon" => o.epsilon = Some(parse_f64("epsilon", value)?),
            "t" => o.t = Some(parse_f64("t", value)?),
            "t_prime" => o.t_prime = Some(parse_f64("t_prime", value)?),
            "level" => o.level = Some(parse_level_spec(value)?),
            "n_max" => o.n_max = Some(parse_usize("n_max", value)?),
            "tol" | "tolerance" => o.tolerance = Some(parse_f64("tolerance", value)?),
            "experiment" => o.experiment = Some(value.to_string()),
            "out" => o.out = Some(PathBuf::from(value)),
            "format" => o.format = Some(Format::parse(value)?),
            "cache_dir" => o.cache_dir = Some(PathBuf::from(value)),
            "threads" => o.threads = Some(parse_usize("threads", value)?),
            "seed" => o.seed = Some(parse_seed(value)?),
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                    line: line_no,
                    col: indent + 1,
                })
            }
        }
    }
    Ok(o)
}

/// Checks the resolved configuration. Rank, scale, radius, and tolerance
/// carry hard invariants; the experiment id must be known, and the `ht`
/// pairing is confined to the parameter range where its form stays
/// positive.
pub fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    if cfg.rank < 2 {
        return Err(ConfigError::Invalid {
            key: "rank".into(),
            msg: format!("rank must be at least 2, got {}", cfg.rank),
        });
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return Err(ConfigError::Invalid {
            key: "epsilon".into(),
            msg: format!("visual scale must be positive and finite, got {}", cfg.epsilon),
        });
    }
    if !cfg.t.is_finite() {
        return Err(ConfigError::Invalid {
            key: "t".into(),
            msg: format!("parameter must be finite, got {}", cfg.t),
        });
    }
    if let Some(tp) = cfg.t_prime {
        if !tp.is_finite() {
            return Err(ConfigError::Invalid {
                key: "t_prime".into(),
                msg: format!("parameter must be finite, got {tp}"),
            });
        }
    }
    if cfg.n_max < 1 {
        return Err(ConfigError::Invalid {
            key: "n_max".into(),
            msg: "radius bound must be at least 1".into(),
        });
    }
    if !(cfg.tolerance > 0.0 && cfg.tolerance.is_finite()) {
        return Err(ConfigError::Invalid {
            key: "tolerance".into(),
            msg: format!("tolerance must be positive, got {}", cfg.tolerance),
        });
    }
    if let Some(hi) = cfg.level_hi {
        if hi < cfg.level {
            return Err(ConfigError::Invalid {
                key: "level".into(),
                msg: format!("range {}..{hi} is empty", cfg.level),
            });
        }
    }
    if let Some(exp) = &cfg.experiment {
        if !KNOWN_EXPERIMENTS.contains(&exp.as_str()) {
            return Err(ConfigError::Invalid {
                key: "experiment".into(),
                msg: format!("unknown experiment id '{exp}'"),
            });
        }
        if exp == "ht" && !(cfg.t > 0.0 && cfg.t <= 0.5) {
            return Err(ConfigError::Precondition {
                key: "t".into(),
                msg: format!(
                    "experiment 'ht' needs 0 < t <= 1/2: the pairing form \
                     loses positivity past the midpoint (got t = {})",
                    cfg.t
                ),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_resolves_to_defaults() {
        let o = parse_config("").unwrap();
        let mut cfg = RunConfig::default();
        cfg.apply(&o);
        validate(&cfg).unwrap();
        assert_eq!(cfg.rank, 2);
        assert_eq!(cfg.epsilon, 1.0);
        assert_eq!(cfg.t, 0.25);
        assert_eq!(cfg.level, 2);
        assert_eq!(cfg.n_max, 12);
        assert_eq!(cfg.tolerance, 0.05);
        assert_eq!(cfg.format, Format::Csv);
    }

    #[test]
    fn keys_overlay_in_order() {
        let file = parse_config("rank = 3\nt = 0.4\nlevel = 1..3\nseed = 0xff\n").unwrap();
        let flags = Overlay { t: Some(0.1), ..Overlay::default() };
        let mut cfg = RunConfig::default();
        cfg.apply(&file);
        cfg.apply(&flags);
        assert_eq!(cfg.rank, 3);
        assert_eq!(cfg.t, 0.1);
        assert_eq!((cfg.level, cfg.level_hi), (1, Some(3)));
        assert_eq!(cfg.seed, 255);
    }

    #[test]
    fn rank_one_is_rejected_by_name() {
        let o = parse_config("rank = 1\n").unwrap();
        let mut cfg = RunConfig::default();
        cfg.apply(&o);
        let err = validate(&cfg).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "rank"));
    }

    #[test]
    fn unknown_key_is_rejected_with_position() {
        let err = parse_config("rank = 2\n  granularity = 9\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey { key: "granularity".into(), line: 2, col: 3 }
        );
    }

    #[test]
    fn missing_separator_reports_line_and_column() {
        let err = parse_config("rank 2\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }));
    }

    #[test]
    fn ht_past_the_midpoint_is_a_precondition_error() {
        let o = parse_config("t = 0.75\nexperiment = ht\n").unwrap();
        let mut cfg = RunConfig::default();
        cfg.apply(&o);
        let err = validate(&cfg).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ConfigError::Precondition { .. }));
        assert!(msg.contains("positivity"), "message must name the obstruction: {msg}");
    }

    #[test]
    fn bad_values_name_their_key() {
        for (text, key) in [
            ("epsilon = fast\n", "epsilon"),
            ("n_max = -3\n", "n_max"),
            ("level = 4..2\n", "level"),
            ("format = yaml\n", "format"),
            ("seed = 0xzz\n", "seed"),
        ] {
            match parse_config(text).unwrap_err() {
                ConfigError::Invalid { key: k, .. } => assert_eq!(k, key),
                other => panic!("expected Invalid for {text:?}, got {other:?}"),
            }
        }
    }
}
