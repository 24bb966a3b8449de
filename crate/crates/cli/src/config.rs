//! Plain-text `key = value` configuration with `[section]` headers.
//!
//! ```text
//! # comment
//! [grid]
//! R = 1
//! n = 257
//! [params]
//! m = 0.5
//! ```
//!
//! Keys may also appear before the first header. Flag overrides are applied
//! after the file and win over it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

/// `(section, key, meaning)` for every accepted key.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("grid", "R", "half-width of the data interval"),
    ("grid", "n", "nodes per null axis"),
    ("grid", "center", "centre of the data interval"),
    ("params", "m", "mass"),
    ("params", "lambda", "coupling"),
    ("solver", "scheme", "picard or marching"),
    ("solver", "tol", "Picard sup-norm tolerance"),
    ("solver", "max_iter", "Picard iteration cap"),
    ("solver", "epsilon", "smallness / window-charge threshold"),
    ("solver", "span", "forward or full"),
    ("data", "data", "zero, gaussian, box, box_family, sobolev_random or file"),
    ("data", "file", "CSV with columns x,re_f,im_f,re_g,im_g"),
    ("data", "seed", "seed for random profiles"),
    ("data", "f_amplitude", "amplitude of the f profile"),
    ("data", "f_width", "Gaussian width of f"),
    ("data", "f_center", "centre of f"),
    ("data", "f_wavenumber", "carrier wavenumber of f"),
    ("data", "g_amplitude", "amplitude of the g profile"),
    ("data", "g_width", "Gaussian width of g"),
    ("data", "g_center", "centre of g"),
    ("data", "g_wavenumber", "carrier wavenumber of g"),
    ("data", "box_a", "left end of the box / random profile support"),
    ("data", "box_b", "right end of the box / random profile support"),
    ("data", "box_height", "height of the box"),
    ("data", "box_width", "width of the unit-charge box"),
    ("data", "sobolev_s", "regularity of the random profile"),
    ("data", "sobolev_delta", "extra decay of the random profile"),
    ("data", "sobolev_modes", "number of sine modes"),
    ("study", "ladder", "comma-separated node counts, each 2n - 1 of the previous"),
    ("study", "t_end", "final time"),
    ("study", "taus", "comma-separated scaling factors"),
    ("study", "deltas", "comma-separated relative perturbation sizes"),
    ("study", "spacing", "grid spacing of the long-time run"),
    ("study", "trace_every", "time between recorded H^s values"),
    ("study", "widths", "comma-separated box widths"),
    ("norms", "s", "Sobolev regularity"),
    ("norms", "input", "CSV file to analyse"),
    ("norms", "component", "psi or phi"),
    ("norms", "time", "slice time to read (default: latest)"),
    ("output", "out", "root directory for artifacts"),
];

fn section_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(_, k, _)| *k == key).map(|(s, _, _)| *s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    origin: String,
}

/// Merged key/value settings with the origin of every value.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, Entry>,
}

impl RunConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut section: Option<String> = None;
        for (ln, raw) in text.lines().enumerate() {
            let line_no = ln + 1;
            let line = raw.split('#').next().unwrap_or("");
            let indent = line.len() - line.trim_start().len();
            let body = line.trim();
            if body.is_empty() {
                continue;
            }
            let at = |col: usize, msg: String| ConfigError(format!("{source}: line {line_no}, column {col}: {msg}"));
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| at(indent + body.len(), "missing ']' in section header".into()))?
                    .trim();
                if !KEYS.iter().any(|(s, _, _)| *s == name) {
                    return Err(at(indent + 2, format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some(eq) = body.find('=') else {
                return Err(at(indent + 1, format!("expected 'key = value', found {body:?}")));
            };
            let key = body[..eq].trim();
            let after = &body[eq + 1..];
            let value = after.trim();
            let value_col = indent + eq + 2 + (after.len() - after.trim_start().len());
            let key_col = indent + 1;
            if key.is_empty() {
                return Err(at(key_col, "missing key before '='".into()));
            }
            match section_of(key) {
                None => return Err(at(key_col, format!("unknown key {key:?}"))),
                Some(expected) => {
                    if let Some(sec) = &section {
                        if sec != expected {
                            return Err(at(key_col, format!("key {key:?} belongs in [{expected}], not [{sec}]")));
                        }
                    }
                }
            }
            if value.is_empty() {
                return Err(at(value_col, format!("missing value for {key:?}")));
            }
            cfg.entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    origin: format!("{source}: line {line_no}, column {value_col}"),
                },
            );
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Apply an override from the command line.
    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), ConfigError> {
        if section_of(key).is_none() {
            return Err(ConfigError(format!("{origin}: unknown key {key:?}")));
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.trim().to_string(),
                origin: origin.to_string(),
            },
        );
        Ok(())
    }

    /// Parse `key=value`.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("--set expects key=value, got {pair:?}")))?;
        self.set(k.trim(), v, &format!("--set {}", k.trim()))
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.str(key).ok_or_else(|| {
            let sec = section_of(key).unwrap_or("?");
            ConfigError(format!("missing required key {key:?} (set it under [{sec}] or with --set {key}=VALUE)"))
        })
    }

    fn parse_with<T>(&self, key: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => f(&e.value)
                .map(Some)
                .ok_or_else(|| ConfigError(format!("{}: {key} must be {what}, got {:?}", e.origin, e.value))),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.parse_with(key, "a number", |s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.parse_with(key, "a non-negative integer", |s| s.parse().ok())
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        self.parse_with(key, "a non-negative integer", |s| s.parse().ok())
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.parse_with(key, "a comma-separated list of numbers", |s| {
            s.split(',').map(|p| p.trim().parse::<f64>().ok()).collect()
        })
    }

    pub fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>, ConfigError> {
        self.parse_with(key, "a comma-separated list of integers", |s| {
            s.split(',').map(|p| p.trim().parse::<usize>().ok()).collect()
        })
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn required_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.require(key)?;
        Ok(self.f64(key)?.expect("present"))
    }

    pub fn required_usize(&self, key: &str) -> Result<usize, ConfigError> {
        self.require(key)?;
        Ok(self.usize(key)?.expect("present"))
    }

    /// Effective values, for the manifest.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|(k, e)| (k.clone(), e.value.clone())).collect()
    }

    /// Record a default so that it shows up in the manifest.
    pub fn default_to(&mut self, key: &str, value: impl ToString) {
        if !self.has(key) {
            self.entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    origin: "default".into(),
                },
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_top_level() {
        let cfg = RunConfig::parse("m = 1\n[grid]\n  R = 2 # half width\nn=65\n", "c").unwrap();
        assert_eq!(cfg.f64("m").unwrap(), Some(1.0));
        assert_eq!(cfg.f64("R").unwrap(), Some(2.0));
        assert_eq!(cfg.usize("n").unwrap(), Some(65));
    }

    #[test]
    fn errors_carry_line_and_column() {
        let err = RunConfig::parse("[grid]\nR = 1\n  bogus = 3\n", "c").unwrap_err();
        assert_eq!(err.0, "c: line 3, column 3: unknown key \"bogus\"");
        let err = RunConfig::parse("[grid]\nm = 1\n", "c").unwrap_err();
        assert!(err.0.contains("line 2, column 1") && err.0.contains("[params]"), "{err}");
        let err = RunConfig::parse("[nosuch]\n", "c").unwrap_err();
        assert!(err.0.contains("line 1, column 2"), "{err}");
        let err = RunConfig::parse("R 1\n", "c").unwrap_err();
        assert!(err.0.contains("line 1, column 1"), "{err}");
        let cfg = RunConfig::parse("[grid]\nR = abc\n", "c").unwrap();
        let err = cfg.f64("R").unwrap_err();
        assert!(err.0.contains("line 2, column 5"), "{err}");
    }

    #[test]
    fn overrides_win() {
        let mut cfg = RunConfig::parse("n = 65\n", "c").unwrap();
        cfg.set_pair("n=129").unwrap();
        assert_eq!(cfg.usize("n").unwrap(), Some(129));
        assert!(cfg.set_pair("nope=1").is_err());
        assert!(cfg.set_pair("n").is_err());
    }

    #[test]
    fn lists() {
        let cfg = RunConfig::parse("ladder = 65, 129,257\ntaus = 0.5,2\n", "c").unwrap();
        assert_eq!(cfg.usize_list("ladder").unwrap(), Some(vec![65, 129, 257]));
        assert_eq!(cfg.f64_list("taus").unwrap(), Some(vec![0.5, 2.0]));
    }

    #[test]
    fn missing_required_key() {
        let cfg = RunConfig::default();
        assert!(cfg.required_f64("m").unwrap_err().0.contains("missing required key"));
    }
}
