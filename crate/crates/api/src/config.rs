use std::net::SocketAddr;
use std::path::PathBuf;

use ecoq_core::sgb::DEFAULT_FILL_ALERT_THRESHOLD;
use thiserror::Error;

pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";
pub const DEV_ORGANIZER_TOKEN: &str = "dev-organizer";
pub const DEV_TOKEN_SEED: &str = "dev-seed";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{var}: {reason}")]
    Invalid { var: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub addr: SocketAddr,
    /// Where command logs live; `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    pub fill_alert_threshold: f64,
    pub organizer_token: String,
    pub participant_token_seed: String,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            addr: DEFAULT_ADDR.parse().expect("valid default address"),
            data_dir: None,
            fill_alert_threshold: DEFAULT_FILL_ALERT_THRESHOLD,
            organizer_token: DEV_ORGANIZER_TOKEN.into(),
            participant_token_seed: DEV_TOKEN_SEED.into(),
        }
    }
}

impl Config {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut c = Config::default();
        if let Some(addr) = get("ECOQ_ADDR") {
            c.addr = addr.parse().map_err(|e| ConfigError::Invalid {
                var: "ECOQ_ADDR",
                reason: format!("{e}"),
            })?;
        }
        c.data_dir = get("ECOQ_DATA_DIR").filter(|d| !d.is_empty()).map(PathBuf::from);
        if let Some(t) = get("ECOQ_FILL_ALERT_THRESHOLD") {
            c.fill_alert_threshold = t
                .parse::<f64>()
                .ok()
                .filter(|t| (0.0..=100.0).contains(t))
                .ok_or_else(|| ConfigError::Invalid {
                    var: "ECOQ_FILL_ALERT_THRESHOLD",
                    reason: format!("`{t}` is not a percentage"),
                })?;
        }
        if let Some(t) = get("ECOQ_ORGANIZER_TOKEN").filter(|t| !t.is_empty()) {
            if t.contains(':') {
                return Err(ConfigError::Invalid {
                    var: "ECOQ_ORGANIZER_TOKEN",
                    reason: "must not contain `:`".into(),
                });
            }
            c.organizer_token = t;
        }
        if let Some(s) = get("ECOQ_PARTICIPANT_TOKEN_SEED").filter(|s| !s.is_empty()) {
            c.participant_token_seed = s;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn lookup(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| map.get(k).cloned()
    }

    #[test]
    fn defaults_and_overrides() {
        assert_eq!(Config::from_lookup(lookup(&[])).unwrap(), Config::default());
        let c = Config::from_lookup(lookup(&[
            ("ECOQ_ADDR", "0.0.0.0:9000"),
            ("ECOQ_DATA_DIR", "/tmp/ecoq"),
            ("ECOQ_FILL_ALERT_THRESHOLD", "65"),
            ("ECOQ_ORGANIZER_TOKEN", "abc"),
        ]))
        .unwrap();
        assert_eq!(c.addr.port(), 9000);
        assert_eq!(c.data_dir, Some(PathBuf::from("/tmp/ecoq")));
        assert_eq!(c.fill_alert_threshold, 65.0);
        assert_eq!(c.organizer_token, "abc");
        assert_eq!(c.participant_token_seed, DEV_TOKEN_SEED);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Config::from_lookup(lookup(&[("ECOQ_ADDR", "nowhere")])).is_err());
        assert!(Config::from_lookup(lookup(&[("ECOQ_FILL_ALERT_THRESHOLD", "120")])).is_err());
        assert!(Config::from_lookup(lookup(&[("ECOQ_ORGANIZER_TOKEN", "a:b")])).is_err());
    }
}
