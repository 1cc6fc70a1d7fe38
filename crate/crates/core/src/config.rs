//! JSON protocol configuration.
//!
//! ```json
//! { "two_j": 100, "target_two_mt": 0, "angle_policy": "approx_mt0",
//!   "reset_policy": "sqrt_j", "max_iterations": 170, "seed": 7 }
//! ```
//!
//! Only `two_j` is required. Unknown keys are rejected.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spin::{default_max_iterations, AnglePolicy, ProtocolConfig, ResetPolicy, SpinSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyViolation {
    pub key: &'static str,
    pub message: String,
}

impl fmt::Display for KeyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config validation failed: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<KeyViolation>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub two_j: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_two_mt: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_policy: Option<AnglePolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reset_policy: Option<ResetPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Applies defaults and checks every key, reporting all violations at once.
    pub fn into_config(self) -> Result<ProtocolConfig, ConfigError> {
        let mut bad = Vec::new();
        let two_j = if (0..=i32::MAX as i64).contains(&self.two_j) {
            Some(self.two_j as u32)
        } else {
            bad.push(KeyViolation { key: "two_j", message: format!("{} is not a non-negative integer", self.two_j) });
            None
        };
        // Default target: m_t = 0, or 1/2 for an odd qubit count.
        let target = self.target_two_mt.unwrap_or(two_j.map_or(0, |t| (t % 2) as i64));
        if let Some(tj) = two_j {
            if target.abs() > tj as i64 {
                bad.push(KeyViolation { key: "target_two_mt", message: format!("|{target}| exceeds two_j = {tj}") });
            } else if (tj as i64 - target).rem_euclid(2) != 0 {
                bad.push(KeyViolation { key: "target_two_mt", message: format!("{target} has the wrong parity for two_j = {tj}") });
            }
        }
        let angle_policy = self.angle_policy.unwrap_or(AnglePolicy::Geometric);
        if angle_policy == AnglePolicy::ApproxMt0 && target != 0 {
            bad.push(KeyViolation { key: "angle_policy", message: "approx_mt0 requires target_two_mt = 0".into() });
        }
        let reset_policy = self.reset_policy.unwrap_or(ResetPolicy::None);
        if let ResetPolicy::Custom(t) = reset_policy {
            if !(t.is_finite() && t >= 0.0) {
                bad.push(KeyViolation { key: "reset_policy", message: format!("custom threshold {t} must be >= 0") });
            }
        }
        let max_iterations = match self.max_iterations {
            None => two_j.map(default_max_iterations),
            Some(v) if (1..=u32::MAX as i64).contains(&v) => Some(v as u32),
            Some(v) => {
                bad.push(KeyViolation { key: "max_iterations", message: format!("{v} must be a positive integer") });
                None
            }
        };
        if !bad.is_empty() {
            return Err(ConfigError::Validation(bad));
        }
        let two_j = two_j.expect("validated");
        Ok(ProtocolConfig {
            spin: SpinSpec::top(two_j),
            target_two_mt: target as i32,
            angle_policy,
            reset_policy,
            max_iterations: max_iterations.expect("validated"),
            rng_seed: self.seed.unwrap_or(0),
        })
    }
}

impl From<&ProtocolConfig> for ConfigFile {
    fn from(c: &ProtocolConfig) -> Self {
        ConfigFile {
            two_j: c.two_j() as i64,
            target_two_mt: Some(c.target_two_mt as i64),
            angle_policy: Some(c.angle_policy),
            reset_policy: Some(c.reset_policy),
            max_iterations: Some(c.max_iterations as i64),
            seed: Some(c.rng_seed),
        }
    }
}

/// Parses and validates a JSON config document.
pub fn parse_config(text: &str) -> Result<ProtocolConfig, ConfigError> {
    ConfigFile::parse(text)?.into_config()
}

/// Serializes a config into the JSON file schema.
pub fn config_to_json(config: &ProtocolConfig) -> String {
    serde_json::to_string(&ConfigFile::from(config)).expect("config serializes")
}
