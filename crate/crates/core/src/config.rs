//! TOML configuration: detector thresholds, encoder templates, model
//! settings, prices and per-person day framing.
//!
//! ```toml
//! [occurrences]
//! min_prior_minutes = 30
//! [occurrences.gap_minutes]
//! heart_rate = 15
//!
//! [encoder.templates]
//! battery = "The battery level of the person's phone is {value} at {time}."
//!
//! [llm]
//! max_retries = 3
//! [llm.prices]
//! input_per_1k = 0.00015
//! output_per_1k = 0.0006
//!
//! [people.p1]
//! timezone = "America/New_York"
//! day_start_hour = 0
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::encoder::EncoderConfig;
use crate::llm::LlmConfig;
use crate::model::{DayFrame, PersonId};
use crate::occurrence::OccurrenceConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PersonConfig {
    pub timezone: Tz,
    /// Local hour at which this person's civil day begins.
    pub day_start_hour: u32,
}

impl Default for PersonConfig {
    fn default() -> Self {
        Self {
            timezone: chrono_tz::UTC,
            day_start_hour: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApiConfig {
    pub bind: String,
    /// Token issuance listens here only; keep it on loopback.
    pub admin_bind: String,
    pub default_ttl_minutes: u64,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            admin_bind: "127.0.0.1:8081".into(),
            default_ttl_minutes: 60,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub data_root: Option<PathBuf>,
    pub store_root: Option<PathBuf>,
    /// Matches a labelled place within this many meters.
    pub place_radius_m: Option<f64>,
    pub occurrences: OccurrenceConfig,
    pub encoder: EncoderConfig,
    pub llm: LlmConfig,
    pub api: ApiConfig,
    pub default_person: PersonConfig,
    pub people: BTreeMap<String, PersonConfig>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl AppConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: AppConfig = toml::from_str(s)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let s = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&s)
    }

    fn check(&self) -> Result<(), ConfigError> {
        if self.llm.max_retries == 0 {
            return Err(ConfigError::Invalid("llm.max_retries must be at least 1".into()));
        }
        if self.llm.prices.input_per_1k < 0.0 || self.llm.prices.output_per_1k < 0.0 {
            return Err(ConfigError::Invalid("llm.prices must be non-negative".into()));
        }
        if self.encoder.group_minutes == 0 {
            return Err(ConfigError::Invalid("encoder.group_minutes must be positive".into()));
        }
        for (id, p) in std::iter::once(("default_person", &self.default_person)).chain(self.people.iter().map(|(k, v)| (k.as_str(), v))) {
            if p.day_start_hour > 23 {
                return Err(ConfigError::Invalid(format!("{id}: day_start_hour must be 0-23")));
            }
        }
        Ok(())
    }

    pub fn frame_for(&self, person: &PersonId) -> DayFrame {
        let p = self.people.get(person.as_str()).unwrap_or(&self.default_person);
        DayFrame::new(p.timezone, p.day_start_hour)
    }

    pub fn place_radius(&self) -> f64 {
        self.place_radius_m.unwrap_or(crate::ingest::DEFAULT_RADIUS_M)
    }
}
