//! Scenario configuration: TOML text with one section per subsystem.
//!
//! Every key is optional; absent keys take the reference-scenario defaults
//! (α 0.01, β 0.1, δ 0.4, λ 0.15, 100 ms epochs, 15 m/s limit, 2 m/s
//! ghosts, trust bounded at ±5). Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack_model::AttackConfig;
use crate::challenge_protocol::ChallengeConfig;
use crate::metrics_report::Aggregation;
use crate::mobility::RoadConfig;
use crate::radio_channel::ChannelConfig;
use crate::trust_engine::TrustParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub aggregation: Aggregation,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            aggregation: Aggregation::Identity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Physical vehicles (honest + Sybil transmitters).
    pub vehicles: usize,
    pub sybil_fraction: f64,
    pub duration_epochs: u64,
    /// Seconds per epoch (one beacon interval).
    pub epoch_duration: f64,
    /// True speed of every physical vehicle, m/s.
    pub honest_speed: f64,
    /// Std-dev of honest velocity reports, m/s.
    pub noise_sigma: f64,
    /// Minimum same-lane spacing at placement, meters.
    pub min_headway: f64,
    /// Reported positions closer than this are treated as co-located.
    pub colocation_epsilon: f64,
    pub seed: u64,
    pub road: RoadConfig,
    pub channel: ChannelConfig,
    pub trust: TrustParams,
    pub attack: AttackConfig,
    pub challenge: ChallengeConfig,
    pub metrics: MetricsConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            vehicles: 100,
            sybil_fraction: 0.10,
            duration_epochs: 600,
            epoch_duration: 0.1,
            honest_speed: 15.0,
            noise_sigma: 0.5,
            min_headway: 5.0,
            colocation_epsilon: 1.0,
            seed: 1,
            road: RoadConfig::default(),
            channel: ChannelConfig::default(),
            trust: TrustParams::default(),
            attack: AttackConfig::default(),
            challenge: ChallengeConfig::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error{}: {message}", .path.as_ref().map(|p| format!(" in {}", p.display())).unwrap_or_default())]
    Parse { path: Option<PathBuf>, message: String },
    #[error("invalid config:\n  {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n  "))]
    Invalid(Vec<Violation>),
}

impl ScenarioConfig {
    pub fn sybil_transmitters(&self) -> usize {
        (self.sybil_fraction * self.vehicles as f64).round() as usize
    }

    pub fn honest_vehicles(&self) -> usize {
        self.vehicles - self.sybil_transmitters().min(self.vehicles)
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut raw: Vec<(String, String)> = Vec::new();
        if !(0.0..=1.0).contains(&self.sybil_fraction) {
            raw.push(("sybil_fraction".into(), format!("must be in [0, 1], got {}", self.sybil_fraction)));
        }
        if !(self.epoch_duration > 0.0) {
            raw.push(("epoch_duration".into(), format!("must be > 0, got {}", self.epoch_duration)));
        }
        if !(self.honest_speed >= 0.0) {
            raw.push(("honest_speed".into(), format!("must be >= 0, got {}", self.honest_speed)));
        }
        if !(self.noise_sigma >= 0.0) {
            raw.push(("noise_sigma".into(), format!("must be >= 0, got {}", self.noise_sigma)));
        }
        if !(self.min_headway >= 0.0) {
            raw.push(("min_headway".into(), format!("must be >= 0, got {}", self.min_headway)));
        }
        if !(self.colocation_epsilon >= 0.0) {
            raw.push((
                "colocation_epsilon".into(),
                format!("must be >= 0, got {}", self.colocation_epsilon),
            ));
        }
        if self.road.lanes > 0 {
            let per_lane = self.vehicles.div_ceil(self.road.lanes);
            if per_lane as f64 * self.min_headway > self.road.length {
                raw.push((
                    "min_headway".into(),
                    format!(
                        "{per_lane} vehicles per lane at {} m headway exceed road length {}",
                        self.min_headway, self.road.length
                    ),
                ));
            }
        }
        raw.extend(self.road.violations());
        raw.extend(self.channel.violations());
        raw.extend(self.trust.violations());
        raw.extend(self.attack.violations());
        raw.extend(self.challenge.violations());
        raw.into_iter()
            .map(|(key, message)| Violation { key, message })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(v))
        }
    }

    /// Parses and validates configuration text.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: None,
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical dump; [`ScenarioConfig::from_toml_str`] reads it back
    /// unchanged.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioConfig::from_toml_str(&text).map_err(|e| match e {
        ConfigError::Parse { message, .. } => ConfigError::Parse {
            path: Some(path.to_path_buf()),
            message,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack_model::AttackerPolicy;

    #[test]
    fn minimal_file_takes_defaults() {
        let c = ScenarioConfig::from_toml_str("vehicles = 100\nduration_epochs = 600\n").unwrap();
        assert_eq!(c.trust.alpha, 0.01);
        assert_eq!(c.trust.beta, 0.1);
        assert_eq!(c.trust.delta, 0.4);
        assert_eq!(c.trust.lambda, 0.15);
        assert_eq!(c.trust.trust_min, -5.0);
        assert_eq!(c.trust.trust_max, 5.0);
        assert_eq!(c.epoch_duration, 0.1);
        assert_eq!(c.road.speed_limit, 15.0);
        assert_eq!(c.attack.ghost_speed, 2.0);
        assert_eq!(c, ScenarioConfig::default());
    }

    #[test]
    fn oversized_beta_rejected() {
        let e = ScenarioConfig::from_toml_str("[trust]\nbeta = 0.3\n").unwrap_err();
        match e {
            ConfigError::Invalid(v) => assert!(v.iter().any(|x| x.key == "trust.beta")),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn fraction_out_of_range_rejected() {
        let e = ScenarioConfig::from_toml_str("sybil_fraction = 1.5\n").unwrap_err();
        assert!(e.to_string().contains("sybil_fraction"));
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let e = ScenarioConfig::from_toml_str("vehicles = 10\n\n[trust]\ngamma = 1\n").unwrap_err();
        let msg = e.to_string();
        assert!(matches!(e, ConfigError::Parse { .. }));
        assert!(msg.contains("gamma"), "{msg}");
        assert!(msg.contains('4'), "no line context: {msg}");
    }

    #[test]
    fn nested_sections_parse() {
        let c = ScenarioConfig::from_toml_str(
            "[attack]\npolicy = \"opportunistic\"\n[channel]\nbeam_half_angle = 10.0\n",
        )
        .unwrap();
        assert_eq!(c.attack.policy, AttackerPolicy::Opportunistic);
        assert_eq!(c.channel.beam_half_angle, 10.0);
    }

    #[test]
    fn counts_round() {
        let c = ScenarioConfig::default();
        assert_eq!((c.honest_vehicles(), c.sybil_transmitters()), (90, 10));
    }
}
