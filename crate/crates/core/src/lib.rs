//! Trust-based Sybil detection for vehicular networks, with a
//! directional-antenna challenge step and a discrete-epoch simulator.
//!
//! Each honest vehicle keeps a [`ScoreTable`] of neighbor trust values fed
//! by beacons (BSMs). Identities whose trust falls far enough below the
//! table average become suspects and receive a beamformed nonce
//! challenge aimed where they claim to be. Only a radio physically inside
//! the beam can answer, so identities without a radio at their claimed
//! position end up confirmed malicious.
//!
//! ```
//! use taser::{sim_engine, ScenarioConfig};
//!
//! let cfg = ScenarioConfig { vehicles: 30, duration_epochs: 40, ..Default::default() };
//! let out = sim_engine::run(cfg).unwrap();
//! assert_eq!(out.identities.len(), 30);
//! ```

// `!(x >= 0.0)` is how validation rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack_model;
pub mod challenge_protocol;
pub mod cli;
pub mod config;
pub mod events;
pub mod geom;
pub mod metrics_report;
pub mod mobility;
pub mod radio_channel;
pub mod rng;
pub mod sim_engine;
pub mod trust_engine;

pub use config::{parse_config, ConfigError, ScenarioConfig};
pub use events::{Event, EventKind, EventLog, LogDetail};
pub use geom::Vec2;
pub use metrics_report::{Aggregation, Confusion, Label, RunMetrics};
pub use sim_engine::{RunOutput, World};
pub use trust_engine::{BsmStatus, ClassificationCategory, Epoch, Pseudonym, ScoreEntry, ScoreTable, TrustParams};
