//! Sybil identity fabrication.
//!
//! A transmitter vehicle drives with traffic but only broadcasts forged
//! beacons for its ghost identities. Each ghost claims a self-consistent
//! slow trajectory that starts ahead of the transmitter and falls behind it
//! over time.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::challenge_protocol::{ChallengePacket, ChallengeResponse};
use crate::mobility::{RoadConfig, VehicleState};
use crate::trust_engine::{BsmStatus, Epoch, Pseudonym};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackerPolicy {
    /// Never answers challenges.
    Silent,
    /// Echoes any challenge for its ghost that physically reaches it.
    Opportunistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub policy: AttackerPolicy,
    /// Speed claimed in every forged beacon, m/s.
    pub ghost_speed: f64,
    /// Initial arc displacement of a ghost ahead of its transmitter, meters.
    pub ghost_offset_min: f64,
    pub ghost_offset_max: f64,
    pub ghosts_per_attacker: usize,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            policy: AttackerPolicy::Silent,
            ghost_speed: 2.0,
            ghost_offset_min: 50.0,
            ghost_offset_max: 150.0,
            ghosts_per_attacker: 1,
        }
    }
}

impl AttackConfig {
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if !(self.ghost_speed >= 0.0) {
            out.push(("attack.ghost_speed".into(), format!("must be >= 0, got {}", self.ghost_speed)));
        }
        if !(self.ghost_offset_min >= 0.0 && self.ghost_offset_min <= self.ghost_offset_max) {
            out.push((
                "attack.ghost_offset_min".into(),
                format!(
                    "need 0 <= ghost_offset_min <= ghost_offset_max, got [{}, {}]",
                    self.ghost_offset_min, self.ghost_offset_max
                ),
            ));
        }
        if self.ghosts_per_attacker == 0 {
            out.push(("attack.ghosts_per_attacker".into(), "must be >= 1".into()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GhostTrack {
    pub ghost_id: Pseudonym,
    pub claimed_arc_position: f64,
    pub claimed_speed: f64,
    pub lane: usize,
    pub offset_from_transmitter: f64,
}

impl GhostTrack {
    pub fn advance(&mut self, dt: f64, road: &RoadConfig) {
        self.claimed_arc_position = road.wrap(self.claimed_arc_position + self.claimed_speed * dt);
    }

    /// Forged beacon for this epoch: exact claimed speed, claimed position.
    pub fn forge_bsm(&self, epoch: Epoch, road: &RoadConfig) -> BsmStatus {
        BsmStatus {
            sender: self.ghost_id,
            velocity: self.claimed_speed,
            timestamp: epoch,
            position: road.to_xy(self.claimed_arc_position, self.lane),
        }
    }
}

/// Creates a ghost ahead of `transmitter` with a uniformly drawn offset.
pub fn spawn_sybil<R: Rng + ?Sized>(
    transmitter: &VehicleState,
    ghost_id: Pseudonym,
    cfg: &AttackConfig,
    rng: &mut R,
    road: &RoadConfig,
) -> GhostTrack {
    let offset = if cfg.ghost_offset_max > cfg.ghost_offset_min {
        rng.random_range(cfg.ghost_offset_min..=cfg.ghost_offset_max)
    } else {
        cfg.ghost_offset_min
    };
    GhostTrack {
        ghost_id,
        claimed_arc_position: road.wrap(transmitter.arc_position + offset),
        claimed_speed: cfg.ghost_speed,
        lane: transmitter.lane,
        offset_from_transmitter: offset,
    }
}

/// The attacker's reaction to a challenge addressed to one of its ghosts.
pub fn attacker_respond(
    policy: AttackerPolicy,
    challenge_received_by_transmitter: bool,
    challenge: &ChallengePacket,
    epoch: Epoch,
) -> Option<ChallengeResponse> {
    match policy {
        AttackerPolicy::Silent => None,
        AttackerPolicy::Opportunistic if challenge_received_by_transmitter => Some(ChallengeResponse {
            responder: challenge.target,
            nonce: challenge.nonce,
            epoch,
        }),
        AttackerPolicy::Opportunistic => None,
    }
}
