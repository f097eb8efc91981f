//! Presence verification for suspects.
//!
//! A challenger beams a nonce at the position a suspect should occupy by
//! now. A vehicle that is really there echoes the nonce and is marked
//! Honest. After `max_attempts` unanswered packets, each given
//! `per_attempt_timeout` epochs, the suspect is confirmed Malicious.
//!
//! ```text
//!            issue            response(nonce ok)
//!   Pending ───────▶ Pending ───────────────────▶ VerifiedHonest
//!      ▲               │ timeout
//!      └── re-aim ◀────┤ attempts left
//!                      │ attempts exhausted
//!                      ▼
//!               ConfirmedMalicious
//! ```

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;
use crate::mobility::{RoadConfig, VehicleState};
use crate::radio_channel::{anticipated_position, beam_contains, claimed_heading, ChannelConfig};
use crate::trust_engine::{ClassificationCategory, Epoch, Pseudonym, ScoreTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChallengeConfig {
    pub max_attempts: u32,
    /// Epochs a packet stays answerable.
    pub per_attempt_timeout: u64,
}

impl Default for ChallengeConfig {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            per_attempt_timeout: 2,
        }
    }
}

impl ChallengeConfig {
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if self.max_attempts == 0 {
            out.push(("challenge.max_attempts".into(), "must be >= 1".into()));
        }
        if self.per_attempt_timeout == 0 {
            out.push(("challenge.per_attempt_timeout".into(), "must be >= 1".into()));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChallengePacket {
    pub challenger: Pseudonym,
    pub target: Pseudonym,
    pub nonce: u64,
    /// Challenger position at transmission.
    pub origin: Vec2,
    pub aim: Vec2,
    pub issued_epoch: Epoch,
    pub attempt: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChallengeResponse {
    /// Identity the response claims to come from.
    pub responder: Pseudonym,
    pub nonce: u64,
    pub epoch: Epoch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChallengeOutcome {
    Pending,
    VerifiedHonest,
    ConfirmedMalicious,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChallengeError {
    #[error("challenge for {0} already resolved as {1:?}")]
    Resolved(Pseudonym, ChallengeOutcome),
    #[error("all {0} attempts already sent")]
    Exhausted(u32),
    #[error("{0} has no score entry")]
    UnknownTarget(Pseudonym),
    #[error("{0} is {1}, not a suspect")]
    NotSuspect(Pseudonym, ClassificationCategory),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Outstanding {
    nonce: u64,
    issued_epoch: Epoch,
}

/// Result of a timeout check.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeoutStep {
    Waiting,
    Reissued(ChallengePacket),
    ConfirmedMalicious,
    /// Already resolved; nothing to do.
    Idle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChallengeState {
    pub target: Pseudonym,
    pub attempts_sent: u32,
    pub max_attempts: u32,
    pub per_attempt_timeout: u64,
    pub outcome: ChallengeOutcome,
    outstanding: Option<Outstanding>,
}

impl ChallengeState {
    pub fn new(target: Pseudonym, cfg: &ChallengeConfig) -> Self {
        Self {
            target,
            attempts_sent: 0,
            max_attempts: cfg.max_attempts,
            per_attempt_timeout: cfg.per_attempt_timeout,
            outcome: ChallengeOutcome::Pending,
            outstanding: None,
        }
    }

    pub fn is_pending(&self) -> bool {
        self.outcome == ChallengeOutcome::Pending
    }

    /// Builds the next packet, aimed at the target's dead-reckoned position.
    #[allow(clippy::too_many_arguments)]
    pub fn issue_challenge<R: Rng + ?Sized>(
        &mut self,
        table: &ScoreTable,
        challenger_xy: Vec2,
        epoch: Epoch,
        epoch_duration: f64,
        road: &RoadConfig,
        rng: &mut R,
    ) -> Result<ChallengePacket, ChallengeError> {
        if !self.is_pending() {
            return Err(ChallengeError::Resolved(self.target, self.outcome));
        }
        if self.attempts_sent >= self.max_attempts {
            return Err(ChallengeError::Exhausted(self.max_attempts));
        }
        let entry = table
            .entry(self.target)
            .ok_or(ChallengeError::UnknownTarget(self.target))?;
        if entry.category != ClassificationCategory::Suspect {
            return Err(ChallengeError::NotSuspect(self.target, entry.category));
        }
        let heading = claimed_heading(entry.last_position, entry.prev_position, road);
        let elapsed = epoch.saturating_sub(entry.last_timestamp) as f64 * epoch_duration;
        let aim = anticipated_position(entry.last_position, entry.last_velocity, heading, elapsed);

        let nonce: u64 = rng.random();
        self.attempts_sent += 1;
        self.outstanding = Some(Outstanding {
            nonce,
            issued_epoch: epoch,
        });
        Ok(ChallengePacket {
            challenger: table.owner,
            target: self.target,
            nonce,
            origin: challenger_xy,
            aim,
            issued_epoch: epoch,
            attempt: self.attempts_sent,
        })
    }

    /// Matches a response against the outstanding nonce. A valid, timely
    /// echo verifies the target; anything else is ignored.
    pub fn handle_response(
        &mut self,
        response: &ChallengeResponse,
        table: &mut ScoreTable,
    ) -> ChallengeOutcome {
        if !self.is_pending() || response.responder != self.target {
            return self.outcome;
        }
        let Some(out) = self.outstanding else {
            return self.outcome;
        };
        let timely = response.epoch < out.issued_epoch + self.per_attempt_timeout;
        if out.nonce == response.nonce && timely {
            self.outstanding = None;
            if table.mark_verified(self.target, response.epoch).is_some() {
                self.outcome = ChallengeOutcome::VerifiedHonest;
            }
        }
        self.outcome
    }

    /// Advances the state once the current attempt has timed out.
    #[allow(clippy::too_many_arguments)]
    pub fn resolve_timeouts<R: Rng + ?Sized>(
        &mut self,
        table: &mut ScoreTable,
        challenger_xy: Vec2,
        epoch: Epoch,
        epoch_duration: f64,
        road: &RoadConfig,
        rng: &mut R,
    ) -> Result<TimeoutStep, ChallengeError> {
        if !self.is_pending() {
            return Ok(TimeoutStep::Idle);
        }
        let Some(out) = self.outstanding else {
            return Ok(TimeoutStep::Waiting);
        };
        if epoch < out.issued_epoch + self.per_attempt_timeout {
            return Ok(TimeoutStep::Waiting);
        }
        if self.attempts_sent < self.max_attempts {
            let p = self.issue_challenge(table, challenger_xy, epoch, epoch_duration, road, rng)?;
            return Ok(TimeoutStep::Reissued(p));
        }
        self.outstanding = None;
        self.outcome = ChallengeOutcome::ConfirmedMalicious;
        table.mark_malicious(self.target, epoch);
        Ok(TimeoutStep::ConfirmedMalicious)
    }
}

/// Physical vehicles inside the packet's beam. Ghost identities have no
/// radio, so they can never appear here.
pub fn deliver_challenge(
    packet: &ChallengePacket,
    all_vehicles: &[VehicleState],
    cfg: &ChannelConfig,
    road: &RoadConfig,
) -> BTreeSet<Pseudonym> {
    all_vehicles
        .iter()
        .filter(|v| beam_contains(packet.origin, packet.aim, v.position(road), cfg))
        .map(|v| v.id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trust_engine::{BsmStatus, TrustParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn straight_road() -> RoadConfig {
        // Nearly straight over short spans.
        RoadConfig {
            length: 1e7,
            lanes: 1,
            ..Default::default()
        }
    }

    fn suspect_table(target: u32, pos: Vec2, v: f64, at: Epoch) -> ScoreTable {
        let mut t = ScoreTable::new(Pseudonym(1));
        let b = |p: Vec2, ts| BsmStatus {
            sender: Pseudonym(target),
            velocity: v,
            timestamp: ts,
            position: p,
        };
        t.upsert_entry(&b(pos - Vec2::new(0.2, 0.0), at.saturating_sub(1)), 20).unwrap();
        t.upsert_entry(&b(pos, at), 20).unwrap();
        assert!(t.mark_suspect(Pseudonym(target), at, TrustParams::default().honest_grace_epochs));
        t
    }

    #[test]
    fn aim_uses_dead_reckoning() {
        let road = straight_road();
        let t = suspect_table(7, Vec2::new(100.0, 0.0), 2.0, 4);
        let mut s = ChallengeState::new(Pseudonym(7), &ChallengeConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = s.issue_challenge(&t, Vec2::ZERO, 5, 0.1, &road, &mut rng).unwrap();
        assert!(p.aim.distance(Vec2::new(100.2, 0.0)) < 1e-9);
        assert_eq!(p.attempt, 1);
    }

    #[test]
    fn repeated_issues_get_fresh_nonces() {
        let road = straight_road();
        let t = suspect_table(7, Vec2::new(100.0, 0.0), 2.0, 4);
        let mut s = ChallengeState::new(Pseudonym(7), &ChallengeConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = s.issue_challenge(&t, Vec2::ZERO, 5, 0.1, &road, &mut rng).unwrap();
        let b = s.issue_challenge(&t, Vec2::ZERO, 7, 0.1, &road, &mut rng).unwrap();
        assert_ne!(a.nonce, b.nonce);
        assert_eq!(b.attempt, 2);
    }

    #[test]
    fn malicious_target_cannot_be_challenged() {
        let road = straight_road();
        let mut t = suspect_table(7, Vec2::new(100.0, 0.0), 2.0, 4);
        t.mark_malicious(Pseudonym(7), 4);
        let mut s = ChallengeState::new(Pseudonym(7), &ChallengeConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = s.issue_challenge(&t, Vec2::ZERO, 5, 0.1, &road, &mut rng).unwrap_err();
        assert!(matches!(e, ChallengeError::NotSuspect(_, ClassificationCategory::Malicious)));
    }

    #[test]
    fn silent_target_confirmed_after_all_timeouts() {
        let road = straight_road();
        let mut t = suspect_table(7, Vec2::new(100.0, 0.0), 2.0, 10);
        let mut s = ChallengeState::new(Pseudonym(7), &ChallengeConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        s.issue_challenge(&t, Vec2::ZERO, 10, 0.1, &road, &mut rng).unwrap();
        let mut confirmed_at = None;
        for e in 11..30 {
            match s.resolve_timeouts(&mut t, Vec2::ZERO, e, 0.1, &road, &mut rng).unwrap() {
                TimeoutStep::ConfirmedMalicious => {
                    confirmed_at = Some(e);
                    break;
                }
                TimeoutStep::Reissued(p) => assert!(p.attempt <= 3),
                _ => {}
            }
        }
        assert_eq!(confirmed_at, Some(16));
        let entry = t.entry(Pseudonym(7)).unwrap();
        assert_eq!(entry.category, ClassificationCategory::Malicious);
        assert_eq!(entry.final_classified_at, Some(16));
        assert_eq!(s.attempts_sent, 3);
    }

    #[test]
    fn response_on_second_attempt_stops_series() {
        let road = straight_road();
        let mut t = suspect_table(7, Vec2::new(100.0, 0.0), 2.0, 10);
        let mut s = ChallengeState::new(Pseudonym(7), &ChallengeConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        s.issue_challenge(&t, Vec2::ZERO, 10, 0.1, &road, &mut rng).unwrap();
        let TimeoutStep::Reissued(p2) = s.resolve_timeouts(&mut t, Vec2::ZERO, 12, 0.1, &road, &mut rng).unwrap()
        else {
            panic!("expected re-issue");
        };
        let r = ChallengeResponse {
            responder: Pseudonym(7),
            nonce: p2.nonce,
            epoch: 12,
        };
        assert_eq!(s.handle_response(&r, &mut t), ChallengeOutcome::VerifiedHonest);
        assert_eq!(s.resolve_timeouts(&mut t, Vec2::ZERO, 20, 0.1, &road, &mut rng), Ok(TimeoutStep::Idle));
        assert_eq!(s.attempts_sent, 2);
        assert_eq!(t.entry(Pseudonym(7)).unwrap().category, ClassificationCategory::Honest);
    }

    #[test]
    fn wrong_or_late_nonce_ignored() {
        let road = straight_road();
        let mut t = suspect_table(7, Vec2::new(100.0, 0.0), 2.0, 10);
        let mut s = ChallengeState::new(Pseudonym(7), &ChallengeConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = s.issue_challenge(&t, Vec2::ZERO, 10, 0.1, &road, &mut rng).unwrap();
        let wrong = ChallengeResponse {
            responder: Pseudonym(7),
            nonce: p.nonce ^ 1,
            epoch: 10,
        };
        assert_eq!(s.handle_response(&wrong, &mut t), ChallengeOutcome::Pending);
        let late = ChallengeResponse {
            nonce: p.nonce,
            epoch: 12,
            ..wrong
        };
        assert_eq!(s.handle_response(&late, &mut t), ChallengeOutcome::Pending);
    }

    #[test]
    fn nonce_validates_once() {
        let road = straight_road();
        let mut t = suspect_table(7, Vec2::new(100.0, 0.0), 2.0, 10);
        let mut s = ChallengeState::new(Pseudonym(7), &ChallengeConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = s.issue_challenge(&t, Vec2::ZERO, 10, 0.1, &road, &mut rng).unwrap();
        let r = ChallengeResponse {
            responder: Pseudonym(7),
            nonce: p.nonce,
            epoch: 10,
        };
        assert_eq!(s.handle_response(&r, &mut t), ChallengeOutcome::VerifiedHonest);
        assert!(s.outstanding.is_none());
    }

    #[test]
    fn response_after_confirmation_is_ignored() {
        let road = straight_road();
        let mut t = suspect_table(7, Vec2::new(100.0, 0.0), 2.0, 10);
        let cfg = ChallengeConfig {
            max_attempts: 1,
            per_attempt_timeout: 2,
        };
        let mut s = ChallengeState::new(Pseudonym(7), &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = s.issue_challenge(&t, Vec2::ZERO, 10, 0.1, &road, &mut rng).unwrap();
        s.resolve_timeouts(&mut t, Vec2::ZERO, 12, 0.1, &road, &mut rng).unwrap();
        let r = ChallengeResponse {
            responder: Pseudonym(7),
            nonce: p.nonce,
            epoch: 13,
        };
        assert_eq!(s.handle_response(&r, &mut t), ChallengeOutcome::ConfirmedMalicious);
        assert_eq!(t.entry(Pseudonym(7)).unwrap().category, ClassificationCategory::Malicious);
    }

    #[test]
    fn delivery_by_beam_geometry() {
        let road = straight_road();
        let cfg = ChannelConfig {
            beam_half_angle: 15.0,
            ..Default::default()
        };
        // Challenger at arc 0; positions measured along the nearly straight road.
        let at = |id: u32, arc: f64| VehicleState::honest(Pseudonym(id), arc, 0, 15.0);
        let origin = road.to_xy(0.0, 0);
        let vehicles = vec![at(1, 0.0), at(2, 150.0), at(3, 200.0)];
        let p = ChallengePacket {
            challenger: Pseudonym(1),
            target: Pseudonym(2),
            nonce: 1,
            origin,
            aim: road.to_xy(150.0, 0),
            issued_epoch: 0,
            attempt: 1,
        };
        let rx = deliver_challenge(&p, &vehicles, &cfg, &road);
        // target and the unrelated vehicle further along the axis; never the challenger
        assert_eq!(rx.into_iter().collect::<Vec<_>>(), vec![Pseudonym(2), Pseudonym(3)]);

        // Transmitter 40° off-axis, 120 m short of the aim point.
        let aim = Vec2::new(200.0, 0.0);
        let o = Vec2::ZERO;
        let tx = Vec2::new(80.0 * 40f64.to_radians().cos(), 80.0 * 40f64.to_radians().sin());
        assert!(!beam_contains(o, aim, tx, &cfg));
    }
}
