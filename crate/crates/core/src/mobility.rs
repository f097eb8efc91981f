//! Closed-loop road and constant-speed vehicle kinematics.
//!
//! The road is a ring of circumference `length` embedded as a circle
//! centered on the origin; lane `k` sits `k * lane_offset` meters further
//! out. All lanes run counter-clockwise.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::attack_model::GhostTrack;
use crate::geom::Vec2;
use crate::trust_engine::Pseudonym;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoadConfig {
    /// Loop circumference along lane 0, meters.
    pub length: f64,
    pub lanes: usize,
    /// Radial spacing between lanes, meters.
    pub lane_offset: f64,
    /// m/s
    pub speed_limit: f64,
}

impl Default for RoadConfig {
    fn default() -> Self {
        Self {
            length: 2000.0,
            lanes: 2,
            lane_offset: 3.5,
            speed_limit: 15.0,
        }
    }
}

impl RoadConfig {
    pub fn radius(&self) -> f64 {
        self.length / TAU
    }

    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if !(self.length > 0.0 && self.length.is_finite()) {
            out.push(("road.length".into(), format!("must be > 0, got {}", self.length)));
        }
        if self.lanes == 0 {
            out.push(("road.lanes".into(), "must be >= 1".into()));
        }
        if !(self.lane_offset >= 0.0) {
            out.push(("road.lane_offset".into(), format!("must be >= 0, got {}", self.lane_offset)));
        }
        if !(self.speed_limit > 0.0) {
            out.push(("road.speed_limit".into(), format!("must be > 0, got {}", self.speed_limit)));
        }
        out
    }

    /// Maps loop coordinate and lane onto the plane.
    pub fn to_xy(&self, arc_position: f64, lane: usize) -> Vec2 {
        let r0 = self.radius();
        let theta = arc_position / r0;
        let r = r0 + lane as f64 * self.lane_offset;
        Vec2::new(r * theta.cos(), r * theta.sin())
    }

    /// Direction of travel at a point near the road.
    pub fn tangent_at(&self, xy: Vec2) -> Vec2 {
        let theta = xy.y.atan2(xy.x);
        Vec2::new(-theta.sin(), theta.cos())
    }

    /// Wraps an arc coordinate into `[0, length)`.
    pub fn wrap(&self, arc: f64) -> f64 {
        let w = arc.rem_euclid(self.length);
        if w >= self.length {
            0.0
        } else {
            w
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Honest,
    SybilTransmitter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: Pseudonym,
    pub arc_position: f64,
    pub lane: usize,
    pub true_speed: f64,
    pub role: Role,
    /// Forged identities broadcast by this vehicle (transmitters only).
    pub ghosts: Vec<GhostTrack>,
}

impl VehicleState {
    pub fn honest(id: Pseudonym, arc_position: f64, lane: usize, true_speed: f64) -> Self {
        Self {
            id,
            arc_position,
            lane,
            true_speed,
            role: Role::Honest,
            ghosts: Vec::new(),
        }
    }

    pub fn position(&self, road: &RoadConfig) -> Vec2 {
        road.to_xy(self.arc_position, self.lane)
    }

    /// Moves the vehicle `true_speed * dt` along its lane.
    pub fn advance(&mut self, dt: f64, road: &RoadConfig) {
        self.arc_position = road.wrap(self.arc_position + self.true_speed * dt);
    }

    /// Velocity the vehicle puts in its beacon. Honest vehicles add
    /// Gaussian measurement noise; transmitters claim their ghost's speed.
    pub fn report_velocity<R: Rng + ?Sized>(&self, noise_sigma: f64, rng: &mut R) -> f64 {
        match self.role {
            Role::Honest => {
                let draw = if noise_sigma > 0.0 {
                    let z: f64 = StandardNormal.sample(rng);
                    z * noise_sigma
                } else {
                    0.0
                };
                noisy_velocity(self.true_speed, draw)
            }
            Role::SybilTransmitter => self.ghosts.first().map_or(0.0, |g| g.claimed_speed),
        }
    }
}

pub(crate) fn noisy_velocity(true_speed: f64, draw: f64) -> f64 {
    (true_speed + draw).max(0.0)
}
