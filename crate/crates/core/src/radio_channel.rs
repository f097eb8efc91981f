//! Unit-disk beacon delivery and the directional challenge beam.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::mobility::{RoadConfig, VehicleState};
use crate::trust_engine::Pseudonym;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Beacon range, meters.
    pub omni_range: f64,
    /// Challenge beam reach, meters.
    pub beam_range: f64,
    /// Beam half-angle, degrees.
    pub beam_half_angle: f64,
    /// Beacon delivery latency, epochs.
    pub delivery_delay: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            omni_range: 300.0,
            beam_range: 300.0,
            beam_half_angle: 3.0,
            delivery_delay: 0,
        }
    }
}

impl ChannelConfig {
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if !(self.omni_range > 0.0) {
            out.push(("channel.omni_range".into(), format!("must be > 0, got {}", self.omni_range)));
        }
        if !(self.beam_range > 0.0) {
            out.push(("channel.beam_range".into(), format!("must be > 0, got {}", self.beam_range)));
        }
        if !(self.beam_half_angle > 0.0 && self.beam_half_angle < 90.0) {
            out.push((
                "channel.beam_half_angle".into(),
                format!("must be in (0, 90) degrees, got {}", self.beam_half_angle),
            ));
        }
        out
    }
}

/// Physical vehicles, other than `sender`, within omni range of `sender_xy`.
pub fn omni_recipients(
    sender: Pseudonym,
    sender_xy: Vec2,
    all_vehicles: &[VehicleState],
    cfg: &ChannelConfig,
    road: &RoadConfig,
) -> BTreeSet<Pseudonym> {
    all_vehicles
        .iter()
        .filter(|v| v.id != sender && v.position(road).distance(sender_xy) <= cfg.omni_range)
        .map(|v| v.id)
        .collect()
}

/// Whether `point` lies inside the cone from `origin` toward `aim`.
pub fn beam_contains(origin: Vec2, aim: Vec2, point: Vec2, cfg: &ChannelConfig) -> bool {
    let to_point = point - origin;
    let dist = to_point.norm();
    if dist == 0.0 || dist > cfg.beam_range {
        return false;
    }
    let axis = aim - origin;
    axis.angle_to(to_point) <= cfg.beam_half_angle.to_radians()
}

/// Dead-reckoned position of a neighbor from its last report.
pub fn anticipated_position(last_xy: Vec2, claimed_speed: f64, heading_unit: Vec2, elapsed: f64) -> Vec2 {
    last_xy + heading_unit * (claimed_speed * elapsed)
}

/// Heading from the two most recent claimed positions, or the road
/// tangent when only one report exists (or both coincide).
pub fn claimed_heading(last: Vec2, prev: Option<Vec2>, road: &RoadConfig) -> Vec2 {
    prev.and_then(|p| (last - p).normalized())
        .unwrap_or_else(|| road.tangent_at(last))
}
