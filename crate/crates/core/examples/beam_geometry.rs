//! How often a transmitter trailing its ghost on the ring sits inside a
//! challenge beam aimed at the ghost, by beam half-angle.
//!
//! On a circle, every point on the arc between challenger and ghost sees
//! the chord under the same inscribed angle, so a transmitter within about
//! 2 R theta of arc from its ghost stays inside a beam of half-angle theta.

use taser::mobility::RoadConfig;
use taser::radio_channel::{beam_contains, ChannelConfig};

fn main() {
    let road = RoadConfig::default();
    let ghost_arc = 1000.0;
    let ghost = road.to_xy(ghost_arc, 0);
    println!("R = {:.2} m", road.radius());
    for half_angle in [1.0, 3.0, 5.0, 10.0, 15.0] {
        let cfg = ChannelConfig { beam_half_angle: half_angle, ..Default::default() };
        let mut hit = 0;
        let mut total = 0;
        for challenger in (0..300).step_by(5).map(|d| ghost_arc + 20.0 + d as f64) {
            for offset in (50..=150).step_by(5) {
                let origin = road.to_xy(challenger, 1);
                let tx = road.to_xy(ghost_arc - offset as f64, 0);
                if origin.distance(ghost) > cfg.beam_range {
                    continue;
                }
                total += 1;
                hit += beam_contains(origin, ghost, tx, &cfg) as usize;
            }
        }
        println!(
            "half-angle {half_angle:>4.1} deg  2R*theta = {:>6.1} m  transmitter in beam {:>5.1}%",
            2.0 * road.radius() * half_angle.to_radians(),
            100.0 * hit as f64 / total as f64
        );
    }
}
