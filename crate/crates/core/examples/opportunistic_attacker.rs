//! Transmitters that answer any challenge they overhear, against beams of
//! different widths.

use std::collections::BTreeSet;
use std::error::Error;

use taser::attack_model::AttackerPolicy;
use taser::{sim_engine, ClassificationCategory, EventKind, Label, LogDetail, ScenarioConfig};

fn main() -> Result<(), Box<dyn Error>> {
    println!("half_angle  ghost_challenges  answered  fraction  ghosts_verified  ghosts_confirmed");
    for half_angle in [3.0, 5.0, 10.0, 15.0] {
        let (mut challenges, mut answered, mut verified, mut confirmed) = (0, 0, 0, 0);
        for seed in 1..=5 {
            let mut cfg = ScenarioConfig { seed, ..Default::default() };
            cfg.attack.policy = AttackerPolicy::Opportunistic;
            cfg.channel.beam_half_angle = half_angle;
            let out = sim_engine::run_with_detail(cfg, LogDetail::Summary)?;
            let ghosts: BTreeSet<_> = out.identities.iter().filter(|r| r.label == Label::Sybil).map(|r| r.id).collect();
            for e in out.log.events() {
                match &e.kind {
                    EventKind::Challenge { target, .. } if ghosts.contains(target) => challenges += 1,
                    EventKind::Response { claimed, .. } if ghosts.contains(claimed) => answered += 1,
                    _ => {}
                }
            }
            for r in out.identities.iter().filter(|r| r.label == Label::Sybil) {
                verified += r.ever_verified as usize;
                confirmed += (r.verdict == ClassificationCategory::Malicious) as usize;
            }
        }
        println!(
            "{half_angle:>10.1}  {challenges:>16}  {answered:>8}  {:>8.4}  {verified:>15}  {confirmed:>16}",
            answered as f64 / challenges as f64
        );
    }
    Ok(())
}
