//! One observer, three steady neighbors and a 2 m/s ghost.

use taser::trust_engine::{BsmStatus, Pseudonym, ScoreTable, TrustParams};
use taser::Vec2;

fn main() {
    let params = TrustParams::default();
    let mut table = ScoreTable::new(Pseudonym(0));
    let report = |sender: u32, velocity: f64, epoch: u64| BsmStatus {
        sender: Pseudonym(sender),
        velocity,
        timestamp: epoch,
        position: Vec2::new(20.0 * sender as f64, 0.0),
    };

    println!("epoch  avg      honest   ghost    ghost_category");
    for epoch in 0..12 {
        for s in 1..=3 {
            table.process_bsm(&report(s, 15.0, epoch), 15.0, &params, epoch).unwrap();
        }
        if epoch >= 4 {
            let out = table.process_bsm(&report(9, 2.0, epoch), 15.0, &params, epoch).unwrap();
            if let Some(ev) = out.suspect {
                println!("       suspect: avg {:.4} - trust {:.4} >= {} * avg", ev.average_trust, ev.trust, params.lambda);
            }
        }
        let ghost = table.entry(Pseudonym(9));
        println!(
            "{epoch:>5}  {:<7.4}  {:<7.4}  {:<7}  {}",
            table.average_trust(),
            table.entry(Pseudonym(1)).unwrap().trust,
            ghost.map_or("-".into(), |g| format!("{:.4}", g.trust)),
            ghost.map_or("-".into(), |g| g.category.to_string()),
        );
    }
}
