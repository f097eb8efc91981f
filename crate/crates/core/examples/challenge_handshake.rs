use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use taser::challenge_protocol::{ChallengeConfig, ChallengeResponse, ChallengeState, TimeoutStep};
use taser::mobility::RoadConfig;
use taser::trust_engine::{BsmStatus, Pseudonym, ScoreTable};
use taser::Vec2;

fn suspect(table: &mut ScoreTable, id: u32, at: Vec2, velocity: f64) {
    for (e, p) in [(0, at - Vec2::new(0.0, 0.2)), (1, at)] {
        let b = BsmStatus { sender: Pseudonym(id), velocity, timestamp: e, position: p };
        table.upsert_entry(&b, 20).unwrap();
    }
    table.mark_suspect(Pseudonym(id), 1, 50);
}

fn main() {
    let road = RoadConfig::default();
    let cfg = ChallengeConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut table = ScoreTable::new(Pseudonym(1));
    let me = road.to_xy(0.0, 0);

    // An honest vehicle echoes the nonce on the first attempt.
    suspect(&mut table, 2, road.to_xy(80.0, 0), 15.0);
    let mut honest = ChallengeState::new(Pseudonym(2), &cfg);
    let p = honest.issue_challenge(&table, me, 1, 0.1, &road, &mut rng).unwrap();
    println!("challenge to 2: nonce {:#018x} aim ({:.1}, {:.1})", p.nonce, p.aim.x, p.aim.y);
    let reply = ChallengeResponse { responder: Pseudonym(2), nonce: p.nonce, epoch: 1 };
    println!("  -> {:?}, category {}", honest.handle_response(&reply, &mut table), table.entry(Pseudonym(2)).unwrap().category);

    // A ghost never answers: three attempts, then confirmation.
    suspect(&mut table, 9, road.to_xy(120.0, 0), 2.0);
    let mut ghost = ChallengeState::new(Pseudonym(9), &cfg);
    ghost.issue_challenge(&table, me, 1, 0.1, &road, &mut rng).unwrap();
    for epoch in 2..=8 {
        match ghost.resolve_timeouts(&mut table, me, epoch, 0.1, &road, &mut rng).unwrap() {
            TimeoutStep::Reissued(p) => println!("epoch {epoch}: attempt {} re-aimed at ({:.2}, {:.2})", p.attempt, p.aim.x, p.aim.y),
            TimeoutStep::ConfirmedMalicious => println!("epoch {epoch}: 9 confirmed malicious"),
            TimeoutStep::Waiting | TimeoutStep::Idle => {}
        }
    }
}
