//! Epoch-driven world: kinematics, beacons, trust processing and the
//! challenge lifecycle, in a fixed sub-phase order.
//!
//! Each [`World::step_epoch`] runs:
//!
//! 1. advance physical vehicles and ghost tracks;
//! 2. every identity emits its beacon (honest: noisy true state, ghost:
//!    forged), sorted by sender;
//! 3. beacons go out over the unit-disk channel from the emitting radio;
//! 4. each honest receiver processes its inbox sorted by sender id;
//! 5. each receiver checks its inbox for co-located claims;
//! 6. challenge timeouts, new challenges, beam delivery and responses;
//! 7. epoch += 1.
//!
//! Sybil transmitters are physical but keep no score table.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::attack_model::{attacker_respond, spawn_sybil};
use crate::challenge_protocol::{
    deliver_challenge, ChallengeOutcome, ChallengePacket, ChallengeResponse, ChallengeState, TimeoutStep,
};
use crate::config::{ConfigError, ScenarioConfig};
use crate::events::{EventKind, EventLog, LogDetail};
use crate::geom::Vec2;
use crate::metrics_report::{self, Aggregation, Label, RunMetrics};
use crate::mobility::{Role, VehicleState};
use crate::radio_channel::omni_recipients;
use crate::rng::Streams;
use crate::trust_engine::{detect_colocation, BsmStatus, ClassificationCategory, Epoch, Pseudonym, ScoreTable};

#[derive(Debug, Clone)]
pub struct Observer {
    pub table: ScoreTable,
    pub challenges: BTreeMap<Pseudonym, ChallengeState>,
}

/// Per-identity summary at the end of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub id: Pseudonym,
    pub label: Label,
    /// Epochs in which at least one honest observer received its beacon.
    pub heard_epochs: u64,
    pub verdict: ClassificationCategory,
    /// Any observer ever verified this identity by challenge.
    pub ever_verified: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: EventLog,
    pub metrics: RunMetrics,
    pub identities: Vec<IdentityReport>,
}

#[derive(Debug, Clone)]
struct InFlight {
    deliver_at: Epoch,
    receiver: Pseudonym,
    bsm: BsmStatus,
}

#[derive(Debug, Clone)]
pub struct World {
    config: ScenarioConfig,
    epoch: Epoch,
    vehicles: Vec<VehicleState>,
    /// Index into `vehicles` by physical id.
    index: BTreeMap<Pseudonym, usize>,
    observers: BTreeMap<Pseudonym, Observer>,
    labels: BTreeMap<Pseudonym, Label>,
    streams: Streams,
    log: EventLog,
    in_flight: VecDeque<InFlight>,
    heard: BTreeMap<Pseudonym, u64>,
}

impl World {
    pub fn initialize(config: ScenarioConfig, detail: LogDetail) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut streams = Streams::new(config.seed);
        let road = &config.road;
        let n = config.vehicles;
        let n_tx = config.sybil_transmitters().min(n);
        let n_ghosts = n_tx * config.attack.ghosts_per_attacker;

        let mut ids: Vec<u32> = (0..(n + n_ghosts) as u32).collect();
        ids.shuffle(&mut streams.placement);
        let (physical_ids, ghost_ids) = ids.split_at(n);

        // Random lane assignment, then uniform placement with a minimum gap.
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut streams.placement);
        let mut arcs = vec![0.0; n];
        let mut lanes = vec![0usize; n];
        for lane in 0..road.lanes {
            let members: Vec<usize> = order.iter().copied().skip(lane).step_by(road.lanes).collect();
            let slack = road.length - members.len() as f64 * config.min_headway;
            let mut draws: Vec<f64> = members
                .iter()
                .map(|_| if slack > 0.0 { streams.placement.random_range(0.0..slack) } else { 0.0 })
                .collect();
            draws.sort_by(f64::total_cmp);
            let rotation = streams.placement.random_range(0.0..road.length);
            for (k, (&vi, u)) in members.iter().zip(draws).enumerate() {
                arcs[vi] = road.wrap(u + k as f64 * config.min_headway + rotation);
                lanes[vi] = lane;
            }
        }

        let mut is_tx = vec![false; n];
        let mut pick: Vec<usize> = (0..n).collect();
        pick.shuffle(&mut streams.placement);
        for &i in pick.iter().take(n_tx) {
            is_tx[i] = true;
        }

        let mut vehicles: Vec<VehicleState> = (0..n)
            .map(|i| {
                let mut v = VehicleState::honest(Pseudonym(physical_ids[i]), arcs[i], lanes[i], config.honest_speed);
                if is_tx[i] {
                    v.role = Role::SybilTransmitter;
                }
                v
            })
            .collect();
        vehicles.sort_by_key(|v| v.id);

        let mut labels = BTreeMap::new();
        let mut next_ghost = ghost_ids.iter();
        for v in vehicles.iter_mut() {
            match v.role {
                Role::Honest => {
                    labels.insert(v.id, Label::Honest);
                }
                Role::SybilTransmitter => {
                    for _ in 0..config.attack.ghosts_per_attacker {
                        let gid = Pseudonym(*next_ghost.next().expect("one id per ghost"));
                        let g = spawn_sybil(v, gid, &config.attack, &mut streams.ghost_offsets, road);
                        labels.insert(gid, Label::Sybil);
                        v.ghosts.push(g);
                    }
                }
            }
        }

        let index = vehicles.iter().enumerate().map(|(i, v)| (v.id, i)).collect();
        let observers = vehicles
            .iter()
            .filter(|v| v.role == Role::Honest)
            .map(|v| {
                (
                    v.id,
                    Observer {
                        table: ScoreTable::new(v.id),
                        challenges: BTreeMap::new(),
                    },
                )
            })
            .collect();

        Ok(Self {
            config,
            epoch: 0,
            vehicles,
            index,
            observers,
            labels,
            streams,
            log: EventLog::new(detail),
            in_flight: VecDeque::new(),
            heard: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn epoch(&self) -> Epoch {
        self.epoch
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn observers(&self) -> &BTreeMap<Pseudonym, Observer> {
        &self.observers
    }

    pub fn observer(&self, id: Pseudonym) -> Option<&Observer> {
        self.observers.get(&id)
    }

    /// Ground truth for every broadcasting identity.
    pub fn labels(&self) -> &BTreeMap<Pseudonym, Label> {
        &self.labels
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn step_epoch(&mut self) {
        let e = self.epoch;
        let dt = self.config.epoch_duration;
        let road = self.config.road.clone();

        // 1. kinematics
        for v in &mut self.vehicles {
            v.advance(dt, &road);
            for g in &mut v.ghosts {
                g.advance(dt, &road);
            }
        }
        let positions: Vec<Vec2> = self.vehicles.iter().map(|v| v.position(&road)).collect();

        // 2. beacons
        let mut emissions: Vec<(usize, BsmStatus)> = Vec::with_capacity(self.labels.len());
        for (i, v) in self.vehicles.iter().enumerate() {
            match v.role {
                Role::Honest => {
                    let velocity = v.report_velocity(self.config.noise_sigma, &mut self.streams.noise);
                    emissions.push((
                        i,
                        BsmStatus {
                            sender: v.id,
                            velocity,
                            timestamp: e,
                            position: positions[i],
                        },
                    ));
                }
                Role::SybilTransmitter => {
                    emissions.extend(v.ghosts.iter().map(|g| (i, g.forge_bsm(e, &road))));
                }
            }
        }
        emissions.sort_by_key(|(_, b)| b.sender);
        for (_, b) in &emissions {
            self.log.push(
                e,
                EventKind::Bsm {
                    sender: b.sender,
                    velocity: b.velocity,
                    position: b.position,
                },
            );
        }

        // 3. omni delivery from the emitting radio
        for (radio, bsm) in &emissions {
            let sender = &self.vehicles[*radio];
            let heard = omni_recipients(sender.id, positions[*radio], &self.vehicles, &self.config.channel, &road);
            for receiver in heard.into_iter().filter(|r| self.observers.contains_key(r)) {
                self.in_flight.push_back(InFlight {
                    deliver_at: e + self.config.channel.delivery_delay,
                    receiver,
                    bsm: *bsm,
                });
            }
        }
        let mut inboxes: BTreeMap<Pseudonym, Vec<BsmStatus>> = BTreeMap::new();
        while self.in_flight.front().is_some_and(|m| m.deliver_at <= e) {
            let m = self.in_flight.pop_front().expect("checked non-empty");
            inboxes.entry(m.receiver).or_default().push(m.bsm);
        }
        for inbox in inboxes.values_mut() {
            inbox.sort_by_key(|b| b.sender);
        }

        // 4. trust assessment
        let mut heard_now = BTreeSet::new();
        let mut new_suspects: BTreeMap<Pseudonym, Vec<Pseudonym>> = BTreeMap::new();
        for (receiver, inbox) in &inboxes {
            let obs = self.observers.get_mut(receiver).expect("receivers are observers");
            for bsm in inbox {
                let Ok(out) = obs
                    .table
                    .process_bsm(bsm, road.speed_limit, &self.config.trust, e)
                else {
                    continue;
                };
                heard_now.insert(bsm.sender);
                let category = obs.table.entry(bsm.sender).expect("just upserted").category;
                self.log.push(
                    e,
                    EventKind::Trust {
                        observer: *receiver,
                        subject: bsm.sender,
                        trust: out.trust_after,
                        category,
                    },
                );
                if let Some(s) = out.suspect {
                    self.log.push(
                        e,
                        EventKind::Suspect {
                            observer: *receiver,
                            subject: s.subject,
                            average_trust: s.average_trust,
                        },
                    );
                    new_suspects.entry(*receiver).or_default().push(s.subject);
                }
            }
        }
        for s in heard_now {
            *self.heard.entry(s).or_default() += 1;
        }

        // 5. co-located claims
        for (receiver, inbox) in &inboxes {
            let obs = self.observers.get_mut(receiver).expect("receivers are observers");
            for id in detect_colocation(inbox, self.config.colocation_epsilon) {
                if obs.table.mark_suspect(id, e, self.config.trust.honest_grace_epochs) {
                    self.log.push(
                        e,
                        EventKind::Colocation {
                            observer: *receiver,
                            subject: id,
                        },
                    );
                    new_suspects.entry(*receiver).or_default().push(id);
                }
            }
        }

        // 6. challenges
        let ctx = ChallengeCtx {
            config: &self.config,
            vehicles: &self.vehicles,
            positions: &positions,
            epoch: e,
        };
        for (oid, obs) in self.observers.iter_mut() {
            let me = positions[self.index[oid]];
            let pending: Vec<Pseudonym> = obs
                .challenges
                .iter()
                .filter(|(_, s)| s.is_pending())
                .map(|(t, _)| *t)
                .collect();
            for target in pending {
                let state = obs.challenges.get_mut(&target).expect("listed above");
                match state.resolve_timeouts(&mut obs.table, me, e, dt, &road, &mut self.streams.nonces) {
                    Ok(TimeoutStep::Reissued(p)) => {
                        ctx.send(&p, state, &mut obs.table, &mut self.log);
                    }
                    Ok(TimeoutStep::ConfirmedMalicious) => {
                        let entry = obs.table.entry(target).expect("challenged entries exist");
                        self.log.push(
                            e,
                            EventKind::Malicious {
                                observer: *oid,
                                subject: target,
                                trust: entry.trust,
                                first_seen: entry.first_seen,
                            },
                        );
                    }
                    Ok(TimeoutStep::Waiting | TimeoutStep::Idle) | Err(_) => {}
                }
            }

            let Some(mut fresh) = new_suspects.remove(oid) else {
                continue;
            };
            fresh.sort();
            fresh.dedup();
            for target in fresh {
                if obs.challenges.get(&target).is_some_and(ChallengeState::is_pending) {
                    continue;
                }
                let mut state = ChallengeState::new(target, &self.config.challenge);
                if let Ok(p) = state.issue_challenge(&obs.table, me, e, dt, &road, &mut self.streams.nonces) {
                    ctx.send(&p, &mut state, &mut obs.table, &mut self.log);
                    obs.challenges.insert(target, state);
                }
            }
        }

        self.epoch += 1;
    }

    pub fn identity_reports(&self) -> Vec<IdentityReport> {
        self.labels
            .iter()
            .map(|(&id, &label)| {
                let entries: Vec<_> = self.observers.values().filter_map(|o| o.table.entry(id)).collect();
                let malicious = entries.iter().any(|e| e.category == ClassificationCategory::Malicious);
                let verified = entries.iter().any(|e| e.verified_at.is_some());
                let suspect = entries.iter().any(|e| e.category == ClassificationCategory::Suspect);
                let verdict = if malicious {
                    ClassificationCategory::Malicious
                } else if verified {
                    ClassificationCategory::Honest
                } else if suspect {
                    ClassificationCategory::Suspect
                } else {
                    ClassificationCategory::Unknown
                };
                IdentityReport {
                    id,
                    label,
                    heard_epochs: self.heard.get(&id).copied().unwrap_or(0),
                    verdict,
                    ever_verified: verified,
                }
            })
            .collect()
    }

    /// `(ground truth, verdict)` per evaluated unit under the configured
    /// aggregation.
    pub fn verdicts(&self) -> Vec<(Label, ClassificationCategory)> {
        match self.config.metrics.aggregation {
            Aggregation::Identity => self
                .identity_reports()
                .into_iter()
                .map(|r| (r.label, r.verdict))
                .collect(),
            Aggregation::Observer => self
                .observers
                .values()
                .flat_map(|o| o.table.entries())
                .map(|e| (self.labels[&e.pseudonym], e.category))
                .collect(),
        }
    }

    pub fn metrics(&self) -> RunMetrics {
        let confusion = metrics_report::confusion_pairs(self.verdicts());
        metrics_report::RunMetrics::new(confusion, metrics_report::detection_time_stats(&self.log))
    }

    pub fn finish(self) -> RunOutput {
        let metrics = self.metrics();
        let identities = self.identity_reports();
        RunOutput {
            log: self.log,
            metrics,
            identities,
        }
    }
}

struct ChallengeCtx<'a> {
    config: &'a ScenarioConfig,
    vehicles: &'a [VehicleState],
    positions: &'a [Vec2],
    epoch: Epoch,
}

impl ChallengeCtx<'_> {
    /// Beams one packet, collects the responses physically able to answer
    /// and feeds them to the challenge state.
    fn send(&self, p: &ChallengePacket, state: &mut ChallengeState, table: &mut ScoreTable, log: &mut EventLog) {
        let e = self.epoch;
        log.push(
            e,
            EventKind::Challenge {
                observer: p.challenger,
                target: p.target,
                attempt: p.attempt,
                nonce: p.nonce,
                origin: p.origin,
                aim: p.aim,
            },
        );
        let receivers = deliver_challenge(p, self.vehicles, &self.config.channel, &self.config.road);
        for rid in receivers {
            let i = self
                .vehicles
                .binary_search_by_key(&rid, |v| v.id)
                .expect("receivers are physical vehicles");
            let v = &self.vehicles[i];
            let response = match v.role {
                Role::Honest if v.id == p.target => Some(ChallengeResponse {
                    responder: v.id,
                    nonce: p.nonce,
                    epoch: e,
                }),
                Role::SybilTransmitter if v.ghosts.iter().any(|g| g.ghost_id == p.target) => {
                    attacker_respond(self.config.attack.policy, true, p, e)
                }
                _ => None,
            };
            let Some(resp) = response else { continue };
            if self.positions[i].distance(p.origin) > self.config.channel.omni_range {
                continue;
            }
            let was_pending = state.is_pending();
            let outcome = state.handle_response(&resp, table);
            let accepted = was_pending && outcome == ChallengeOutcome::VerifiedHonest;
            log.push(
                e,
                EventKind::Response {
                    observer: p.challenger,
                    claimed: resp.responder,
                    responder_vehicle: v.id,
                    nonce: resp.nonce,
                    position: self.positions[i],
                    accepted,
                },
            );
            if accepted {
                let entry = table.entry(p.target).expect("challenged entries exist");
                log.push(
                    e,
                    EventKind::Verified {
                        observer: p.challenger,
                        subject: p.target,
                        trust: entry.trust,
                        first_seen: entry.first_seen,
                    },
                );
            }
        }
    }
}

pub fn initialize(config: ScenarioConfig) -> Result<World, ConfigError> {
    World::initialize(config, LogDetail::Full)
}

/// Runs a scenario to completion with a full event log.
pub fn run(config: ScenarioConfig) -> Result<RunOutput, ConfigError> {
    run_with_detail(config, LogDetail::Full)
}

pub fn run_with_detail(config: ScenarioConfig, detail: LogDetail) -> Result<RunOutput, ConfigError> {
    let mut world = World::initialize(config, detail)?;
    for _ in 0..world.config.duration_epochs {
        world.step_epoch();
    }
    Ok(world.finish())
}
