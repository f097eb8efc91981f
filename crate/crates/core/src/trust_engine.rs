//! Per-observer score table and the beacon trust-assessment procedure.
//!
//! Each observing vehicle keeps one [`ScoreTable`]. Every delivered
//! [`BsmStatus`] runs through [`ScoreTable::process_bsm`]:
//!
//! 1. snapshot the table-average trust,
//! 2. upsert the sender's entry (new entries are seeded with the snapshot),
//! 3. lift verified-honest senders back up to the snapshot,
//! 4. reward reports inside the ±δ speed band, otherwise run the velocity
//!    t-test and deduct only when it rejects,
//! 5. flag the sender as a suspect when `avg - trust >= λ·avg`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;
use crate::stat_tests::{velocity_t_test, TTestResult};

/// Simulation tick; one beacon interval.
pub type Epoch = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pseudonym(pub u32);

impl fmt::Display for Pseudonym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Periodic status beacon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsmStatus {
    pub sender: Pseudonym,
    /// m/s
    pub velocity: f64,
    pub timestamp: Epoch,
    /// meters
    pub position: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassificationCategory {
    Unknown,
    Honest,
    Suspect,
    Malicious,
}

impl ClassificationCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Unknown => "unknown",
            Self::Honest => "honest",
            Self::Suspect => "suspect",
            Self::Malicious => "malicious",
        }
    }
}

impl fmt::Display for ClassificationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrustParams {
    /// Significance level of the velocity t-test.
    pub alpha: f64,
    /// Weight of prior trust in each increment/deduction.
    pub beta: f64,
    /// Half-width of the permitted speed band, as a fraction of the limit.
    pub delta: f64,
    /// Suspect threshold as a fraction of the table average.
    pub lambda: f64,
    pub trust_min: f64,
    pub trust_max: f64,
    /// Reported velocities kept per neighbor for the t-test.
    pub window_size: usize,
    pub min_t_samples: usize,
    /// Epochs after a successful challenge during which a vehicle cannot be
    /// re-suspected.
    pub honest_grace_epochs: u64,
}

impl Default for TrustParams {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            beta: 0.1,
            delta: 0.4,
            lambda: 0.15,
            trust_min: -5.0,
            trust_max: 5.0,
            window_size: 20,
            min_t_samples: 3,
            honest_grace_epochs: 50,
        }
    }
}

impl TrustParams {
    /// Violated invariants as `(key, message)` pairs; empty when valid.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut bad = |k: &str, m: String| out.push((format!("trust.{k}"), m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bad("alpha", format!("must be in (0, 1), got {}", self.alpha));
        }
        if !(self.beta >= 0.0) {
            bad("beta", format!("must be >= 0, got {}", self.beta));
        }
        if !(self.delta >= 0.0) {
            bad("delta", format!("must be >= 0, got {}", self.delta));
        }
        if !(self.lambda >= 0.0) {
            bad("lambda", format!("must be >= 0, got {}", self.lambda));
        }
        if !(self.trust_min < self.trust_max) {
            bad(
                "trust_min",
                format!("trust_min ({}) must be below trust_max ({})", self.trust_min, self.trust_max),
            );
        }
        let reach = self.beta * self.trust_min.abs().max(self.trust_max.abs());
        if !(reach < 1.0) {
            bad(
                "beta",
                format!("beta * max(|trust_min|, |trust_max|) must be < 1, got {reach}"),
            );
        }
        if self.window_size == 0 {
            bad("window_size", "must be >= 1".into());
        }
        out
    }

    fn clamp(&self, t: f64) -> f64 {
        t.clamp(self.trust_min, self.trust_max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub pseudonym: Pseudonym,
    pub last_position: Vec2,
    /// Claimed position from the report before the last one; heading source.
    pub prev_position: Option<Vec2>,
    pub last_velocity: f64,
    pub last_timestamp: Epoch,
    pub category: ClassificationCategory,
    pub trust: f64,
    pub velocity_window: VecDeque<f64>,
    pub first_seen: Epoch,
    pub final_classified_at: Option<Epoch>,
    /// Epoch of the most recent successful challenge.
    pub verified_at: Option<Epoch>,
}

impl ScoreEntry {
    fn new(bsm: &BsmStatus, trust: f64) -> Self {
        Self {
            pseudonym: bsm.sender,
            last_position: bsm.position,
            prev_position: None,
            last_velocity: bsm.velocity,
            last_timestamp: bsm.timestamp,
            category: ClassificationCategory::Unknown,
            trust,
            velocity_window: VecDeque::new(),
            first_seen: bsm.timestamp,
            final_classified_at: None,
            verified_at: None,
        }
    }

    /// Honest and still inside the post-verification grace period.
    pub fn in_honest_grace(&self, epoch: Epoch, grace: u64) -> bool {
        self.category == ClassificationCategory::Honest
            && self.verified_at.is_some_and(|v| epoch.saturating_sub(v) < grace)
    }

    /// Whether a fresh suspicion may (re)classify this entry as Suspect.
    pub fn can_become_suspect(&self, epoch: Epoch, grace: u64) -> bool {
        match self.category {
            ClassificationCategory::Malicious | ClassificationCategory::Suspect => false,
            ClassificationCategory::Honest => !self.in_honest_grace(epoch, grace),
            ClassificationCategory::Unknown => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuspectEvent {
    pub observer: Pseudonym,
    pub subject: Pseudonym,
    pub epoch: Epoch,
    /// Table average used in the threshold comparison.
    pub average_trust: f64,
    pub trust: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrustError {
    #[error("stale BSM from {sender}: timestamp {got} precedes last seen {last}")]
    StaleTimestamp { sender: Pseudonym, got: Epoch, last: Epoch },
}

/// What [`ScoreTable::process_bsm`] did with one beacon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsmOutcome {
    pub average_trust: f64,
    pub within_threshold: bool,
    pub t_test: Option<TTestResult>,
    pub trust_after: f64,
    pub suspect: Option<SuspectEvent>,
}

pub fn within_speed_threshold(velocity: f64, speed_limit: f64, delta: f64) -> bool {
    velocity >= speed_limit * (1.0 - delta) && velocity <= speed_limit * (1.0 + delta)
}

pub fn trust_increment(trust: f64, params: &TrustParams) -> f64 {
    params.clamp(trust + (1.0 + params.beta * trust))
}

pub fn trust_deduction(trust: f64, params: &TrustParams) -> f64 {
    params.clamp(trust - (1.0 - params.beta * trust))
}

/// Slack on the `>=` comparison so exact decimal ties stay inclusive after
/// rounding (e.g. `-2.0 - (-1.7)` vs `0.15 * -2.0`).
const SUSPECT_TIE_EPS: f64 = 1e-12;

/// `average - trust >= lambda * average`, applied for any sign of the
/// average.
pub fn check_suspect(entry: &ScoreEntry, average_trust: f64, lambda: f64) -> bool {
    suspect_inequality(entry.trust, average_trust, lambda)
}

pub(crate) fn suspect_inequality(trust: f64, average: f64, lambda: f64) -> bool {
    let lhs = average - trust;
    let rhs = lambda * average;
    lhs >= rhs - SUSPECT_TIE_EPS * average.abs().max(trust.abs()).max(1.0)
}

pub fn apply_honest_floor(entry: &mut ScoreEntry, average_trust: f64) {
    if entry.category == ClassificationCategory::Honest && entry.trust < average_trust {
        entry.trust = average_trust;
    }
}

/// Pseudonyms of every sender whose reported position lies within
/// `epsilon` of another distinct sender's.
pub fn detect_colocation(bsms: &[BsmStatus], epsilon: f64) -> BTreeSet<Pseudonym> {
    let mut hits = BTreeSet::new();
    for (i, a) in bsms.iter().enumerate() {
        for b in &bsms[i + 1..] {
            if a.sender != b.sender && a.position.distance(b.position) <= epsilon {
                hits.insert(a.sender);
                hits.insert(b.sender);
            }
        }
    }
    hits
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub owner: Pseudonym,
    entries: BTreeMap<Pseudonym, ScoreEntry>,
    suspect_list: BTreeSet<Pseudonym>,
}

impl ScoreTable {
    pub fn new(owner: Pseudonym) -> Self {
        Self {
            owner,
            entries: BTreeMap::new(),
            suspect_list: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, id: Pseudonym) -> Option<&ScoreEntry> {
        self.entries.get(&id)
    }

    pub fn entry_mut(&mut self, id: Pseudonym) -> Option<&mut ScoreEntry> {
        self.entries.get_mut(&id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &ScoreEntry> {
        self.entries.values()
    }

    pub fn suspect_list(&self) -> &BTreeSet<Pseudonym> {
        &self.suspect_list
    }

    /// Mean trust over all entries; 0 for an empty table.
    pub fn average_trust(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.values().map(|e| e.trust).sum::<f64>() / self.entries.len() as f64
    }

    /// Records the beacon's report fields, creating the entry (seeded at the
    /// current table average) if needed. Trust is left untouched otherwise.
    pub fn upsert_entry(
        &mut self,
        bsm: &BsmStatus,
        window_size: usize,
    ) -> Result<&mut ScoreEntry, TrustError> {
        if let Some(e) = self.entries.get(&bsm.sender) {
            if bsm.timestamp < e.last_timestamp {
                return Err(TrustError::StaleTimestamp {
                    sender: bsm.sender,
                    got: bsm.timestamp,
                    last: e.last_timestamp,
                });
            }
        }
        let seed = self.average_trust();
        let entry = self
            .entries
            .entry(bsm.sender)
            .or_insert_with(|| ScoreEntry::new(bsm, seed));
        if !entry.velocity_window.is_empty() {
            entry.prev_position = Some(entry.last_position);
        }
        entry.last_position = bsm.position;
        entry.last_velocity = bsm.velocity;
        entry.last_timestamp = bsm.timestamp;
        entry.velocity_window.push_back(bsm.velocity);
        while entry.velocity_window.len() > window_size.max(1) {
            entry.velocity_window.pop_front();
        }
        Ok(entry)
    }

    /// Runs the full trust assessment for one delivered beacon.
    pub fn process_bsm(
        &mut self,
        bsm: &BsmStatus,
        speed_limit: f64,
        params: &TrustParams,
        epoch: Epoch,
    ) -> Result<BsmOutcome, TrustError> {
        let average = self.average_trust();
        let owner = self.owner;
        let entry = self.upsert_entry(bsm, params.window_size)?;
        apply_honest_floor(entry, average);

        let within = within_speed_threshold(bsm.velocity, speed_limit, params.delta);
        let mut t_test = None;
        if within {
            entry.trust = trust_increment(entry.trust, params);
        } else {
            let samples: Vec<f64> = entry.velocity_window.iter().copied().collect();
            let result = velocity_t_test(
                &samples,
                speed_limit,
                params.alpha,
                params.delta,
                params.min_t_samples,
            )
            .expect("window holds the current report");
            if result.reject {
                entry.trust = trust_deduction(entry.trust, params);
            }
            t_test = Some(result);
        }

        let trust_after = entry.trust;
        let mut suspect = None;
        if check_suspect(entry, average, params.lambda)
            && entry.can_become_suspect(epoch, params.honest_grace_epochs)
        {
            entry.category = ClassificationCategory::Suspect;
            suspect = Some(SuspectEvent {
                observer: owner,
                subject: bsm.sender,
                epoch,
                average_trust: average,
                trust: trust_after,
            });
            self.suspect_list.insert(bsm.sender);
        }

        Ok(BsmOutcome {
            average_trust: average,
            within_threshold: within,
            t_test,
            trust_after,
            suspect,
        })
    }

    /// Marks an entry Suspect outside the λ path (co-located reports).
    /// Returns false when the entry is absent or not eligible.
    pub fn mark_suspect(&mut self, id: Pseudonym, epoch: Epoch, grace: u64) -> bool {
        match self.entries.get_mut(&id) {
            Some(e) if e.can_become_suspect(epoch, grace) => {
                e.category = ClassificationCategory::Suspect;
                self.suspect_list.insert(id);
                true
            }
            _ => false,
        }
    }

    /// Successful presence check: Honest, off the suspect list, floored.
    pub(crate) fn mark_verified(&mut self, id: Pseudonym, epoch: Epoch) -> Option<f64> {
        let average = self.average_trust();
        let e = self.entries.get_mut(&id)?;
        if e.category == ClassificationCategory::Malicious {
            return None;
        }
        e.category = ClassificationCategory::Honest;
        e.verified_at = Some(epoch);
        e.final_classified_at = Some(epoch);
        apply_honest_floor(e, average);
        self.suspect_list.remove(&id);
        Some(e.trust)
    }

    /// Failed presence check: terminal.
    pub(crate) fn mark_malicious(&mut self, id: Pseudonym, epoch: Epoch) -> bool {
        let Some(e) = self.entries.get_mut(&id) else {
            return false;
        };
        if e.category == ClassificationCategory::Malicious {
            return false;
        }
        e.category = ClassificationCategory::Malicious;
        e.final_classified_at = Some(epoch);
        self.suspect_list.insert(id);
        true
    }
}
