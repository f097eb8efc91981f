//! Ordered simulation event log and its CSV form.
//!
//! `events.csv` columns, in order:
//!
//! | column     | meaning                                                        |
//! |------------|----------------------------------------------------------------|
//! | epoch      | tick the event happened in                                     |
//! | kind       | `bsm`, `trust`, `suspect`, `colocation`, `challenge`, `response`, `verified`, `malicious` |
//! | observer   | observing / challenging vehicle (empty for `bsm`)              |
//! | subject    | identity the event is about (sender, target)                   |
//! | value      | velocity (`bsm`), trust after update (`trust`, `verified`, `malicious`), table average (`suspect`), attempt (`challenge`), responding vehicle id (`response`) |
//! | label      | category after update (`trust`), `accepted`/`ignored` (`response`) |
//! | x, y       | claimed position (`bsm`), challenger position (`challenge`), responder position (`response`) |
//! | aim_x, aim_y | beam aim point (`challenge`)                                 |
//! | nonce      | challenge nonce (`challenge`, `response`)                      |
//! | first_seen | epoch of the observer's first report from the subject (`verified`, `malicious`) |

use std::io::Write;

use crate::geom::Vec2;
use crate::trust_engine::{ClassificationCategory, Epoch, Pseudonym};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogDetail {
    /// Every beacon and every trust update.
    #[default]
    Full,
    /// Suspicions, challenges and classifications only.
    Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Bsm {
        sender: Pseudonym,
        velocity: f64,
        position: Vec2,
    },
    Trust {
        observer: Pseudonym,
        subject: Pseudonym,
        trust: f64,
        category: ClassificationCategory,
    },
    Suspect {
        observer: Pseudonym,
        subject: Pseudonym,
        average_trust: f64,
    },
    Colocation {
        observer: Pseudonym,
        subject: Pseudonym,
    },
    Challenge {
        observer: Pseudonym,
        target: Pseudonym,
        attempt: u32,
        nonce: u64,
        origin: Vec2,
        aim: Vec2,
    },
    Response {
        observer: Pseudonym,
        claimed: Pseudonym,
        responder_vehicle: Pseudonym,
        nonce: u64,
        position: Vec2,
        accepted: bool,
    },
    Verified {
        observer: Pseudonym,
        subject: Pseudonym,
        trust: f64,
        first_seen: Epoch,
    },
    Malicious {
        observer: Pseudonym,
        subject: Pseudonym,
        trust: f64,
        first_seen: Epoch,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Bsm { .. } => "bsm",
            EventKind::Trust { .. } => "trust",
            EventKind::Suspect { .. } => "suspect",
            EventKind::Colocation { .. } => "colocation",
            EventKind::Challenge { .. } => "challenge",
            EventKind::Response { .. } => "response",
            EventKind::Verified { .. } => "verified",
            EventKind::Malicious { .. } => "malicious",
        }
    }

    fn is_bulk(&self) -> bool {
        matches!(self, EventKind::Bsm { .. } | EventKind::Trust { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub epoch: Epoch,
    pub kind: EventKind,
}

pub const EVENT_COLUMNS: [&str; 12] = [
    "epoch", "kind", "observer", "subject", "value", "label", "x", "y", "aim_x", "aim_y", "nonce",
    "first_seen",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    detail: LogDetail,
    events: Vec<Event>,
}

impl EventLog {
    pub fn new(detail: LogDetail) -> Self {
        Self {
            detail,
            events: Vec::new(),
        }
    }

    pub fn detail(&self) -> LogDetail {
        self.detail
    }

    pub fn push(&mut self, epoch: Epoch, kind: EventKind) {
        debug_assert!(self.events.last().is_none_or(|e| e.epoch <= epoch));
        if self.detail == LogDetail::Summary && kind.is_bulk() {
            return;
        }
        self.events.push(Event { epoch, kind });
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(EVENT_COLUMNS)?;
        for e in &self.events {
            w.write_record(row(e))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest decimal that round-trips the value rounded to 9 significant
/// digits.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("float formatting round-trips");
    format!("{rounded}")
}

fn id(p: Pseudonym) -> String {
    p.0.to_string()
}

fn row(e: &Event) -> [String; 12] {
    let mut r: [String; 12] = Default::default();
    r[0] = e.epoch.to_string();
    r[1] = e.kind.name().to_string();
    match &e.kind {
        EventKind::Bsm {
            sender,
            velocity,
            position,
        } => {
            r[3] = id(*sender);
            r[4] = fmt_sig9(*velocity);
            r[6] = fmt_sig9(position.x);
            r[7] = fmt_sig9(position.y);
        }
        EventKind::Trust {
            observer,
            subject,
            trust,
            category,
        } => {
            r[2] = id(*observer);
            r[3] = id(*subject);
            r[4] = fmt_sig9(*trust);
            r[5] = category.as_str().into();
        }
        EventKind::Suspect {
            observer,
            subject,
            average_trust,
        } => {
            r[2] = id(*observer);
            r[3] = id(*subject);
            r[4] = fmt_sig9(*average_trust);
        }
        EventKind::Colocation { observer, subject } => {
            r[2] = id(*observer);
            r[3] = id(*subject);
        }
        EventKind::Challenge {
            observer,
            target,
            attempt,
            nonce,
            origin,
            aim,
        } => {
            r[2] = id(*observer);
            r[3] = id(*target);
            r[4] = attempt.to_string();
            r[6] = fmt_sig9(origin.x);
            r[7] = fmt_sig9(origin.y);
            r[8] = fmt_sig9(aim.x);
            r[9] = fmt_sig9(aim.y);
            r[10] = nonce.to_string();
        }
        EventKind::Response {
            observer,
            claimed,
            responder_vehicle,
            nonce,
            position,
            accepted,
        } => {
            r[2] = id(*observer);
            r[3] = id(*claimed);
            r[4] = id(*responder_vehicle);
            r[5] = if *accepted { "accepted" } else { "ignored" }.into();
            r[6] = fmt_sig9(position.x);
            r[7] = fmt_sig9(position.y);
            r[10] = nonce.to_string();
        }
        EventKind::Verified {
            observer,
            subject,
            trust,
            first_seen,
        }
        | EventKind::Malicious {
            observer,
            subject,
            trust,
            first_seen,
        } => {
            r[2] = id(*observer);
            r[3] = id(*subject);
            r[4] = fmt_sig9(*trust);
            r[11] = first_seen.to_string();
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(1.0), "1");
        assert_eq!(fmt_sig9(2.0 / 3.0), "0.666666667");
        assert_eq!(fmt_sig9(318.309_886_183_790_7), "318.309886");
        assert_eq!(fmt_sig9(-4.5), "-4.5");
        assert_eq!(fmt_sig9(1.23456789012e-7), "0.000000123456789");
    }

    #[test]
    fn summary_drops_bulk_rows() {
        let mut log = EventLog::new(LogDetail::Summary);
        log.push(
            0,
            EventKind::Bsm {
                sender: Pseudonym(1),
                velocity: 15.0,
                position: Vec2::ZERO,
            },
        );
        log.push(
            0,
            EventKind::Colocation {
                observer: Pseudonym(1),
                subject: Pseudonym(2),
            },
        );
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn header_first() {
        let log = EventLog::new(LogDetail::Full);
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epoch,kind,observer,subject,value,label,x,y,aim_x,aim_y,nonce,first_seen\n"
        );
    }
}
