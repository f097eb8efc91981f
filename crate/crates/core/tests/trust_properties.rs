use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use taser::trust_engine::{
    check_suspect, detect_colocation, trust_deduction, trust_increment, BsmStatus, ClassificationCategory, Pseudonym,
    ScoreTable, TrustParams,
};
use taser::Vec2;

fn bsm(sender: u32, velocity: f64, timestamp: u64) -> BsmStatus {
    BsmStatus {
        sender: Pseudonym(sender),
        velocity,
        timestamp,
        position: Vec2::new(sender as f64 * 10.0, 0.0),
    }
}

/// Entry with a chosen trust, for exercising `check_suspect` directly.
fn table_entry(trust: f64) -> ScoreTable {
    let mut t = ScoreTable::new(Pseudonym(0));
    t.upsert_entry(&bsm(1, 15.0, 0), 20).unwrap();
    t.entry_mut(Pseudonym(1)).unwrap().trust = trust;
    t
}

/// Exact rational check on a decimal grid: trust = a/10, average = b/10,
/// lambda = c/100, so `avg - trust >= lambda * avg` becomes
/// `100 (b - a) >= c b` in integers.
#[test]
fn suspect_rule_matches_integer_grid() {
    let mut checked = 0;
    for a in -50i64..=50 {
        for b in -50i64..=50 {
            for c in [0i64, 5, 15, 30, 100] {
                let expected = 100 * (b - a) >= c * b;
                let t = table_entry(a as f64 / 10.0);
                let got = check_suspect(t.entry(Pseudonym(1)).unwrap(), b as f64 / 10.0, c as f64 / 100.0);
                assert_eq!(got, expected, "trust {a}/10 avg {b}/10 lambda {c}/100");
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 101 * 101 * 5);
}

#[test]
fn negative_average_tie_is_inclusive() {
    let t = table_entry(-1.7);
    assert!(check_suspect(t.entry(Pseudonym(1)).unwrap(), -2.0, 0.15));
    let t = table_entry(0.85);
    assert!(check_suspect(t.entry(Pseudonym(1)).unwrap(), 1.0, 0.15));
    let t = table_entry(0.9);
    assert!(!check_suspect(t.entry(Pseudonym(1)).unwrap(), 1.0, 0.15));
}

/// A lone 2 m/s sender follows t_k = 10 - 10 * 1.1^k until the -5 clamp.
#[test]
fn lone_ghost_recurrence_closed_form() {
    let p = TrustParams::default();
    let mut table = ScoreTable::new(Pseudonym(0));
    for k in 0..12u64 {
        let out = table.process_bsm(&bsm(9, 2.0, k), 15.0, &p, k).unwrap();
        let expected = (10.0 - 10.0 * 1.1f64.powi(k as i32 + 1)).max(-5.0);
        assert!((out.trust_after - expected).abs() < 1e-12, "k={k}: {} vs {expected}", out.trust_after);
        // Own entry is the whole table: the first report already satisfies
        // 0 - (-1) >= 0.
        assert_eq!(out.suspect.is_some(), k == 0);
    }
    assert_eq!(table.entry(Pseudonym(9)).unwrap().trust, -5.0);
}

/// Three honest neighbors saturate at 5, then a ghost joins. The expected
/// firing report is found by iterating the recurrence against the
/// evolving average, which includes the ghost's own pre-update trust.
#[test]
fn ghost_among_honest_fires_when_recurrence_predicts() {
    let p = TrustParams::default();
    let mut table = ScoreTable::new(Pseudonym(0));
    for e in 0..10 {
        for s in 1..=3 {
            table.process_bsm(&bsm(s, 15.0, e), 15.0, &p, e).unwrap();
        }
    }
    assert!(table.entries().all(|e| e.trust == 5.0));

    let mut g: Option<f64> = None;
    let mut expected_fire = None;
    for k in 0..20 {
        let avg = match g {
            None => 5.0,
            Some(g) => (15.0 + g) / 4.0,
        };
        let before = g.unwrap_or(avg);
        let after = (before - (1.0 - 0.1 * before)).max(-5.0);
        g = Some(after);
        if avg - after >= 0.15 * avg {
            expected_fire = Some(k);
            break;
        }
    }
    let expected_fire = expected_fire.expect("recurrence crosses the threshold");
    // avg 4.875, trust 3.95: 0.925 >= 0.73125.
    assert_eq!(expected_fire, 1);

    let mut fired = None;
    for k in 0..20u64 {
        let e = 10 + k;
        for s in 1..=3 {
            table.process_bsm(&bsm(s, 15.0, e), 15.0, &p, e).unwrap();
        }
        let out = table.process_bsm(&bsm(9, 2.0, e), 15.0, &p, e).unwrap();
        if out.suspect.is_some() {
            fired = Some(k);
            break;
        }
    }
    assert_eq!(fired, Some(expected_fire));
    assert_eq!(table.entry(Pseudonym(9)).unwrap().category, ClassificationCategory::Suspect);
    assert!(table.suspect_list().contains(&Pseudonym(9)));
}

/// One 22 m/s report against a steady 15 m/s history: flagged by the speed
/// band, but the window t-test does not reject, so trust is untouched.
#[test]
fn single_fast_report_amid_steady_history() {
    let p = TrustParams::default();
    let history = [15.1, 14.9, 15.2, 14.8, 15.0, 15.3, 14.7, 15.1, 14.9, 15.0];
    let mut table = ScoreTable::new(Pseudonym(0));
    for (e, v) in history.iter().enumerate() {
        table.process_bsm(&bsm(4, *v, e as u64), 15.0, &p, e as u64).unwrap();
    }
    let before = table.entry(Pseudonym(4)).unwrap().trust;
    let out = table.process_bsm(&bsm(4, 22.0, 10), 15.0, &p, 10).unwrap();

    let mut w: Vec<f64> = history.to_vec();
    w.push(22.0);
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let s = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let t = (mean - 15.0) / (s / n.sqrt());
    let reference = 2.0 * StudentsT::new(0.0, 1.0, n - 1.0).unwrap().sf(t.abs());
    let tt = out.t_test.unwrap();
    assert!(!out.within_threshold);
    assert!((tt.p_value - reference).abs() < 1e-9);
    assert!(reference > p.alpha);
    assert!(!tt.reject);
    assert_eq!(out.trust_after, before);
}

fn params() -> TrustParams {
    TrustParams::default()
}

proptest! {
    #[test]
    fn trust_stays_clamped_and_average_consistent(
        msgs in prop::collection::vec((0u32..8, 0.0f64..40.0), 1..300),
        beta in 0.0f64..0.19,
    ) {
        let p = TrustParams { beta, ..params() };
        let mut table = ScoreTable::new(Pseudonym(100));
        for (i, (s, v)) in msgs.iter().enumerate() {
            let e = i as u64 / 8;
            if table.process_bsm(&bsm(*s, *v, e), 15.0, &p, e).is_err() {
                continue;
            }
            for entry in table.entries() {
                prop_assert!(entry.trust >= p.trust_min && entry.trust <= p.trust_max);
                prop_assert!(entry.velocity_window.len() <= p.window_size);
            }
            let direct: f64 = table.entries().map(|e| e.trust).sum::<f64>() / table.len() as f64;
            prop_assert!((table.average_trust() - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn identical_sequences_give_identical_tables(
        msgs in prop::collection::vec((0u32..6, 0.0f64..30.0), 1..200),
    ) {
        let run = || {
            let mut t = ScoreTable::new(Pseudonym(50));
            for (i, (s, v)) in msgs.iter().enumerate() {
                let _ = t.process_bsm(&bsm(*s, *v, i as u64), 15.0, &params(), i as u64);
            }
            t
        };
        let (a, b) = (run(), run());
        let ta: Vec<u64> = a.entries().map(|e| e.trust.to_bits()).collect();
        let tb: Vec<u64> = b.entries().map(|e| e.trust.to_bits()).collect();
        prop_assert_eq!(ta, tb);
        prop_assert_eq!(a.suspect_list(), b.suspect_list());
    }

    #[test]
    fn increments_monotone_and_deductions_shrink_with_trust(
        x in -5.0f64..5.0, y in -5.0f64..5.0, beta in 0.01f64..0.19,
    ) {
        let p = TrustParams { beta, ..params() };
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        prop_assume!(hi - lo > 1e-9);
        let (a, b) = (trust_increment(lo, &p), trust_increment(hi, &p));
        prop_assert!(a <= b);
        if b < p.trust_max {
            prop_assert!(a < b);
        }
        prop_assert!(1.0 - beta * lo > 1.0 - beta * hi);
        let (dlo, dhi) = (trust_deduction(lo, &p), trust_deduction(hi, &p));
        if dlo > p.trust_min {
            prop_assert!((lo - dlo) > (hi - dhi) - 1e-12);
        }
    }

    #[test]
    fn new_entries_are_seeded_at_average(
        trusts in prop::collection::vec(-5.0f64..5.0, 0..10),
    ) {
        let mut table = ScoreTable::new(Pseudonym(0));
        for (i, t) in trusts.iter().enumerate() {
            table.upsert_entry(&bsm(i as u32 + 1, 15.0, 0), 20).unwrap();
            table.entry_mut(Pseudonym(i as u32 + 1)).unwrap().trust = *t;
        }
        let avg = table.average_trust();
        let e = table.upsert_entry(&bsm(999, 15.0, 0), 20).unwrap();
        prop_assert_eq!(e.trust, avg);
        prop_assert_eq!(e.category, ClassificationCategory::Unknown);
    }

    #[test]
    fn unrejected_flag_leaves_trust_unchanged(
        base in prop::collection::vec(14.0f64..16.0, 12..20),
        outlier in 21.01f64..23.0,
    ) {
        let p = params();
        let mut table = ScoreTable::new(Pseudonym(0));
        for (e, v) in base.iter().enumerate() {
            table.process_bsm(&bsm(1, *v, e as u64), 15.0, &p, e as u64).unwrap();
        }
        let before = table.entry(Pseudonym(1)).unwrap().trust;
        let out = table.process_bsm(&bsm(1, outlier, base.len() as u64), 15.0, &p, base.len() as u64).unwrap();
        let tt = out.t_test.unwrap();
        if !tt.reject {
            prop_assert_eq!(out.trust_after.to_bits(), before.to_bits());
        } else {
            prop_assert!(out.trust_after < before);
        }
    }

    #[test]
    fn suspect_events_satisfy_the_rule(
        msgs in prop::collection::vec((0u32..6, 0.0f64..30.0), 1..300),
    ) {
        let p = params();
        let mut table = ScoreTable::new(Pseudonym(0));
        for (i, (s, v)) in msgs.iter().enumerate() {
            let e = i as u64;
            let Ok(out) = table.process_bsm(&bsm(*s, *v, e), 15.0, &p, e) else { continue };
            if let Some(ev) = out.suspect {
                prop_assert!(ev.average_trust - ev.trust >= p.lambda * ev.average_trust - 1e-9);
                prop_assert!(table.suspect_list().contains(&ev.subject));
            }
            for id in table.suspect_list() {
                let c = table.entry(*id).unwrap().category;
                prop_assert!(matches!(c, ClassificationCategory::Suspect | ClassificationCategory::Malicious));
            }
        }
    }

    #[test]
    fn colocation_is_the_pairwise_rule(
        pts in prop::collection::vec((0.0f64..20.0, 0.0f64..20.0), 0..12),
        eps in 0.1f64..5.0,
    ) {
        let bsms: Vec<BsmStatus> = pts.iter().enumerate().map(|(i, (x, y))| BsmStatus {
            sender: Pseudonym(i as u32),
            velocity: 15.0,
            timestamp: 0,
            position: Vec2::new(*x, *y),
        }).collect();
        let got = detect_colocation(&bsms, eps);
        for (i, a) in pts.iter().enumerate() {
            let near = pts.iter().enumerate().any(|(j, b)| i != j && ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() <= eps);
            prop_assert_eq!(got.contains(&Pseudonym(i as u32)), near);
        }
    }
}
