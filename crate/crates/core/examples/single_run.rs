//! Desk-scale run; writes metrics.csv and events.csv.
//!
//!     cargo run --release --example single_run -- [config.toml] [out_dir]

use std::error::Error;
use std::path::PathBuf;

use taser::metrics_report::{emit_csv, MetricsRow};
use taser::{parse_config, sim_engine, ScenarioConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => parse_config(path.as_ref())?,
        None => ScenarioConfig::default(),
    };
    let out_dir = PathBuf::from(args.next().unwrap_or_else(|| "out/single_run".into()));

    let out = sim_engine::run(cfg.clone())?;
    let m = &out.metrics;
    println!(
        "{} identities, {} events; tp {} fp {} tn {} fn {}",
        out.identities.len(),
        out.log.len(),
        m.confusion.tp,
        m.confusion.fp,
        m.confusion.tn,
        m.confusion.fn_
    );
    println!(
        "accuracy {:?}  f1 {:?}  specificity {:?}",
        m.scores.accuracy, m.scores.f1, m.scores.specificity
    );
    println!(
        "detection epochs: mean {:?} median {:?} max {:?}; honest resolution mean {:?}",
        m.detection.malicious.mean, m.detection.malicious.median, m.detection.malicious.max, m.detection.honest_resolution.mean
    );
    emit_csv(&MetricsRow::new(&cfg, out.metrics), &out.log, &out_dir)?;
    println!("wrote {}", out_dir.display());
    Ok(())
}
