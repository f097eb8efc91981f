//! Sybil density grid, five seeds per point, as a table.

use std::error::Error;

use taser::cli::{sweep, SweepParam, SweepSpec};
use taser::ScenarioConfig;

fn main() -> Result<(), Box<dyn Error>> {
    let spec = SweepSpec {
        param: SweepParam::SybilFraction,
        values: vec![0.05, 0.10, 0.15, 0.20, 0.25, 0.30],
        seeds: 5,
    };
    let out = sweep(&ScenarioConfig::default(), &spec, None)?;
    println!("density  accuracy  f1      specificity  detection_epochs");
    for s in &out.summary {
        println!(
            "{:>6.0}%  {:<8.4}  {:<6.4}  {:<11.4}  {:.2}",
            s.value * 100.0,
            s.accuracy.unwrap_or(f64::NAN),
            s.f1.unwrap_or(f64::NAN),
            s.specificity.unwrap_or(f64::NAN),
            s.mean_detection_epochs.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
