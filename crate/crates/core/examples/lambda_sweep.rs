use std::error::Error;

use taser::cli::{sweep, SweepParam, SweepSpec};
use taser::ScenarioConfig;

fn main() -> Result<(), Box<dyn Error>> {
    let spec = SweepSpec { param: SweepParam::Lambda, values: vec![0.05, 0.15, 0.30], seeds: 5 };
    let out = sweep(&ScenarioConfig::default(), &spec, None)?;
    println!("lambda  detection_epochs  specificity  fp_rate");
    for s in &out.summary {
        println!(
            "{:<6}  {:<16.3}  {:<11.4}  {:.4}",
            s.value,
            s.mean_detection_epochs.unwrap_or(f64::NAN),
            s.specificity.unwrap_or(f64::NAN),
            s.fp_rate.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
