//! Run every stage on a reduced fixture into a directory (default
//! `out-example`), then run again to show that nothing is recomputed.

use std::path::PathBuf;
use std::time::Instant;

use skillpanel::pipeline::{Pipeline, PipelineConfig, Stage, ESTIMATES};

fn main() -> skillpanel::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| PathBuf::from("out-example"), PathBuf::from);
    let mut cfg = PipelineConfig::default();
    cfg.fixture.firms = 80;
    cfg.training.epochs = 2;
    let pipeline = Pipeline::new(cfg, None, Some(out))?;
    for pass in 1..=2 {
        let start = Instant::now();
        let status = pipeline.run_all()?;
        println!("pass {pass} ({:.1?}): {status:?}", start.elapsed());
    }
    let estimates = std::fs::read_to_string(pipeline.artifact(Stage::Estimate, ESTIMATES))?;
    for line in estimates.lines().filter(|l| l.starts_with("method=") || l.starts_with("outcome=") || l.starts_with("coef.ai_stock") || l.starts_with("se.ai_stock")) {
        println!("{line}");
    }
    Ok(())
}
