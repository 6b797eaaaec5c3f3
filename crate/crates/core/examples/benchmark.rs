//! Single-threaded per-stage timing over the noisy simulated motion suite.
//!
//! cargo run --release --example benchmark -- [--ids N]

use evmarker::bench::TimingSummary;
use evmarker::dictionary::MarkerDictionary;
use evmarker::pipeline::{Detector, PipelineConfig};
use evmarker::simulator::{motion_suite, simulate, SuiteNoise};

fn main() -> evmarker::error::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let ids = args
        .iter()
        .position(|a| a == "--ids")
        .and_then(|i| args.get(i + 1))
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(usize::MAX);

    let dict = MarkerDictionary::builtin();
    let detector = Detector::new(PipelineConfig::default(), dict.clone())?;
    let mut results = Vec::new();
    for case in motion_suite(&dict, SuiteNoise::NOISY, 1) {
        if case.config.marker_id >= ids {
            continue;
        }
        let sim = simulate(&case.config, &dict)?;
        results.extend(detector.detect_stream(&sim.events, false)?);
    }
    println!("{}", TimingSummary::from_results(&results));
    let max = results.iter().map(|r| r.n_candidates).max().unwrap_or(0);
    println!("  max candidates per packet {max}");
    Ok(())
}
