//! Runs the simulated motion suite and prints frame/pass detection rates per
//! direction and speed.
//!
//! cargo run --release --example motion_suite -- [--noisy] [--ids N]

use std::collections::BTreeMap;

use evmarker::dictionary::MarkerDictionary;
use evmarker::metrics::{evaluate, fmt_rate, Metrics};
use evmarker::pipeline::{Detector, PipelineConfig};
use evmarker::simulator::{motion_suite, simulate, SuiteNoise};
use rayon::prelude::*;

fn main() -> evmarker::error::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let noisy = args.iter().any(|a| a == "--noisy");
    let ids = args
        .iter()
        .position(|a| a == "--ids")
        .and_then(|i| args.get(i + 1))
        .and_then(|v| v.parse::<usize>().ok());

    let dict = MarkerDictionary::builtin();
    let detector = Detector::new(PipelineConfig::default(), dict.clone())?;
    let noise = if noisy { SuiteNoise::NOISY } else { SuiteNoise::CLEAN };
    let cases: Vec<_> = motion_suite(&dict, noise, 1)
        .into_iter()
        .filter(|c| ids.is_none_or(|n| c.config.marker_id < n))
        .collect();

    let rows: Vec<_> = cases
        .par_iter()
        .map(|case| {
            let sim = simulate(&case.config, &dict)?;
            let results = detector.detect_stream(&sim.events, false)?;
            let m = evaluate(&results, &sim.truth)?;
            Ok((format!("{:<8} {:>5}", case.direction.name(), case.speed), m))
        })
        .collect::<evmarker::error::Result<_>>()?;

    let mut table: BTreeMap<String, Metrics> = BTreeMap::new();
    for (key, m) in rows {
        *table.entry(key).or_default() += m;
    }
    println!("{:<14} {:>8} {:>8} {:>10} {:>7}", "motion", "frames", "frame%", "pass%", "wrong");
    for (key, m) in &table {
        println!(
            "{key:<14} {:>8} {:>8} {:>10} {:>7}",
            m.visible_frames,
            fmt_rate(m.frame_rate()),
            fmt_rate(m.pass_rate()),
            m.wrong_detections
        );
    }
    Ok(())
}
