//! Simulates one marker sweeping across the sensor and writes the event CSV
//! and ground-truth sidecar.
//!
//! cargo run --example simulate_stream -- [out-dir]

use std::path::PathBuf;

use evmarker::dictionary::MarkerDictionary;
use evmarker::event::{Polarity, SensorGeometry};
use evmarker::io;
use evmarker::simulator::{simulate, traversal, Direction, EventLabel, NoiseModel, DEFAULT_MARKER_SIDE};

fn main() -> evmarker::error::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("evmarker_sim"));
    std::fs::create_dir_all(&dir)?;

    let dict = MarkerDictionary::builtin();
    let mut cfg = traversal(SensorGeometry::dvs128(), 5, DEFAULT_MARKER_SIDE, Direction::Right, 2.0);
    cfg.jitter_us = 200.0;
    cfg.noise = NoiseModel::FractionOfSignal(0.05);
    cfg.seed = 42;
    let sim = simulate(&cfg, &dict)?;

    let on = sim.events.iter().filter(|e| e.polarity == Polarity::On).count();
    let noise = sim.labels.iter().filter(|l| **l == EventLabel::Noise).count();
    let visible = sim.truth.frames.iter().filter(|f| f.fully_visible).count();
    println!("marker {} moving right at 2 px/ms for {:.1} ms", cfg.marker_id, cfg.duration_ms);
    println!("{} events ({on} on, {} off), {noise} noise", sim.events.len(), sim.events.len() - on);
    println!("{} packets, {visible} with the marker fully visible", sim.truth.frames.len());

    let events = dir.join("sweep.csv");
    let truth = dir.join("sweep.truth.csv");
    io::write_events(&events, cfg.geometry, &sim.events)?;
    io::write_truth(&truth, &sim.truth)?;
    println!("wrote {} and {}", events.display(), truth.display());
    Ok(())
}
