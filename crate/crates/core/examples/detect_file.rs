//! Full pipeline over an event CSV: detection report, then frame and pass
//! rates both from the live results and from the report read back.
//!
//! cargo run --release --example detect_file -- [events.csv truth.csv]
//!
//! Without arguments a noisy sweep is simulated and written first.

use std::path::PathBuf;

use evmarker::dictionary::MarkerDictionary;
use evmarker::event::SensorGeometry;
use evmarker::io;
use evmarker::metrics::{evaluate, evaluate_ids, fmt_rate};
use evmarker::pipeline::{Detector, PipelineConfig};
use evmarker::simulator::{simulate, traversal, Direction, NoiseModel, DEFAULT_MARKER_SIDE};

fn main() -> evmarker::error::Result<()> {
    let dict = MarkerDictionary::builtin();
    let cfg = PipelineConfig::default();
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    let (events_path, truth_path) = match args.as_slice() {
        [e, t] => (e.clone(), t.clone()),
        _ => {
            let dir = std::env::temp_dir().join("evmarker_detect");
            std::fs::create_dir_all(&dir)?;
            let mut sc = traversal(SensorGeometry::dvs128(), 13, DEFAULT_MARKER_SIDE, Direction::Down, 1.0);
            sc.noise = NoiseModel::FractionOfSignal(0.05);
            sc.jitter_us = 200.0;
            sc.seed = 3;
            let sim = simulate(&sc, &dict)?;
            let (e, t) = (dir.join("down.csv"), dir.join("down.truth.csv"));
            io::write_events(&e, sc.geometry, &sim.events)?;
            io::write_truth(&t, &sim.truth)?;
            (e, t)
        }
    };

    let (_, events) = io::read_events(&events_path)?;
    let truth = io::read_truth(&truth_path, cfg.window_us)?;
    let detector = Detector::new(cfg.clone(), dict)?;
    let results = detector.detect_stream(&events, false)?;
    let report = io::format_report(&results);
    print!("{report}");

    let live = evaluate(&results, &truth)?;
    let records = io::parse_report(&report, &events_path)?;
    let replayed = evaluate_ids(&io::report_packet_ids(&records, cfg.window_us), &truth)?;
    println!(
        "frames {}/{} ({}), passes {}/{} ({}), wrong ids {}",
        live.detected_frames,
        live.visible_frames,
        fmt_rate(live.frame_rate()),
        live.detected_passes,
        live.passes,
        fmt_rate(live.pass_rate()),
        live.wrong_detections
    );
    println!("metrics from the report read back match: {}", live == replayed);
    Ok(())
}
