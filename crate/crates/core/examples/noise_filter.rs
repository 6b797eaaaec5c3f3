//! Measures how much injected noise the background-activity filter removes
//! and how much marker signal it keeps, per filter setting and speed.
//!
//! cargo run --release --example noise_filter

use evmarker::dictionary::MarkerDictionary;
use evmarker::event::{noise_filter, packetize, NoiseFilterConfig, SensorGeometry};
use evmarker::simulator::{simulate, traversal, Direction, EventLabel, NoiseModel, DEFAULT_MARKER_SIDE};

fn main() -> evmarker::error::Result<()> {
    let dict = MarkerDictionary::builtin();
    let geometry = SensorGeometry::dvs128();
    println!("{:>6} {:>8} {:>6} {:>10} {:>12}", "radius", "window", "speed", "noise cut", "signal kept");
    for (radius, window_us) in [(1, 500), (1, 1000), (1, 2000), (2, 2000)] {
        let filter = NoiseFilterConfig { radius, window_us };
        for speed in [1.0, 2.0, 4.0] {
            let mut cfg = traversal(geometry, 0, DEFAULT_MARKER_SIDE, Direction::Down, speed);
            cfg.noise = NoiseModel::FractionOfSignal(0.05);
            cfg.seed = 7;
            let sim = simulate(&cfg, &dict)?;
            let (mut noise, mut noise_cut, mut signal, mut signal_kept) = (0, 0, 0, 0);
            // Packets are contiguous runs of the stream, so labels follow by position.
            let mut cursor = 0;
            for p in packetize(&sim.events, 10_000, geometry)? {
                let kept = noise_filter(&p, filter).events;
                let mut k = 0;
                for e in &p.events {
                    let survived = kept.get(k) == Some(e);
                    k += survived as usize;
                    match sim.labels[cursor] {
                        EventLabel::Noise => {
                            noise += 1;
                            noise_cut += !survived as usize;
                        }
                        EventLabel::Signal => {
                            signal += 1;
                            signal_kept += survived as usize;
                        }
                    }
                    cursor += 1;
                }
            }
            println!(
                "{radius:>6} {window_us:>8} {speed:>6} {:>9.1}% {:>11.1}%",
                100.0 * noise_cut as f64 / noise as f64,
                100.0 * signal_kept as f64 / signal as f64
            );
        }
    }
    Ok(())
}
