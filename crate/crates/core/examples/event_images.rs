//! Builds the per-polarity event images of one packet (time image,
//! normalized, refined, smoothed) and saves them as PNGs.
//!
//! cargo run --example event_images -- [out-dir]

use std::path::PathBuf;

use evmarker::dictionary::MarkerDictionary;
use evmarker::dump;
use evmarker::event::{noise_filter, packetize, NoiseFilterConfig, Polarity, SensorGeometry};
use evmarker::event_image::{build_time_image, normalize, refine, smooth, GaussianKernel};
use evmarker::simulator::{simulate, traversal, Direction, DEFAULT_MARKER_SIDE};

fn main() -> evmarker::error::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("evmarker_images"));
    std::fs::create_dir_all(&dir)?;

    let dict = MarkerDictionary::builtin();
    let geometry = SensorGeometry::dvs128();
    let sim = simulate(&traversal(geometry, 2, DEFAULT_MARKER_SIDE, Direction::Right, 1.0), &dict)?;
    let packets = packetize(&sim.events, 10_000, geometry)?;
    let packet = &packets[packets.len() / 2];
    let filtered = noise_filter(packet, NoiseFilterConfig::default());
    println!("packet [{}, {}) us: {} events, {} after filtering", packet.t_start, packet.t_end, packet.len(), filtered.len());

    let kernel = GaussianKernel::new(3, 0.8);
    for p in Polarity::BOTH {
        let Some(ti) = build_time_image(&filtered, p) else {
            println!("{}: no events", p.name());
            continue;
        };
        let norm = normalize(&ti, false);
        let refined = refine(&normalize(&ti, true));
        let sm = smooth(&refined, &kernel);
        let count = |v: &evmarker::raster::Raster<bool>| v.as_slice().iter().filter(|b| **b).count();
        println!(
            "{:>3}: t in [{}, {}] us, {} pixels, {} after refine",
            p.name(),
            ti.t_min,
            ti.t_max,
            count(&ti.valid),
            count(&refined.valid)
        );
        dump::gray(&norm.values, &norm.valid).save(dir.join(format!("{}_norm.png", p.name())))?;
        dump::gray(&refined.values, &refined.valid).save(dir.join(format!("{}_refined.png", p.name())))?;
        dump::gray(&sm.values, &sm.valid).save(dir.join(format!("{}_smooth.png", p.name())))?;
    }
    dump::event_image(&filtered).save(dir.join("events.png"))?;
    println!("images in {}", dir.display());
    Ok(())
}
