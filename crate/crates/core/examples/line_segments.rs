//! Detects line segments on the smoothed event images of one packet and
//! moves each along its normal until its age is 0.5.
//!
//! cargo run --release --example line_segments

use evmarker::dictionary::MarkerDictionary;
use evmarker::event::{packetize, SensorGeometry};
use evmarker::pipeline::{Detector, PipelineConfig};
use evmarker::segments::segment_age;
use evmarker::simulator::{simulate, traversal, Direction, DEFAULT_MARKER_SIDE};

fn main() -> evmarker::error::Result<()> {
    let dict = MarkerDictionary::builtin();
    let geometry = SensorGeometry::dvs128();
    let sim = simulate(&traversal(geometry, 9, DEFAULT_MARKER_SIDE, Direction::Up, 2.0), &dict)?;
    let packets = packetize(&sim.events, 10_000, geometry)?;
    let detector = Detector::new(PipelineConfig::default(), dict)?;
    let i = sim.truth.frames.iter().position(|f| f.fully_visible).unwrap_or(packets.len() / 2);
    let trace = detector.trace_packet(&packets[i]);

    for pt in [&trace.on, &trace.off].into_iter().flatten() {
        println!("{} polarity: {} segments, {} after age correction", pt.norm.polarity.name(), pt.segments.len(), pt.corrected.len());
        for s in &pt.segments {
            let before = segment_age(s, &pt.norm).unwrap_or(f64::NAN);
            print!(
                "  ({:6.1},{:6.1})-({:6.1},{:6.1}) len {:5.1} age {:.3}",
                s.p1.x,
                s.p1.y,
                s.p2.x,
                s.p2.y,
                s.length(),
                before
            );
            match pt.corrected.iter().find(|c| c.direction() == s.direction()) {
                Some(c) => println!(" -> shifted to ({:6.1},{:6.1}) age {:.3}", c.p1.x, c.p1.y, c.age.unwrap_or(f64::NAN)),
                None => println!(" -> dropped"),
            }
        }
    }
    println!("{} candidate pairs", trace.candidates.len());
    Ok(())
}
