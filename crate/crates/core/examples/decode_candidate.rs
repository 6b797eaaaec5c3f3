//! Walks one packet's candidates through unwarping, cell responses and the
//! bit recurrence, printing the intermediate grids.
//!
//! cargo run --release --example decode_candidate

use evmarker::dictionary::MarkerDictionary;
use evmarker::event::{packetize, SensorGeometry};
use evmarker::pipeline::{Detector, PipelineConfig};
use evmarker::raster::Raster;
use evmarker::simulator::{simulate, traversal, Direction, DEFAULT_MARKER_SIDE};

fn print_grid(name: &str, r: &Raster<f64>) {
    println!("  {name}");
    for i in 0..r.height() {
        let row: Vec<String> = (0..r.width()).map(|j| format!("{:5.2}", r.at(j, i))).collect();
        println!("    {}", row.join(" "));
    }
}

fn main() -> evmarker::error::Result<()> {
    let dict = MarkerDictionary::builtin();
    let geometry = SensorGeometry::dvs128();
    let id = 11;
    let sim = simulate(&traversal(geometry, id, DEFAULT_MARKER_SIDE, Direction::Left, 1.0), &dict)?;
    let packets = packetize(&sim.events, 10_000, geometry)?;
    let i = sim.truth.frames.iter().position(|f| f.fully_visible).expect("visible frame");
    let detector = Detector::new(PipelineConfig::default(), dict.clone())?;
    let trace = detector.trace_packet(&packets[i]);

    println!("marker {id}, packet {i}: {} candidates, {} with valid geometry", trace.candidates.len(), trace.decoded.len());
    println!("true code:\n{:?}", dict.grid(id).unwrap());
    for (k, (c, tr, det)) in trace.decoded.iter().enumerate() {
        println!("candidate {k}: angle {:.3} rad", c.angle);
        let q: Vec<String> = tr.corners.iter().map(|p| format!("({:.1}, {:.1})", p.x, p.y)).collect();
        println!("  corners {}", q.join(" "));
        match det {
            Some(d) => println!("  decoded id {} rotated {} deg", d.marker_id, d.rotation.degrees()),
            None => println!("  no dictionary match"),
        }
        if det.is_some() {
            print_grid("on responses", &tr.r_on);
            print_grid("off responses", &tr.r_off);
            println!("  bits read:\n{:?}", tr.bits);
        }
    }
    Ok(())
}
