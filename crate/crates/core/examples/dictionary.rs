//! Inspects the built-in dictionary: codes, rotation-aware distance, lookup
//! of rotated codes and a rendered marker PNG. Also generates a small 4x4
//! dictionary.
//!
//! cargo run --example dictionary -- [out-dir]

use std::path::PathBuf;

use evmarker::dictionary::{generate_dictionary, render_marker, rotate_grid, MarkerDictionary};

fn main() -> evmarker::error::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("evmarker_dict"));
    std::fs::create_dir_all(&dir)?;

    let dict = MarkerDictionary::builtin();
    let n = dict.code_size();
    println!("{}: {} codes of {n}x{n} bits", dict.name(), dict.len());
    println!("minimum distance over all rotations: {}", dict.min_orbit_distance());
    print!("{}", dict.to_text());

    let mut g = dict.grid(7).unwrap();
    for k in 0..4 {
        let m = dict.lookup(&g).expect("rotated entry is found");
        println!("entry 7 rotated {:>3} deg -> id {} rotation {}", 90 * k, m.id, m.rotation.degrees());
        g = rotate_grid(&g);
    }

    let r = render_marker(7, &dict, 16)?;
    let side = r.image.width() as u32;
    let img = image::GrayImage::from_fn(side, side, |x, y| image::Luma([r.image.at(x as usize, y as usize) * 255]));
    let path = dir.join("marker_07.png");
    img.save(&path)?;
    println!("rendered {}", path.display());

    let small = generate_dictionary(8, 4, 5, 1, 1_000_000)?;
    println!("generated 4x4 dictionary, min distance {}:\n{}", small.min_orbit_distance(), small.to_text());
    Ok(())
}
