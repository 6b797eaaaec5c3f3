//! Brute-force references shared by the oracle tests and the acceptance run.
#![allow(dead_code)]

use evmarker::dictionary::BitGrid;
use evmarker::raster::Raster;
use evmarker::segments::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_image(w: usize, h: usize, density: f64, seed: u64) -> (Raster<f64>, Raster<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let valid = Raster::from_fn(w, h, |_, _| rng.random_bool(density));
    let values = Raster::from_fn(w, h, |x, y| if valid.at(x, y) { rng.random::<f64>() } else { 0.0 });
    (values, valid)
}

/// Double loop over the full kernel with explicit zero padding.
pub fn smooth_reference(values: &Raster<f64>, valid: &Raster<bool>, n: usize, sigma: f64) -> Raster<f64> {
    let r = (n / 2) as i64;
    let g = |d: i64| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp();
    let (w, h) = (values.width() as i64, values.height() as i64);
    Raster::from_fn(values.width(), values.height(), |x, y| {
        if !valid.at(x, y) {
            return 0.0;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for dy in -r..=r {
            for dx in -r..=r {
                let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                if xx < 0 || yy < 0 || xx >= w || yy >= h {
                    continue;
                }
                let k = g(dx) * g(dy);
                if valid.at(xx as usize, yy as usize) {
                    num += k * values.at(xx as usize, yy as usize);
                    den += k;
                }
            }
        }
        num / den
    })
}

/// F and F' exactly as defined: B is the 3x3 block around the pixel,
/// intersected with the image.
pub fn refine_reference(values: &Raster<f64>, valid: &Raster<bool>) -> (Raster<f64>, Raster<bool>) {
    let (w, h) = (values.width() as i64, values.height() as i64);
    let mut out_v = values.clone();
    let mut out_m = valid.clone();
    for y in 0..h {
        for x in 0..w {
            let b: Vec<(usize, usize)> = (-1..=1)
                .flat_map(|dy| (-1..=1).map(move |dx| (x + dx, y + dy)))
                .filter(|&(xx, yy)| xx >= 0 && yy >= 0 && xx < w && yy < h)
                .map(|(xx, yy)| (xx as usize, yy as usize))
                .collect();
            let bs: Vec<&(usize, usize)> = b.iter().filter(|p| valid.at(p.0, p.1)).collect();
            let half = b.len() as f64 / 2.0;
            let (ux, uy) = (x as usize, y as usize);
            let in_s = valid.at(ux, uy);
            if !in_s && bs.len() as f64 > half {
                let mean = bs.iter().map(|p| values.at(p.0, p.1)).sum::<f64>() / bs.len() as f64;
                out_v.set(ux, uy, mean);
                out_m.set(ux, uy, true);
            } else if in_s && (b.len() - bs.len()) as f64 > half {
                out_v.set(ux, uy, 0.0);
                out_m.set(ux, uy, false);
            }
        }
    }
    (out_v, out_m)
}

pub fn random_quad(rng: &mut ChaCha8Rng) -> [Point2; 4] {
    loop {
        // perturbed square so the quad stays convex and non-degenerate
        let c = Point2::new(rng.random_range(30.0..100.0), rng.random_range(30.0..100.0));
        let s = rng.random_range(15.0..50.0);
        let j = |rng: &mut ChaCha8Rng| rng.random_range(-0.3 * s..0.3 * s);
        let q = [
            Point2::new(c.x - s + j(rng), c.y - s + j(rng)),
            Point2::new(c.x + s + j(rng), c.y - s + j(rng)),
            Point2::new(c.x + s + j(rng), c.y + s + j(rng)),
            Point2::new(c.x - s + j(rng), c.y + s + j(rng)),
        ];
        let cross = |o: Point2, a: Point2, b: Point2| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
        if (0..4).all(|k| cross(q[k], q[(k + 1) % 4], q[(k + 2) % 4]) > 1.0) {
            return q;
        }
    }
}

pub fn random_grid(rng: &mut ChaCha8Rng, n: usize) -> BitGrid {
    let rows: Vec<Vec<u8>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(0..=1u8)).collect()).collect();
    BitGrid::from_rows(&rows)
}

/// Row-major bits read as a binary numeral.
pub fn code_oracle(g: &BitGrid) -> u64 {
    let s: String = g.rows().flatten().map(|b| if *b == 1 { '1' } else { '0' }).collect();
    u64::from_str_radix(&s, 2).unwrap()
}
