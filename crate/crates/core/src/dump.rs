//! PNG dumps of every pipeline stage for one packet.
//!
//! Sensor-sized images are upscaled by [`SCALE`] with nearest-neighbor
//! sampling. On events and segments are red, off ones blue.

use std::path::{Path, PathBuf};

use image::{imageops, GrayImage, Luma, Rgb, RgbImage};

use crate::decoder::{DecodeTrace, UnwarpedImage};
use crate::dictionary::BitGrid;
use crate::error::Result;
use crate::event::{EventPacket, Polarity};
use crate::pipeline::PacketTrace;
use crate::raster::Raster;
use crate::segments::{LineSegment, Point2};

pub const SCALE: u32 = 4;

const RED: Rgb<u8> = Rgb([255, 40, 40]);
const BLUE: Rgb<u8> = Rgb([60, 110, 255]);
const DIM_RED: Rgb<u8> = Rgb([110, 30, 30]);
const DIM_BLUE: Rgb<u8> = Rgb([30, 50, 110]);
const WHITE: Rgb<u8> = Rgb([255, 255, 255]);

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Grayscale image of valid values, invalid pixels black.
pub fn gray(values: &Raster<f64>, valid: &Raster<bool>) -> GrayImage {
    GrayImage::from_fn(values.width() as u32, values.height() as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        Luma([if valid.at(x, y) { to_u8(values.at(x, y)) } else { 0 }])
    })
}

/// Event pixels of the packet, on red, off blue, both magenta.
pub fn event_image(packet: &EventPacket) -> RgbImage {
    let mut img = RgbImage::new(packet.geometry.width, packet.geometry.height);
    for e in &packet.events {
        let px = img.get_pixel_mut(e.x as u32, e.y as u32);
        match e.polarity {
            Polarity::On => px.0[0] = 255,
            Polarity::Off => px.0[2] = 255,
        }
    }
    img
}

fn upscale(img: &RgbImage) -> RgbImage {
    imageops::resize(img, img.width() * SCALE, img.height() * SCALE, imageops::FilterType::Nearest)
}

fn upscale_gray(img: &GrayImage) -> GrayImage {
    imageops::resize(img, img.width() * SCALE, img.height() * SCALE, imageops::FilterType::Nearest)
}

/// Draws a line in sensor coordinates onto an image scaled by `scale`.
pub fn draw_line(img: &mut RgbImage, a: Point2, b: Point2, scale: f64, color: Rgb<u8>) {
    let map = |p: Point2| ((p.x + 0.5) * scale, (p.y + 0.5) * scale);
    let (ax, ay) = map(a);
    let (bx, by) = map(b);
    let steps = (bx - ax).abs().max((by - ay).abs()).ceil().max(1.0) as usize;
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let (x, y) = ((ax + t * (bx - ax)).floor(), (ay + t * (by - ay)).floor());
        if x >= 0.0 && y >= 0.0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
    }
}

fn draw_segment(img: &mut RgbImage, s: &LineSegment, color: Rgb<u8>) {
    draw_line(img, s.p1, s.p2, SCALE as f64, color);
}

fn draw_quad(img: &mut RgbImage, q: &[Point2; 4], color: Rgb<u8>) {
    for k in 0..4 {
        draw_line(img, q[k], q[(k + 1) % 4], SCALE as f64, color);
    }
}

/// Unwarped values in gray with each cell's response drawn as a red square
/// at its sampling point, brightness proportional to `r / max r`.
pub fn response_overlay(u: &UnwarpedImage, r: &Raster<f64>, n_d: usize, shift: f64) -> RgbImage {
    let g = gray(&u.values, &u.valid);
    let mut img = RgbImage::from_fn(g.width(), g.height(), |x, y| {
        let v = g.get_pixel(x, y).0[0] / 2;
        Rgb([v, v, v])
    });
    let max = r.as_slice().iter().cloned().fold(0.0, f64::max);
    let half = (n_d / 8).max(1) as i64;
    for i in 0..r.height() {
        for j in 0..r.width() {
            let level = if max > 0.0 { to_u8(r.at(j, i) / max) } else { 0 };
            let cx = ((j * n_d) as f64 - 0.5 - shift).round() as i64;
            let cy = ((i * n_d) as f64 + n_d as f64 / 2.0 - 0.5).round() as i64;
            for y in cy - half..=cy + half {
                for x in cx - half..=cx + half {
                    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
                        img.put_pixel(x as u32, y as u32, Rgb([level, 0, 0]));
                    }
                }
            }
        }
    }
    img
}

/// Reconstructed marker: black border plus the read code bits.
pub fn marker_image(bits: &BitGrid, cell_px: u32) -> GrayImage {
    let n = bits.size() as u32 + 2;
    GrayImage::from_fn(n * cell_px, n * cell_px, |x, y| {
        let (c, r) = (x / cell_px, y / cell_px);
        let inner = c >= 1 && r >= 1 && c <= n - 2 && r <= n - 2;
        let white = inner && bits.get((r - 1) as usize, (c - 1) as usize) == 1;
        Luma([if white { 255 } else { 0 }])
    })
}

/// Writes numbered PNGs for one packet into `dir` and returns their paths.
/// File names start with the packet index so several packets can share a
/// directory.
pub fn dump_stages(
    dir: &Path,
    packet_index: usize,
    trace: &PacketTrace,
    n_d: usize,
    shift: f64,
    shift_polarity: Polarity,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut stage = 0;
    let mut save = |name: &str, img: image::DynamicImage| -> Result<()> {
        let p = dir.join(format!("{packet_index:05}_{stage:02}_{name}.png"));
        img.save(&p)?;
        written.push(p);
        stage += 1;
        Ok(())
    };

    let events = event_image(&trace.filtered);
    save("events", upscale(&events).into())?;
    for pt in [&trace.on, &trace.off].into_iter().flatten() {
        let p = pt.norm.polarity.name();
        save(&format!("{p}_norm"), upscale_gray(&gray(&pt.norm.values, &pt.norm.valid)).into())?;
        save(&format!("{p}_smooth"), upscale_gray(&gray(&pt.smooth.values, &pt.smooth.valid)).into())?;
    }

    let mut seg = upscale(&events);
    for pt in [&trace.on, &trace.off].into_iter().flatten() {
        let (dim, bright) = match pt.norm.polarity {
            Polarity::On => (DIM_RED, RED),
            Polarity::Off => (DIM_BLUE, BLUE),
        };
        pt.segments.iter().for_each(|s| draw_segment(&mut seg, s, dim));
        pt.corrected.iter().for_each(|s| draw_segment(&mut seg, s, bright));
    }
    save("segments", seg.into())?;

    let mut quads = upscale(&events);
    for (_, tr, _) in &trace.decoded {
        draw_quad(&mut quads, &tr.corners, WHITE);
    }
    save("candidates", quads.into())?;

    for (k, (_, tr, det)) in trace.decoded.iter().enumerate() {
        let tag = match det {
            Some(d) => format!("cand{k:02}_id{}", d.marker_id),
            None => format!("cand{k:02}"),
        };
        save_candidate(&mut save, &tag, tr, n_d, shift, shift_polarity)?;
    }
    Ok(written)
}

fn save_candidate(
    save: &mut impl FnMut(&str, image::DynamicImage) -> Result<()>,
    tag: &str,
    tr: &DecodeTrace,
    n_d: usize,
    shift: f64,
    shift_polarity: Polarity,
) -> Result<()> {
    let s = |p: Polarity| if p == shift_polarity { shift } else { 0.0 };
    save(
        &format!("{tag}_unwarped_on"),
        response_overlay(&tr.unwarped_on, &tr.r_on, n_d, s(Polarity::On)).into(),
    )?;
    save(
        &format!("{tag}_unwarped_off"),
        response_overlay(&tr.unwarped_off, &tr.r_off, n_d, s(Polarity::Off)).into(),
    )?;
    save(&format!("{tag}_marker"), marker_image(&tr.bits, 20).into())
}
