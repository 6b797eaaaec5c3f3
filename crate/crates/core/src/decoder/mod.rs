//! Candidate decoding: corner ordering, perspective unwarp, Gaussian cell
//! responses at the cells' left edges, thresholding and the bit recurrence.
//!
//! In the canonical square the marker always moves to the left: the off
//! (leading) edge sits on the left side and the on (trailing) edge on the
//! right. A black→white boundary passing a pixel produces on events and a
//! white→black boundary produces off events, so the events found on the left
//! edge of each cell tell whether its color differs from its left neighbour.

mod homography;

pub use homography::{compute_homography, has_collinear_triple, Homography};

use crate::candidates::Candidate;
use crate::dictionary::{BitGrid, MarkerDictionary, Rotation};
use crate::event::Polarity;
use crate::event_image::NormImage;
use crate::raster::Raster;
use crate::segments::Point2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    /// Side of the canonical square, pixels.
    pub s_c: usize,
    /// Cell side in the canonical square, pixels.
    pub n_d: usize,
    pub sigma_d: f64,
    pub theta: f64,
    /// Leftward offset of the sampling point for `shift_polarity`, pixels.
    pub shift: f64,
    pub shift_polarity: Polarity,
    /// Quads with a smaller area are rejected, square pixels.
    pub min_area: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            s_c: 160,
            n_d: 20,
            sigma_d: 3.35,
            theta: 0.55,
            shift: 5.0,
            shift_polarity: Polarity::Off,
            min_area: 25.0 * 25.0 / 2.0,
        }
    }
}

impl DecoderConfig {
    pub fn n_cells(&self) -> usize {
        self.s_c / self.n_d
    }

    /// Side of the code grid inside the one-cell black border.
    pub fn n_m(&self) -> usize {
        self.n_cells().saturating_sub(2)
    }
}

/// Destination corners: top-left, top-right, bottom-right, bottom-left.
pub fn canonical_corners(s_c: usize) -> [Point2; 4] {
    let s = s_c as f64 - 1.0;
    [
        Point2::new(0.0, 0.0),
        Point2::new(s, 0.0),
        Point2::new(s, s),
        Point2::new(0.0, s),
    ]
}

fn shoelace(q: &[Point2; 4]) -> f64 {
    (0..4)
        .map(|i| {
            let (a, b) = (q[i], q[(i + 1) % 4]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        / 2.0
}

fn is_convex(q: &[Point2; 4]) -> bool {
    let signs: Vec<f64> = (0..4)
        .map(|i| {
            let (a, b, c) = (q[i], q[(i + 1) % 4], q[(i + 2) % 4]);
            (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x)
        })
        .collect();
    signs.iter().all(|s| *s > 0.0) || signs.iter().all(|s| *s < 0.0)
}

/// Source corners matching [`canonical_corners`]: off endpoints on the left
/// edge, on endpoints on the right edge.
///
/// The motion direction is taken from the on segment's midpoint towards the
/// off segment's midpoint; it maps to canonical "left". Endpoints of each
/// segment are ordered along the axis that maps to canonical "down", which
/// keeps the mapping orientation-preserving.
pub fn order_corners(c: &Candidate, min_area: f64) -> Option<[Point2; 4]> {
    let motion = c.off_seg.midpoint() - c.on_seg.midpoint();
    let n = motion.x.hypot(motion.y);
    if n < 1e-9 {
        return None;
    }
    let down = Point2::new(motion.y / n, -motion.x / n);
    let proj = |p: Point2| p.x * down.x + p.y * down.y;
    let split = |a: Point2, b: Point2| if proj(a) <= proj(b) { (a, b) } else { (b, a) };
    let (off_top, off_bottom) = split(c.off_seg.p1, c.off_seg.p2);
    let (on_top, on_bottom) = split(c.on_seg.p1, c.on_seg.p2);
    let quad = [off_top, on_top, on_bottom, off_bottom];
    (is_convex(&quad) && shoelace(&quad).abs() >= min_area).then_some(quad)
}

/// Canonical-square resampling of one polarity.
#[derive(Debug, Clone, PartialEq)]
pub struct UnwarpedImage {
    pub polarity: Polarity,
    pub values: Raster<f64>,
    pub valid: Raster<bool>,
}

impl UnwarpedImage {
    pub fn side(&self) -> usize {
        self.values.width()
    }
}

/// Inverse-maps every destination pixel through `h` and interpolates the
/// valid source pixels bilinearly. A destination pixel is valid when more
/// than half of the interpolation weight falls on valid pixels.
pub fn unwarp(norm: &NormImage, h: &Homography, s_c: usize) -> UnwarpedImage {
    let mut values = Raster::filled(s_c, s_c, 0.0);
    let mut valid = Raster::filled(s_c, s_c, false);
    let Some(inv) = h.inverse() else {
        return UnwarpedImage {
            polarity: norm.polarity,
            values,
            valid,
        };
    };
    let m = inv.matrix();
    let (w, hgt) = (norm.width() as i64, norm.height() as i64);
    let src_vals = norm.values.as_slice();
    let src_ok = norm.valid.as_slice();
    for v in 0..s_c {
        let (vf, row) = (v as f64, v * s_c);
        for u in 0..s_c {
            let uf = u as f64;
            let z = m[(2, 0)] * uf + m[(2, 1)] * vf + m[(2, 2)];
            if z.abs() < 1e-12 {
                continue;
            }
            let x = (m[(0, 0)] * uf + m[(0, 1)] * vf + m[(0, 2)]) / z;
            let y = (m[(1, 0)] * uf + m[(1, 1)] * vf + m[(1, 2)]) / z;
            let (x0, y0) = (x.floor(), y.floor());
            let (fx, fy) = (x - x0, y - y0);
            let (x0, y0) = (x0 as i64, y0 as i64);
            if x0 < -1 || y0 < -1 || x0 >= w || y0 >= hgt {
                continue;
            }
            let mut wsum = 0.0;
            let mut acc = 0.0;
            for (dx, dy, wt) in [
                (0, 0, (1.0 - fx) * (1.0 - fy)),
                (1, 0, fx * (1.0 - fy)),
                (0, 1, (1.0 - fx) * fy),
                (1, 1, fx * fy),
            ] {
                let (sx, sy) = (x0 + dx, y0 + dy);
                if sx < 0 || sy < 0 || sx >= w || sy >= hgt {
                    continue;
                }
                let i = (sy * w + sx) as usize;
                if src_ok[i] {
                    wsum += wt;
                    acc += wt * src_vals[i];
                }
            }
            if wsum > 0.5 {
                values.as_mut_slice()[row + u] = (acc / wsum).clamp(0.0, 1.0);
                valid.as_mut_slice()[row + u] = true;
            }
        }
    }
    UnwarpedImage {
        polarity: norm.polarity,
        values,
        valid,
    }
}

/// Pixel range and normalized 1D Gaussian weights for a window of `n` pixels
/// centered at the continuous coordinate `c`.
fn window_weights(c: f64, n: usize, sigma: f64) -> (i64, Vec<f64>) {
    let half = (n as f64 - 1.0) / 2.0 + 1e-9;
    let lo = (c - half).ceil() as i64;
    let hi = (c + half).floor() as i64;
    let mut w: Vec<f64> = (lo..=hi)
        .map(|p| {
            let d = p as f64 - c;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    (lo, w)
}

/// Gaussian-weighted sum of valid unwarped values for every cell, sampled at
/// the midpoint of the cell's left edge (moved left by `shift` for the
/// shifted polarity). Raster coordinates are `(column j, row i)`.
pub fn cell_response(u: &UnwarpedImage, n_d: usize, sigma_d: f64, shift: f64) -> Raster<f64> {
    let side = u.side();
    let n_cells = side / n_d;
    let mut r = Raster::filled(n_cells, n_cells, 0.0);
    for i in 0..n_cells {
        let cy = (i * n_d) as f64 + n_d as f64 / 2.0 - 0.5;
        let (y_lo, wy) = window_weights(cy, n_d, sigma_d);
        for j in 0..n_cells {
            let cx = (j * n_d) as f64 - 0.5 - shift;
            let (x_lo, wx) = window_weights(cx, n_d, sigma_d);
            let mut acc = 0.0;
            for (a, gy) in wy.iter().enumerate() {
                let y = y_lo + a as i64;
                if y < 0 || y >= side as i64 {
                    continue;
                }
                for (b, gx) in wx.iter().enumerate() {
                    let x = x_lo + b as i64;
                    if x < 0 || x >= side as i64 {
                        continue;
                    }
                    let (x, y) = (x as usize, y as usize);
                    if u.valid.at(x, y) {
                        acc += gy * gx * u.values.at(x, y);
                    }
                }
            }
            r.set(j, i, acc);
        }
    }
    r
}

/// Responses for both polarities; the shift applies to `shift_polarity` only.
pub fn cell_responses(
    u_on: &UnwarpedImage,
    u_off: &UnwarpedImage,
    cfg: &DecoderConfig,
) -> (Raster<f64>, Raster<f64>) {
    let shift_for = |p: Polarity| if p == cfg.shift_polarity { cfg.shift } else { 0.0 };
    (
        cell_response(u_on, cfg.n_d, cfg.sigma_d, shift_for(Polarity::On)),
        cell_response(u_off, cfg.n_d, cfg.sigma_d, shift_for(Polarity::Off)),
    )
}

/// `f = 1` iff `r / max >= theta`, the maximum taken over the code cells
/// `1..=n_m` in both directions. All zeros when that maximum is 0.
pub fn threshold_responses(r: &Raster<f64>, theta: f64, n_m: usize) -> Raster<u8> {
    let inner = 1..=n_m.min(r.width().saturating_sub(1));
    let max = inner
        .clone()
        .flat_map(|i| inner.clone().map(move |j| (j, i)))
        .map(|(j, i)| r.at(j, i))
        .fold(0.0, f64::max);
    if max <= 0.0 {
        return r.map(|_| 0);
    }
    r.map(|v| ((v / max) / theta).floor().clamp(0.0, 1.0) as u8)
}

/// Row-wise recurrence seeded by the black border: a cell flips color when
/// its left edge shows the transition that its left neighbour's color allows
/// (on after black, off after white) and copies it otherwise.
pub fn decode_bits(f_on: &Raster<u8>, f_off: &Raster<u8>, n_m: usize) -> BitGrid {
    let mut grid = BitGrid::zeros(n_m);
    for i in 1..=n_m {
        let mut b = 0u8;
        for j in 1..=n_m {
            let flip = (b == 0 && f_on.at(j, i) == 1) || (b == 1 && f_off.at(j, i) == 1);
            if flip {
                b ^= 1;
            }
            grid.set(i - 1, j - 1, b);
        }
    }
    grid
}

/// A decoded marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub marker_id: usize,
    pub rotation: Rotation,
    /// Image-space corners, clockwise from the marker's own top-left.
    pub corners: [Point2; 4],
    pub t_mid: u64,
}

/// Every intermediate product of one candidate's decoding.
#[derive(Debug, Clone)]
pub struct DecodeTrace {
    pub corners: [Point2; 4],
    pub homography: Homography,
    pub unwarped_on: UnwarpedImage,
    pub unwarped_off: UnwarpedImage,
    pub r_on: Raster<f64>,
    pub r_off: Raster<f64>,
    pub f_on: Raster<u8>,
    pub f_off: Raster<u8>,
    pub bits: BitGrid,
}

/// Geometry half of decoding: ordered corners and the homography into the
/// canonical square.
pub fn candidate_geometry(c: &Candidate, cfg: &DecoderConfig) -> Option<([Point2; 4], Homography)> {
    let corners = order_corners(c, cfg.min_area)?;
    let h = compute_homography(&corners, &canonical_corners(cfg.s_c))?;
    Some((corners, h))
}

/// Bits from the two unwarped images.
pub fn read_bits(
    u_on: &UnwarpedImage,
    u_off: &UnwarpedImage,
    cfg: &DecoderConfig,
) -> (Raster<f64>, Raster<f64>, Raster<u8>, Raster<u8>, BitGrid) {
    let n_m = cfg.n_m();
    let (r_on, r_off) = cell_responses(u_on, u_off, cfg);
    let f_on = threshold_responses(&r_on, cfg.theta, n_m);
    let f_off = threshold_responses(&r_off, cfg.theta, n_m);
    let bits = decode_bits(&f_on, &f_off, n_m);
    (r_on, r_off, f_on, f_off, bits)
}

/// Detection from decoded bits, with the corners reordered to start at the
/// marker's own top-left.
pub fn identify(
    bits: &BitGrid,
    corners: &[Point2; 4],
    dict: &MarkerDictionary,
    t_mid: u64,
) -> Option<Detection> {
    let m = dict.lookup(bits)?;
    let k = m.rotation.quarters();
    Some(Detection {
        marker_id: m.id,
        rotation: m.rotation,
        corners: std::array::from_fn(|i| corners[(i + k) % 4]),
        t_mid,
    })
}

/// Runs the decoding chain and returns every intermediate product, or `None`
/// if the geometry is rejected.
pub fn trace_candidate(
    c: &Candidate,
    norm_on: &NormImage,
    norm_off: &NormImage,
    cfg: &DecoderConfig,
) -> Option<DecodeTrace> {
    let (corners, homography) = candidate_geometry(c, cfg)?;
    let unwarped_on = unwarp(norm_on, &homography, cfg.s_c);
    let unwarped_off = unwarp(norm_off, &homography, cfg.s_c);
    let (r_on, r_off, f_on, f_off, bits) = read_bits(&unwarped_on, &unwarped_off, cfg);
    Some(DecodeTrace {
        corners,
        homography,
        unwarped_on,
        unwarped_off,
        r_on,
        r_off,
        f_on,
        f_off,
        bits,
    })
}

pub fn decode_candidate(
    c: &Candidate,
    norm_on: &NormImage,
    norm_off: &NormImage,
    dict: &MarkerDictionary,
    cfg: &DecoderConfig,
    t_mid: u64,
) -> Option<Detection> {
    let t = trace_candidate(c, norm_on, norm_off, cfg)?;
    identify(&t.bits, &t.corners, dict, t_mid)
}
