//! Line segments in event images: detection, rasterization, age and age
//! correction.
//!
//! The age of a segment is the mean normalized timestamp of the valid pixels
//! it covers. Correction slides a segment along its normal, regresses age
//! against offset, and moves the segment to where the fitted age is 0.5, i.e.
//! to the position the edge had at the middle of the packet.

pub mod lsd;

use crate::event::Polarity;
use crate::event_image::{NormImage, SmoothImage};
pub use lsd::LsdParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSegment {
    pub p1: Point2,
    pub p2: Point2,
    pub polarity: Polarity,
    pub age: Option<f64>,
}

impl LineSegment {
    pub fn new(p1: Point2, p2: Point2, polarity: Polarity) -> Self {
        Self {
            p1,
            p2,
            polarity,
            age: None,
        }
    }

    pub fn length(&self) -> f64 {
        self.p1.dist(self.p2)
    }

    pub fn midpoint(&self) -> Point2 {
        (self.p1 + self.p2) * 0.5
    }

    /// Unit direction from `p1` to `p2`, `None` for a degenerate segment.
    pub fn direction(&self) -> Option<Point2> {
        let d = self.p2 - self.p1;
        let n = d.x.hypot(d.y);
        (n > 1e-12).then(|| d * (1.0 / n))
    }

    /// Unit normal `(y2 - y1, x1 - x2) / length`.
    pub fn normal(&self) -> Option<Point2> {
        self.direction().map(|d| Point2::new(d.y, -d.x))
    }

    pub fn translated(&self, offset: Point2) -> Self {
        Self {
            p1: self.p1 + offset,
            p2: self.p2 + offset,
            ..*self
        }
    }

    fn inside(&self, width: usize, height: usize) -> bool {
        let ok = |p: Point2| p.x >= 0.0 && p.y >= 0.0 && p.x < width as f64 && p.y < height as f64;
        ok(self.p1) && ok(self.p2)
    }
}

/// Runs LSD on a smoothed image (scaled to 0..255) and keeps segments of at
/// least `l_min` pixels. Endpoints are clamped into the image.
pub fn detect_segments(img: &SmoothImage, l_min: f64, params: &LsdParams) -> Vec<LineSegment> {
    let (w, h) = (img.width(), img.height());
    let gray: Vec<f64> = img.values.as_slice().iter().map(|v| v * 255.0).collect();
    let clamp = |x: f64, hi: usize| x.clamp(0.0, hi as f64 - 1.0);
    lsd::detect(&gray, w, h, params)
        .into_iter()
        .map(|s| {
            LineSegment::new(
                Point2::new(clamp(s.x1, w), clamp(s.y1, h)),
                Point2::new(clamp(s.x2, w), clamp(s.y2, h)),
                img.polarity,
            )
        })
        .filter(|s| s.length() >= l_min)
        .collect()
}

#[inline]
fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// Pixels on a segment: endpoints rounded to the nearest pixel, then one
/// pixel per step along the dominant axis with the minor coordinate rounded.
pub fn segment_pixels(l: &LineSegment) -> Vec<(i64, i64)> {
    let (x1, y1) = (round_half_up(l.p1.x), round_half_up(l.p1.y));
    let (x2, y2) = (round_half_up(l.p2.x), round_half_up(l.p2.y));
    let (dx, dy) = (x2 - x1, y2 - y1);
    let n = dx.abs().max(dy.abs());
    if n == 0 {
        return vec![(x1, y1)];
    }
    let mut out = Vec::with_capacity(n as usize + 1);
    if dx.abs() >= dy.abs() {
        let sx = dx.signum();
        for k in 0..=n {
            // exact rational interpolation of the minor axis
            let num = 2 * dy * k + dx.abs();
            let y = y1 + num.div_euclid(2 * dx.abs());
            out.push((x1 + sx * k, y));
        }
    } else {
        let sy = dy.signum();
        for k in 0..=n {
            let num = 2 * dx * k + dy.abs();
            let x = x1 + num.div_euclid(2 * dy.abs());
            out.push((x, y1 + sy * k));
        }
    }
    out
}

/// Valid/total pixel counts and mean value under a segment.
fn coverage(l: &LineSegment, norm: &NormImage) -> (usize, usize, f64) {
    let px = segment_pixels(l);
    let mut n_valid = 0;
    let mut sum = 0.0;
    for &(x, y) in &px {
        if let Some(true) = norm.valid.get_checked(x, y).copied() {
            n_valid += 1;
            sum += norm.values.at(x as usize, y as usize);
        }
    }
    (n_valid, px.len(), sum)
}

/// Mean of `norm` over the valid pixels of the segment.
pub fn segment_age(l: &LineSegment, norm: &NormImage) -> Option<f64> {
    let (n_valid, _, sum) = coverage(l, norm);
    (n_valid > 0).then(|| sum / n_valid as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeCorrectionParams {
    /// Largest accepted translation along the normal, in pixels.
    pub max_shift: f64,
    /// Slopes with a smaller magnitude are treated as flat.
    pub min_slope: f64,
}

impl Default for AgeCorrectionParams {
    fn default() -> Self {
        Self {
            max_shift: 20.0,
            min_slope: 1e-6,
        }
    }
}

/// Least-squares line `age ≈ slope * offset + intercept`.
pub fn fit_age_line(samples: &[(f64, f64)]) -> Option<(f64, f64)> {
    if samples.len() < 2 {
        return None;
    }
    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx) * (s.0 - mx)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Collects `(offset, age)` samples by sliding the segment along its normal
/// in unit steps, both ways, for as long as at least half of its pixels are
/// valid. Offset 0 is always included.
pub fn age_samples(l: &LineSegment, norm: &NormImage) -> Option<Vec<(f64, f64)>> {
    let normal = l.normal()?;
    let age0 = segment_age(l, norm)?;
    let mut samples = vec![(0.0, age0)];
    let limit = (norm.width() + norm.height()) as i64;
    for d in [-1i64, 1] {
        let mut s = 1i64;
        while s <= limit {
            let offset = (s * d) as f64;
            let moved = l.translated(normal * offset);
            let (n_valid, n_total, sum) = coverage(&moved, norm);
            if 2 * n_valid < n_total || n_valid == 0 {
                break;
            }
            samples.push((offset, sum / n_valid as f64));
            s += 1;
        }
    }
    Some(samples)
}

/// Moves a segment along its normal so that its age becomes 0.5.
///
/// Returns `None` when the age is undefined before or after the move, the
/// regression is degenerate or the required shift is out of range.
pub fn correct_age(
    l: &LineSegment,
    norm: &NormImage,
    params: &AgeCorrectionParams,
) -> Option<LineSegment> {
    let samples = age_samples(l, norm)?;
    let (slope, intercept) = fit_age_line(&samples)?;
    if slope.abs() < params.min_slope {
        return None;
    }
    let shift = (0.5 - intercept) / slope;
    if !shift.is_finite() || shift.abs() > params.max_shift {
        return None;
    }
    let mut out = l.translated(l.normal()? * shift);
    if !out.inside(norm.width(), norm.height()) {
        return None;
    }
    out.age = Some(segment_age(&out, norm)?);
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Raster;

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> LineSegment {
        LineSegment::new(Point2::new(x1, y1), Point2::new(x2, y2), Polarity::On)
    }

    fn norm_with(w: usize, h: usize, f: impl Fn(usize, usize) -> Option<f64>) -> NormImage {
        NormImage {
            polarity: Polarity::On,
            values: Raster::from_fn(w, h, |x, y| f(x, y).unwrap_or(0.0)),
            valid: Raster::from_fn(w, h, |x, y| f(x, y).is_some()),
            flipped: false,
        }
    }

    #[test]
    fn axis_aligned_and_degenerate_pixels() {
        assert_eq!(
            segment_pixels(&seg(0.0, 0.0, 3.0, 0.0)),
            vec![(0, 0), (1, 0), (2, 0), (3, 0)]
        );
        assert_eq!(segment_pixels(&seg(0.0, 0.0, 0.0, 0.0)), vec![(0, 0)]);
        assert_eq!(
            segment_pixels(&seg(2.0, 5.0, 2.0, 2.0)),
            vec![(2, 5), (2, 4), (2, 3), (2, 2)]
        );
    }

    #[test]
    fn pixel_count_for_integer_endpoints() {
        for &(x1, y1, x2, y2) in &[(0i64, 0i64, 7i64, 3i64), (5, 9, 1, 0), (3, 3, 3, 10), (10, 2, 0, 2)] {
            let px = segment_pixels(&seg(x1 as f64, y1 as f64, x2 as f64, y2 as f64));
            let expect = (x2 - x1).abs().max((y2 - y1).abs()) as usize + 1;
            assert_eq!(px.len(), expect);
            assert_eq!(px.first(), Some(&(x1, y1)));
            assert_eq!(px.last(), Some(&(x2, y2)));
        }
    }

    #[test]
    fn age_of_uniform_and_partially_valid_segments() {
        let n = norm_with(10, 10, |_, _| Some(0.5));
        assert_eq!(segment_age(&seg(1.0, 1.0, 8.0, 1.0), &n), Some(0.5));

        let n = norm_with(10, 10, |x, _| (x % 2 == 0).then_some(0.2));
        let a = segment_age(&seg(0.0, 3.0, 9.0, 3.0), &n).unwrap();
        assert!((a - 0.2).abs() < 1e-15);

        let empty = norm_with(10, 10, |_, _| None);
        assert_eq!(segment_age(&seg(0.0, 3.0, 9.0, 3.0), &empty), None);
    }

    #[test]
    fn regression_of_exact_line() {
        let (a, b) = fit_age_line(&[(-1.0, 0.3), (0.0, 0.4), (1.0, 0.5)]).unwrap();
        assert!((a - 0.1).abs() < 1e-12 && (b - 0.4).abs() < 1e-12);
        assert!((0.5 - b) / a - 1.0 < 1e-12);
        assert!(fit_age_line(&[(0.0, 0.4)]).is_none());
    }

    #[test]
    fn already_centered_segment_barely_moves() {
        // Age grows by 0.05 per column, 0.5 at x = 20.
        let n = norm_with(40, 40, |x, _| {
            (10..=30).contains(&x).then_some(0.5 + 0.05 * (x as f64 - 20.0))
        });
        let l = seg(20.0, 5.0, 20.0, 35.0);
        let c = correct_age(&l, &n, &AgeCorrectionParams::default()).unwrap();
        assert!((c.p1.x - 20.0).abs() < 0.5, "{c:?}");
        assert!((c.age.unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn shifted_segment_is_pulled_to_half_age() {
        let n = norm_with(40, 40, |x, _| {
            (10..=30).contains(&x).then_some(0.5 + 0.05 * (x as f64 - 20.0))
        });
        let l = seg(26.0, 5.0, 26.0, 35.0);
        let c = correct_age(&l, &n, &AgeCorrectionParams::default()).unwrap();
        assert!((c.p1.x - 20.0).abs() < 1e-9 && (c.p2.x - 20.0).abs() < 1e-9);
        assert!((c.length() - l.length()).abs() < 1e-12);
    }

    #[test]
    fn correction_failures() {
        let flat = norm_with(40, 40, |x, _| (10..=30).contains(&x).then_some(0.3));
        let l = seg(20.0, 5.0, 20.0, 35.0);
        assert!(correct_age(&l, &flat, &AgeCorrectionParams::default()).is_none());

        let empty = norm_with(40, 40, |_, _| None);
        assert!(correct_age(&l, &empty, &AgeCorrectionParams::default()).is_none());

        // Slope so small that the shift exceeds the bound.
        let shallow = norm_with(40, 40, |x, _| Some(0.1 + 0.001 * x as f64));
        assert!(correct_age(&l, &shallow, &AgeCorrectionParams::default()).is_none());
    }
}
