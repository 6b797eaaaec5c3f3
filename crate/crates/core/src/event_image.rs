//! Per-polarity event images: timestamps, normalization, hole filling and
//! mask-aware Gaussian smoothing.
//!
//! The chain for one polarity of a packet is
//! [`build_time_image`] → [`normalize`] → [`refine`] → [`smooth`]. The flipped
//! normalized image feeds segment detection; the unflipped one is what segment
//! ages and marker decoding read.

use crate::event::{EventPacket, Polarity};
use crate::raster::Raster;

/// Minimum event timestamp per pixel for one polarity of a packet.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeImage {
    pub polarity: Polarity,
    pub values: Raster<u64>,
    pub valid: Raster<bool>,
    pub t_min: u64,
    pub t_max: u64,
}

/// Timestamps mapped to `[0, 1]`; invalid pixels hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NormImage {
    pub polarity: Polarity,
    pub values: Raster<f64>,
    pub valid: Raster<bool>,
    /// `true` for the `1 - v` variant used for line detection.
    pub flipped: bool,
}

/// Normalized image after hole filling and isolated-pixel removal.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedImage {
    pub polarity: Polarity,
    pub values: Raster<f64>,
    pub valid: Raster<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothImage {
    pub polarity: Polarity,
    pub values: Raster<f64>,
    pub valid: Raster<bool>,
}

macro_rules! raster_accessors {
    ($ty:ty) => {
        impl $ty {
            pub fn width(&self) -> usize {
                self.values.width()
            }

            pub fn height(&self) -> usize {
                self.values.height()
            }

            #[inline]
            pub fn is_valid(&self, x: usize, y: usize) -> bool {
                self.valid.at(x, y)
            }

            #[inline]
            pub fn value(&self, x: usize, y: usize) -> f64 {
                self.values.at(x, y)
            }

            pub fn valid_count(&self) -> usize {
                self.valid.as_slice().iter().filter(|v| **v).count()
            }
        }
    };
}

raster_accessors!(NormImage);
raster_accessors!(RefinedImage);
raster_accessors!(SmoothImage);

impl TimeImage {
    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.as_slice().iter().filter(|v| **v).count()
    }
}

/// Square, normalized, radially symmetric Gaussian kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    size: usize,
    sigma: f64,
    taps: Vec<f64>,
    weights: Raster<f64>,
}

impl GaussianKernel {
    /// # Panics
    /// If `size` is even or zero, or `sigma` is not positive.
    pub fn new(size: usize, sigma: f64) -> Self {
        assert!(size % 2 == 1, "kernel size must be odd, got {size}");
        assert!(sigma > 0.0, "kernel sigma must be positive");
        let radius = (size / 2) as f64;
        let raw: Vec<f64> = (0..size)
            .map(|i| {
                let d = i as f64 - radius;
                (-0.5 * d * d / (sigma * sigma)).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        let taps: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let weights = Raster::from_fn(size, size, |x, y| taps[x] * taps[y]);
        Self {
            size,
            sigma,
            taps,
            weights,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// 1-D separable factor; `weights = taps ⊗ taps`.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn weights(&self) -> &Raster<f64> {
        &self.weights
    }
}

/// Builds the minimum-timestamp image of one polarity. Returns `None` when
/// the packet holds no event of that polarity.
pub fn build_time_image(packet: &EventPacket, polarity: Polarity) -> Option<TimeImage> {
    let w = packet.geometry.width as usize;
    let h = packet.geometry.height as usize;
    let mut values = Raster::filled(w, h, u64::MAX);
    let mut valid = Raster::filled(w, h, false);
    let mut t_min = u64::MAX;
    let mut t_max = 0;
    let mut any = false;

    for e in packet.events.iter().filter(|e| e.polarity == polarity) {
        let (x, y) = (e.x as usize, e.y as usize);
        let slot = values.get_mut(x, y);
        if e.t < *slot {
            *slot = e.t;
        }
        valid.set(x, y, true);
        any = true;
    }
    if !any {
        return None;
    }
    for (v, ok) in values.as_mut_slice().iter_mut().zip(valid.as_slice()) {
        if *ok {
            t_min = t_min.min(*v);
            t_max = t_max.max(*v);
        } else {
            *v = 0;
        }
    }
    Some(TimeImage {
        polarity,
        values,
        valid,
        t_min,
        t_max,
    })
}

/// Maps valid timestamps to `(t - t_min) / (t_max - t_min)`, or `1 -` that
/// when `flip` is set. A degenerate range maps every valid pixel to 0.5.
pub fn normalize(img: &TimeImage, flip: bool) -> NormImage {
    let range = (img.t_max - img.t_min) as f64;
    let values = Raster::from_fn(img.width(), img.height(), |x, y| {
        if !img.valid.at(x, y) {
            return 0.0;
        }
        let v = if range > 0.0 {
            (img.values.at(x, y) - img.t_min) as f64 / range
        } else {
            0.5
        };
        if flip {
            1.0 - v
        } else {
            v
        }
    });
    NormImage {
        polarity: img.polarity,
        values,
        valid: img.valid.clone(),
        flipped: flip,
    }
}

/// Fills holes surrounded mostly by events and removes events surrounded
/// mostly by holes, in a single pass driven by the input mask.
///
/// The neighborhood of a pixel is its 3x3 block clipped to the image, the
/// pixel itself included; "mostly" means strictly more than half of it.
pub fn refine(img: &NormImage) -> RefinedImage {
    let w = img.width();
    let h = img.height();
    let mut values = img.values.clone();
    let mut valid = img.valid.clone();

    for y in 0..h {
        let y0 = y.saturating_sub(1);
        let y1 = (y + 1).min(h - 1);
        for x in 0..w {
            let x0 = x.saturating_sub(1);
            let x1 = (x + 1).min(w - 1);
            let block = (x1 - x0 + 1) * (y1 - y0 + 1);
            let mut n_valid = 0usize;
            let mut sum = 0.0;
            for yy in y0..=y1 {
                for xx in x0..=x1 {
                    if img.valid.at(xx, yy) {
                        n_valid += 1;
                        sum += img.values.at(xx, yy);
                    }
                }
            }
            if img.valid.at(x, y) {
                if 2 * (block - n_valid) > block {
                    values.set(x, y, 0.0);
                    valid.set(x, y, false);
                }
            } else if 2 * n_valid > block {
                values.set(x, y, sum / n_valid as f64);
                valid.set(x, y, true);
            }
        }
    }

    RefinedImage {
        polarity: img.polarity,
        values,
        valid,
    }
}

/// Normalized convolution: `(I * g) / (M * g)` on valid pixels, 0 elsewhere,
/// with zero padding outside the image.
pub fn smooth(img: &RefinedImage, kernel: &GaussianKernel) -> SmoothImage {
    let w = img.width();
    let h = img.height();
    assert!(
        kernel.size() <= w.min(h),
        "kernel larger than the image ({} > {})",
        kernel.size(),
        w.min(h)
    );
    let mask: Vec<f64> = img
        .valid
        .as_slice()
        .iter()
        .map(|v| if *v { 1.0 } else { 0.0 })
        .collect();
    let num = separable_convolve(img.values.as_slice(), w, h, kernel.taps());
    let den = separable_convolve(&mask, w, h, kernel.taps());

    let values = Raster::from_fn(w, h, |x, y| {
        let i = y * w + x;
        if img.valid.at(x, y) {
            assert!(den[i] > 0.0, "valid pixel with empty mask support");
            num[i] / den[i]
        } else {
            0.0
        }
    });
    SmoothImage {
        polarity: img.polarity,
        values,
        valid: img.valid.clone(),
    }
}

/// Zero-padded separable convolution with a symmetric kernel.
fn separable_convolve(src: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let r = taps.len() / 2;
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            let mut acc = 0.0;
            for xx in lo..=hi {
                acc += line[xx] * taps[xx + r - x];
            }
            rows[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for yy in lo..=hi {
            let k = taps[yy + r - y];
            let src_row = &rows[yy * w..(yy + 1) * w];
            let dst_row = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += k * s;
            }
        }
    }
    out
}
