//! LSD: a line segment detector with a-contrario validation.
//!
//! Follows the reference algorithm of von Gioi et al.: Gaussian
//! sub-sampling, 2x2 level-line orientation, pseudo-ordered region growing,
//! rectangular approximation via the gradient-weighted inertia tensor,
//! density-driven refinement and NFA-based rectangle improvement.
//!
//! Coordinates of the returned segments put pixel centers at integers.

use std::f64::consts::PI;

const NOTDEF: f64 = -1024.0;
const RELATIVE_ERROR_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsdParams {
    /// Image scale applied before detection (Gaussian sub-sampling when < 1).
    pub scale: f64,
    /// Sigma of the sub-sampling Gaussian is `sigma_scale / scale`.
    pub sigma_scale: f64,
    /// Bound to the gradient quantization error.
    pub quant: f64,
    /// Angle tolerance in degrees.
    pub ang_th: f64,
    /// Detection threshold, `-log10(NFA) > log_eps`.
    pub log_eps: f64,
    /// Minimal density of aligned region points in the rectangle.
    pub density_th: f64,
    /// Number of bins in the pseudo-ordering of gradient magnitudes.
    pub n_bins: usize,
}

impl Default for LsdParams {
    fn default() -> Self {
        Self {
            scale: 0.8,
            sigma_scale: 0.6,
            quant: 2.0,
            ang_th: 22.5,
            log_eps: 0.0,
            density_th: 0.7,
            n_bins: 1024,
        }
    }
}

/// One detected segment, endpoints in input-image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsdSegment {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub width: f64,
    /// `-log10(NFA)` of the validated rectangle.
    pub log_nfa: f64,
}

impl LsdSegment {
    pub fn length(&self) -> f64 {
        (self.x2 - self.x1).hypot(self.y2 - self.y1)
    }
}

/// Grayscale image of `f64` values, row-major.
struct Gray {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    width: f64,
    theta: f64,
    dx: f64,
    dy: f64,
    prec: f64,
    p: f64,
}

#[derive(Clone, Copy)]
struct Point {
    x: usize,
    y: usize,
}

/// Runs LSD on a `width x height` row-major image (values roughly in 0..255).
pub fn detect(data: &[f64], width: usize, height: usize, params: &LsdParams) -> Vec<LsdSegment> {
    assert_eq!(data.len(), width * height);
    assert!(params.scale > 0.0 && params.sigma_scale > 0.0);
    assert!(params.quant >= 0.0);
    assert!(params.ang_th > 0.0 && params.ang_th < 180.0);
    assert!(params.density_th >= 0.0 && params.density_th <= 1.0);
    assert!(params.n_bins > 0);
    if width < 2 || height < 2 {
        return Vec::new();
    }

    let input = Gray {
        w: width,
        h: height,
        data: data.to_vec(),
    };
    let scaled = if params.scale != 1.0 {
        gaussian_sampler(&input, params.scale, params.sigma_scale)
    } else {
        input
    };
    if scaled.w < 2 || scaled.h < 2 {
        return Vec::new();
    }

    let prec = PI * params.ang_th / 180.0;
    let p = params.ang_th / 180.0;
    let rho = params.quant / prec.sin();

    let grad = level_line_angles(&scaled, rho, params.n_bins);
    let (xsize, ysize) = (scaled.w, scaled.h);

    let log_nt = 5.0 * ((xsize as f64).log10() + (ysize as f64).log10()) / 2.0 + 11f64.log10();
    let min_reg_size = (-log_nt / p.log10()) as usize;

    let mut used = vec![false; xsize * ysize];
    let mut reg: Vec<Point> = Vec::with_capacity(xsize * ysize);
    let mut out = Vec::new();

    for &pt in &grad.order {
        let idx = pt.y * xsize + pt.x;
        if used[idx] || grad.angles[idx] == NOTDEF {
            continue;
        }
        let mut reg_angle = region_grow(pt, &grad, &mut reg, &mut used, prec);
        if reg.len() < min_reg_size {
            continue;
        }
        let mut rec = region_to_rect(&reg, &grad, reg_angle, prec, p);
        if !refine_region(
            &mut reg,
            &grad,
            &mut reg_angle,
            prec,
            p,
            &mut rec,
            &mut used,
            params.density_th,
        ) {
            continue;
        }
        let log_nfa = rect_improve(&mut rec, &grad, log_nt, params.log_eps);
        if log_nfa <= params.log_eps {
            continue;
        }

        // Gradient at (x,y) is measured at (x+0.5, y+0.5).
        let mut seg = LsdSegment {
            x1: rec.x1 + 0.5,
            y1: rec.y1 + 0.5,
            x2: rec.x2 + 0.5,
            y2: rec.y2 + 0.5,
            width: rec.width,
            log_nfa,
        };
        if params.scale != 1.0 {
            seg.x1 /= params.scale;
            seg.y1 /= params.scale;
            seg.x2 /= params.scale;
            seg.y2 /= params.scale;
            seg.width /= params.scale;
        }
        out.push(seg);
    }
    out
}

fn double_equal(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    let abs_diff = (a - b).abs();
    let abs_max = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    abs_diff / abs_max <= RELATIVE_ERROR_FACTOR * f64::EPSILON
}

fn gaussian_kernel(kernel: &mut [f64], sigma: f64, mean: f64) {
    let mut sum = 0.0;
    for (i, k) in kernel.iter_mut().enumerate() {
        let v = (i as f64 - mean) / sigma;
        *k = (-0.5 * v * v).exp();
        sum += *k;
    }
    if sum >= 0.0 {
        for k in kernel.iter_mut() {
            *k /= sum;
        }
    }
}

/// Scales the image with anti-aliasing Gaussian filtering, separably, using
/// symmetric boundary extension.
fn gaussian_sampler(input: &Gray, scale: f64, sigma_scale: f64) -> Gray {
    let nx = (input.w as f64 * scale).ceil() as usize;
    let ny = (input.h as f64 * scale).ceil() as usize;
    let sigma = if scale < 1.0 {
        sigma_scale / scale
    } else {
        sigma_scale
    };
    let prec = 2.0;
    let h = (sigma * (2.0 * prec * 10f64.ln()).sqrt()).ceil() as i64;
    let n = (1 + 2 * h) as usize;
    let mut kernel = vec![0.0; n];

    let double_x = 2 * input.w as i64;
    let double_y = 2 * input.h as i64;

    let mut aux = vec![0.0; nx * input.h];
    for x in 0..nx {
        let xx = x as f64 / scale;
        let xc = (xx + 0.5).floor() as i64;
        gaussian_kernel(&mut kernel, sigma, h as f64 + xx - xc as f64);
        for y in 0..input.h {
            let mut sum = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let mut j = xc - h + i as i64;
                while j < 0 {
                    j += double_x;
                }
                while j >= double_x {
                    j -= double_x;
                }
                if j >= input.w as i64 {
                    j = double_x - 1 - j;
                }
                sum += input.data[j as usize + y * input.w] * k;
            }
            aux[x + y * nx] = sum;
        }
    }

    let mut out = vec![0.0; nx * ny];
    for y in 0..ny {
        let yy = y as f64 / scale;
        let yc = (yy + 0.5).floor() as i64;
        gaussian_kernel(&mut kernel, sigma, h as f64 + yy - yc as f64);
        for x in 0..nx {
            let mut sum = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let mut j = yc - h + i as i64;
                while j < 0 {
                    j += double_y;
                }
                while j >= double_y {
                    j -= double_y;
                }
                if j >= input.h as i64 {
                    j = double_y - 1 - j;
                }
                sum += aux[x + j as usize * nx] * k;
            }
            out[x + y * nx] = sum;
        }
    }
    Gray {
        w: nx,
        h: ny,
        data: out,
    }
}

struct Gradient {
    w: usize,
    h: usize,
    angles: Vec<f64>,
    modgrad: Vec<f64>,
    /// Pixels in decreasing order of (binned) gradient magnitude.
    order: Vec<Point>,
}

fn level_line_angles(img: &Gray, threshold: f64, n_bins: usize) -> Gradient {
    let (w, h) = (img.w, img.h);
    let mut angles = vec![NOTDEF; w * h];
    let mut modgrad = vec![0.0; w * h];
    let mut max_grad = 0.0f64;

    for y in 0..h - 1 {
        for x in 0..w - 1 {
            let adr = y * w + x;
            let com1 = img.data[adr + w + 1] - img.data[adr];
            let com2 = img.data[adr + 1] - img.data[adr + w];
            let gx = com1 + com2;
            let gy = com1 - com2;
            let norm = ((gx * gx + gy * gy) / 4.0).sqrt();
            modgrad[adr] = norm;
            if norm > threshold {
                angles[adr] = gx.atan2(-gy);
                max_grad = max_grad.max(norm);
            }
        }
    }

    // Bucket sort, strongest bin first, column-major within a bin.
    let mut bins: Vec<Vec<Point>> = vec![Vec::new(); n_bins];
    if max_grad > 0.0 {
        for x in 0..w - 1 {
            for y in 0..h - 1 {
                let norm = modgrad[y * w + x];
                let mut i = (norm * n_bins as f64 / max_grad) as usize;
                if i >= n_bins {
                    i = n_bins - 1;
                }
                bins[i].push(Point { x, y });
            }
        }
    }
    let mut order = Vec::with_capacity(w * h);
    for bin in bins.iter().rev() {
        order.extend_from_slice(bin);
    }

    Gradient {
        w,
        h,
        angles,
        modgrad,
        order,
    }
}

#[inline]
fn is_aligned(angle: f64, theta: f64, prec: f64) -> bool {
    if angle == NOTDEF {
        return false;
    }
    let mut t = (theta - angle).abs();
    if t > 1.5 * PI {
        t = (t - 2.0 * PI).abs();
    }
    t <= prec
}

fn angle_diff(a: f64, b: f64) -> f64 {
    angle_diff_signed(a, b).abs()
}

fn angle_diff_signed(a: f64, b: f64) -> f64 {
    let mut a = a - b;
    while a <= -PI {
        a += 2.0 * PI;
    }
    while a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Grows a region of aligned pixels from a seed; returns the region angle.
fn region_grow(
    seed: Point,
    grad: &Gradient,
    reg: &mut Vec<Point>,
    used: &mut [bool],
    prec: f64,
) -> f64 {
    let w = grad.w;
    reg.clear();
    reg.push(seed);
    let mut reg_angle = grad.angles[seed.y * w + seed.x];
    let mut sumdx = reg_angle.cos();
    let mut sumdy = reg_angle.sin();
    used[seed.y * w + seed.x] = true;

    let mut i = 0;
    while i < reg.len() {
        let p = reg[i];
        let x0 = p.x.saturating_sub(1);
        let x1 = (p.x + 1).min(w - 1);
        let y0 = p.y.saturating_sub(1);
        let y1 = (p.y + 1).min(grad.h - 1);
        for xx in x0..=x1 {
            for yy in y0..=y1 {
                let idx = yy * w + xx;
                if !used[idx] && is_aligned(grad.angles[idx], reg_angle, prec) {
                    used[idx] = true;
                    reg.push(Point { x: xx, y: yy });
                    let a = grad.angles[idx];
                    sumdx += a.cos();
                    sumdy += a.sin();
                    reg_angle = sumdy.atan2(sumdx);
                }
            }
        }
        i += 1;
    }
    reg_angle
}

fn region_theta(reg: &[Point], grad: &Gradient, x: f64, y: f64, reg_angle: f64, prec: f64) -> f64 {
    let mut ixx = 0.0;
    let mut iyy = 0.0;
    let mut ixy = 0.0;
    for p in reg {
        let wgt = grad.modgrad[p.y * grad.w + p.x];
        let dx = p.x as f64 - x;
        let dy = p.y as f64 - y;
        ixx += dy * dy * wgt;
        iyy += dx * dx * wgt;
        ixy -= dx * dy * wgt;
    }
    if double_equal(ixx, 0.0) && double_equal(iyy, 0.0) && double_equal(ixy, 0.0) {
        return reg_angle;
    }
    let lambda = 0.5 * (ixx + iyy - ((ixx - iyy) * (ixx - iyy) + 4.0 * ixy * ixy).sqrt());
    let mut theta = if ixx.abs() > iyy.abs() {
        (lambda - ixx).atan2(ixy)
    } else {
        ixy.atan2(lambda - iyy)
    };
    if angle_diff(theta, reg_angle) > prec {
        theta += PI;
    }
    theta
}

fn region_to_rect(reg: &[Point], grad: &Gradient, reg_angle: f64, prec: f64, p: f64) -> Rect {
    let mut x = 0.0;
    let mut y = 0.0;
    let mut sum = 0.0;
    for pt in reg {
        let wgt = grad.modgrad[pt.y * grad.w + pt.x];
        x += pt.x as f64 * wgt;
        y += pt.y as f64 * wgt;
        sum += wgt;
    }
    assert!(sum > 0.0, "region with zero gradient weight");
    x /= sum;
    y /= sum;

    let theta = region_theta(reg, grad, x, y, reg_angle, prec);
    let dx = theta.cos();
    let dy = theta.sin();
    let (mut l_min, mut l_max, mut w_min, mut w_max) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for pt in reg {
        let px = pt.x as f64 - x;
        let py = pt.y as f64 - y;
        let l = px * dx + py * dy;
        let w = -px * dy + py * dx;
        l_max = l_max.max(l);
        l_min = l_min.min(l);
        w_max = w_max.max(w);
        w_min = w_min.min(w);
    }
    Rect {
        x1: x + l_min * dx,
        y1: y + l_min * dy,
        x2: x + l_max * dx,
        y2: y + l_max * dy,
        width: (w_max - w_min).max(1.0),
        theta,
        dx,
        dy,
        prec,
        p,
    }
}

fn dist(x1: f64, y1: f64, x2: f64, y2: f64) -> f64 {
    (x2 - x1).hypot(y2 - y1)
}

fn rect_density(reg_len: usize, rec: &Rect) -> f64 {
    reg_len as f64 / (dist(rec.x1, rec.y1, rec.x2, rec.y2) * rec.width)
}

#[allow(clippy::too_many_arguments)]
fn refine_region(
    reg: &mut Vec<Point>,
    grad: &Gradient,
    reg_angle: &mut f64,
    prec: f64,
    p: f64,
    rec: &mut Rect,
    used: &mut [bool],
    density_th: f64,
) -> bool {
    if rect_density(reg.len(), rec) >= density_th {
        return true;
    }

    // New angle tolerance from the orientation spread near the seed.
    let seed = reg[0];
    let (xc, yc) = (seed.x as f64, seed.y as f64);
    let ang_c = grad.angles[seed.y * grad.w + seed.x];
    let mut sum = 0.0;
    let mut s_sum = 0.0;
    let mut n = 0usize;
    for pt in reg.iter() {
        used[pt.y * grad.w + pt.x] = false;
        if dist(xc, yc, pt.x as f64, pt.y as f64) < rec.width {
            let ang_d = angle_diff_signed(grad.angles[pt.y * grad.w + pt.x], ang_c);
            sum += ang_d;
            s_sum += ang_d * ang_d;
            n += 1;
        }
    }
    let mean_angle = sum / n as f64;
    let tau = 2.0 * ((s_sum - 2.0 * mean_angle * sum) / n as f64 + mean_angle * mean_angle).sqrt();

    *reg_angle = region_grow(seed, grad, reg, used, tau);
    if reg.len() < 2 {
        return false;
    }
    *rec = region_to_rect(reg, grad, *reg_angle, prec, p);
    if rect_density(reg.len(), rec) >= density_th {
        return true;
    }
    reduce_region_radius(reg, grad, *reg_angle, prec, p, rec, used, density_th)
}

#[allow(clippy::too_many_arguments)]
fn reduce_region_radius(
    reg: &mut Vec<Point>,
    grad: &Gradient,
    reg_angle: f64,
    prec: f64,
    p: f64,
    rec: &mut Rect,
    used: &mut [bool],
    density_th: f64,
) -> bool {
    let mut density = rect_density(reg.len(), rec);
    if density >= density_th {
        return true;
    }
    let seed = reg[0];
    let (xc, yc) = (seed.x as f64, seed.y as f64);
    let rad1 = dist(xc, yc, rec.x1, rec.y1);
    let rad2 = dist(xc, yc, rec.x2, rec.y2);
    let mut rad = rad1.max(rad2);

    while density < density_th {
        rad *= 0.75;
        let mut i = 0;
        while i < reg.len() {
            let pt = reg[i];
            if dist(xc, yc, pt.x as f64, pt.y as f64) > rad {
                used[pt.y * grad.w + pt.x] = false;
                reg.swap_remove(i);
            } else {
                i += 1;
            }
        }
        if reg.len() < 2 {
            return false;
        }
        *rec = region_to_rect(reg, grad, reg_angle, prec, p);
        density = rect_density(reg.len(), rec);
    }
    true
}

/// Iterates the integer pixels covered by a rectangle.
struct RectIter {
    vx: [f64; 4],
    vy: [f64; 4],
    ys: f64,
    ye: f64,
    x: i64,
    y: i64,
}

impl RectIter {
    fn new(r: &Rect) -> Self {
        let half = r.width / 2.0;
        let vx = [
            r.x1 - r.dy * half,
            r.x2 - r.dy * half,
            r.x2 + r.dy * half,
            r.x1 + r.dy * half,
        ];
        let vy = [
            r.y1 + r.dx * half,
            r.y2 + r.dx * half,
            r.y2 - r.dx * half,
            r.y1 - r.dx * half,
        ];
        let offset = if r.x1 < r.x2 && r.y1 <= r.y2 {
            0
        } else if r.x1 >= r.x2 && r.y1 < r.y2 {
            1
        } else if r.x1 > r.x2 && r.y1 >= r.y2 {
            2
        } else {
            3
        };
        let mut it = RectIter {
            vx: [0.0; 4],
            vy: [0.0; 4],
            ys: f64::MIN,
            ye: f64::MIN,
            x: 0,
            y: 0,
        };
        for n in 0..4 {
            it.vx[n] = vx[(offset + n) % 4];
            it.vy[n] = vy[(offset + n) % 4];
        }
        it.x = it.vx[0].ceil() as i64 - 1;
        it.y = it.vy[0].ceil() as i64;
        it.inc();
        it
    }

    fn end(&self) -> bool {
        self.x as f64 > self.vx[2]
    }

    fn inc(&mut self) {
        if !self.end() {
            self.y += 1;
        }
        while self.y as f64 > self.ye && !self.end() {
            self.x += 1;
            if self.end() {
                return;
            }
            let x = self.x as f64;
            self.ys = if x < self.vx[3] {
                inter_low(x, self.vx[0], self.vy[0], self.vx[3], self.vy[3])
            } else {
                inter_low(x, self.vx[3], self.vy[3], self.vx[2], self.vy[2])
            };
            self.ye = if x < self.vx[1] {
                inter_hi(x, self.vx[0], self.vy[0], self.vx[1], self.vy[1])
            } else {
                inter_hi(x, self.vx[1], self.vy[1], self.vx[2], self.vy[2])
            };
            self.y = self.ys.ceil() as i64;
        }
    }
}

fn inter_low(x: f64, x1: f64, y1: f64, x2: f64, y2: f64) -> f64 {
    if double_equal(x1, x2) && y1 < y2 {
        return y1;
    }
    if double_equal(x1, x2) && y1 > y2 {
        return y2;
    }
    y1 + (x - x1) * (y2 - y1) / (x2 - x1)
}

fn inter_hi(x: f64, x1: f64, y1: f64, x2: f64, y2: f64) -> f64 {
    if double_equal(x1, x2) && y1 < y2 {
        return y2;
    }
    if double_equal(x1, x2) && y1 > y2 {
        return y1;
    }
    y1 + (x - x1) * (y2 - y1) / (x2 - x1)
}

fn rect_nfa(rec: &Rect, grad: &Gradient, log_nt: f64) -> f64 {
    let mut pts = 0usize;
    let mut alg = 0usize;
    let mut it = RectIter::new(rec);
    while !it.end() {
        if it.x >= 0 && it.y >= 0 && (it.x as usize) < grad.w && (it.y as usize) < grad.h {
            pts += 1;
            if is_aligned(
                grad.angles[it.y as usize * grad.w + it.x as usize],
                rec.theta,
                rec.prec,
            ) {
                alg += 1;
            }
        }
        it.inc();
    }
    nfa(pts, alg, rec.p, log_nt)
}

fn rect_improve(rec: &mut Rect, grad: &Gradient, log_nt: f64, log_eps: f64) -> f64 {
    let delta = 0.5;
    let delta_2 = delta / 2.0;

    let mut log_nfa = rect_nfa(rec, grad, log_nt);
    if log_nfa > log_eps {
        return log_nfa;
    }

    // Finer precision.
    let mut r = *rec;
    for _ in 0..5 {
        r.p /= 2.0;
        r.prec = r.p * PI;
        let v = rect_nfa(&r, grad, log_nt);
        if v > log_nfa {
            log_nfa = v;
            *rec = r;
        }
    }
    if log_nfa > log_eps {
        return log_nfa;
    }

    // Narrower width.
    let mut r = *rec;
    for _ in 0..5 {
        if r.width - delta >= 0.5 {
            r.width -= delta;
            let v = rect_nfa(&r, grad, log_nt);
            if v > log_nfa {
                *rec = r;
                log_nfa = v;
            }
        }
    }
    if log_nfa > log_eps {
        return log_nfa;
    }

    // Shave one side.
    let mut r = *rec;
    for _ in 0..5 {
        if r.width - delta >= 0.5 {
            r.x1 += -r.dy * delta_2;
            r.y1 += r.dx * delta_2;
            r.x2 += -r.dy * delta_2;
            r.y2 += r.dx * delta_2;
            r.width -= delta;
            let v = rect_nfa(&r, grad, log_nt);
            if v > log_nfa {
                *rec = r;
                log_nfa = v;
            }
        }
    }
    if log_nfa > log_eps {
        return log_nfa;
    }

    // Shave the other side.
    let mut r = *rec;
    for _ in 0..5 {
        if r.width - delta >= 0.5 {
            r.x1 -= -r.dy * delta_2;
            r.y1 -= r.dx * delta_2;
            r.x2 -= -r.dy * delta_2;
            r.y2 -= r.dx * delta_2;
            r.width -= delta;
            let v = rect_nfa(&r, grad, log_nt);
            if v > log_nfa {
                *rec = r;
                log_nfa = v;
            }
        }
    }
    if log_nfa > log_eps {
        return log_nfa;
    }

    // Even finer precision.
    let mut r = *rec;
    for _ in 0..5 {
        r.p /= 2.0;
        r.prec = r.p * PI;
        let v = rect_nfa(&r, grad, log_nt);
        if v > log_nfa {
            log_nfa = v;
            *rec = r;
        }
    }
    log_nfa
}

fn log_gamma_lanczos(x: f64) -> f64 {
    const Q: [f64; 7] = [
        75122.6331530,
        80916.6278952,
        36308.2951477,
        8687.24529705,
        1168.92649479,
        83.8676043424,
        2.50662827511,
    ];
    let mut a = (x + 0.5) * (x + 5.5).ln() - (x + 5.5);
    let mut b = 0.0;
    for (n, q) in Q.iter().enumerate() {
        a -= (x + n as f64).ln();
        b += q * x.powi(n as i32);
    }
    a + b.ln()
}

fn log_gamma_windschitl(x: f64) -> f64 {
    0.918938533204673 + (x - 0.5) * x.ln() - x
        + 0.5 * x * (x * (1.0 / x).sinh() + 1.0 / (810.0 * x.powi(6))).ln()
}

fn log_gamma(x: f64) -> f64 {
    if x > 15.0 {
        log_gamma_windschitl(x)
    } else {
        log_gamma_lanczos(x)
    }
}

/// `-log10(NFA)` for `k` aligned points out of `n` with probability `p`.
fn nfa(n: usize, k: usize, p: f64, log_nt: f64) -> f64 {
    const TOLERANCE: f64 = 0.1;
    assert!(k <= n && p > 0.0 && p < 1.0, "invalid NFA arguments");
    if n == 0 || k == 0 {
        return -log_nt;
    }
    if n == k {
        return -log_nt - n as f64 * p.log10();
    }
    let (nf, kf) = (n as f64, k as f64);
    let p_term = p / (1.0 - p);
    let log1term = log_gamma(nf + 1.0) - log_gamma(kf + 1.0) - log_gamma(nf - kf + 1.0)
        + kf * p.ln()
        + (nf - kf) * (1.0 - p).ln();
    let mut term = log1term.exp();
    if double_equal(term, 0.0) {
        return if kf > nf * p {
            -log1term / std::f64::consts::LN_10 - log_nt
        } else {
            -log_nt
        };
    }
    let mut bin_tail = term;
    for i in k + 1..=n {
        let bin_term = (nf - i as f64 + 1.0) / i as f64;
        let mult_term = bin_term * p_term;
        term *= mult_term;
        bin_tail += term;
        if bin_term < 1.0 {
            let err =
                term * ((1.0 - mult_term.powf(nf - i as f64 + 1.0)) / (1.0 - mult_term) - 1.0);
            if err < TOLERANCE * (-bin_tail.log10() - log_nt).abs() * bin_tail {
                break;
            }
        }
    }
    -bin_tail.log10() - log_nt
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_image(w: usize, h: usize, edge_x: usize, y0: usize, y1: usize) -> Vec<f64> {
        let mut img = vec![0.0; w * h];
        for y in y0..y1 {
            for x in edge_x..w {
                img[y * w + x] = 255.0;
            }
        }
        img
    }

    #[test]
    fn blank_image_has_no_segments() {
        let img = vec![128.0; 64 * 64];
        assert!(detect(&img, 64, 64, &LsdParams::default()).is_empty());
    }

    #[test]
    fn vertical_step_is_one_vertical_segment() {
        let (w, h) = (96, 96);
        let img = step_image(w, h, 40, 0, h);
        let segs = detect(&img, w, h, &LsdParams::default());
        let long: Vec<_> = segs.iter().filter(|s| s.length() > 20.0).collect();
        assert_eq!(long.len(), 1, "{segs:?}");
        let s = long[0];
        assert!((s.x1 - 39.5).abs() < 1.0 && (s.x2 - 39.5).abs() < 1.0, "{s:?}");
        assert!(s.length() > 85.0);
    }

    #[test]
    fn nfa_degenerate_cases() {
        assert_eq!(nfa(10, 0, 0.125, 3.0), -3.0);
        let all = nfa(10, 10, 0.125, 3.0);
        assert!((all - (-3.0 - 10.0 * 0.125f64.log10())).abs() < 1e-12);
        // More aligned points means a more meaningful rectangle.
        assert!(nfa(100, 60, 0.125, 3.0) > nfa(100, 30, 0.125, 3.0));
    }

    #[test]
    fn log_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..30 {
            fact *= n as f64;
            let lg = log_gamma(n as f64 + 1.0);
            assert!((lg - fact.ln()).abs() < 1e-6 * fact.ln().max(1.0), "n={n}");
        }
    }

    #[test]
    fn rect_iterator_covers_axis_aligned_box() {
        let rec = Rect {
            x1: 2.0,
            y1: 5.0,
            x2: 10.0,
            y2: 5.0,
            width: 3.0,
            theta: 0.0,
            dx: 1.0,
            dy: 0.0,
            prec: 0.1,
            p: 0.1,
        };
        let mut it = RectIter::new(&rec);
        let mut pts = Vec::new();
        while !it.end() {
            pts.push((it.x, it.y));
            it.inc();
        }
        // x in 2..=10, y in 3.5..=6.5 → 4..=6
        assert_eq!(pts.len(), 9 * 3);
        assert!(pts.iter().all(|&(x, y)| (2..=10).contains(&x) && (4..=6).contains(&y)));
    }
}
