//! Synthetic event streams of a marker translating in front of the sensor,
//! with exact per-event labels and per-packet ground truth.
//!
//! Every pixel center is treated as an ideal edge detector: each time a
//! black/white boundary of the (white-background) marker passes over it, it
//! fires one event (or `bursts` events) at the exact crossing time. White to
//! black fires off, black to white fires on.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::dictionary::{BitGrid, MarkerDictionary};
use crate::error::{Error, Result};
use crate::event::{Event, Polarity, SensorGeometry};
use crate::segments::Point2;

/// Side of the rendered marker used by the canned configurations, pixels.
pub const DEFAULT_MARKER_SIDE: f64 = 96.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    /// Uniform background events per pixel per second.
    PerPixelRate(f64),
    /// Uniform background events amounting to this fraction of the signal
    /// event count.
    FractionOfSignal(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub geometry: SensorGeometry,
    pub marker_id: usize,
    pub marker_side_px: f64,
    /// Marker top-left corner at `t = 0`.
    pub start: Point2,
    /// Pixels per millisecond.
    pub velocity: (f64, f64),
    pub duration_ms: f64,
    /// Added to every timestamp.
    pub t0_us: u64,
    /// Standard deviation of the Gaussian timestamp jitter.
    pub jitter_us: f64,
    pub noise: NoiseModel,
    /// Events fired per boundary crossing.
    pub bursts: u32,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            geometry: SensorGeometry::dvs128(),
            marker_id: 0,
            marker_side_px: DEFAULT_MARKER_SIDE,
            start: Point2::new(32.0, 32.0),
            velocity: (1.0, 0.0),
            duration_ms: 100.0,
            t0_us: 0,
            jitter_us: 0.0,
            noise: NoiseModel::None,
            bursts: 1,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Marker top-left corner `t_ms` milliseconds after the start.
    pub fn position(&self, t_ms: f64) -> Point2 {
        Point2::new(
            self.start.x + self.velocity.0 * t_ms,
            self.start.y + self.velocity.1 * t_ms,
        )
    }

    /// Marker corners (top-left, top-right, bottom-right, bottom-left).
    pub fn corners(&self, t_ms: f64) -> [Point2; 4] {
        let p = self.position(t_ms);
        let s = self.marker_side_px;
        [
            p,
            Point2::new(p.x + s, p.y),
            Point2::new(p.x + s, p.y + s),
            Point2::new(p.x, p.y + s),
        ]
    }

    /// Whole marker inside the sensor area `[-0.5, W - 0.5] x [-0.5, H - 0.5]`.
    pub fn fully_visible(&self, t_ms: f64) -> bool {
        let p = self.position(t_ms);
        let s = self.marker_side_px;
        let (w, h) = (self.geometry.width as f64, self.geometry.height as f64);
        p.x >= -0.5 && p.y >= -0.5 && p.x + s <= w - 0.5 && p.y + s <= h - 0.5
    }

    fn validate(&self, dict: &MarkerDictionary) -> Result<()> {
        if self.marker_id >= dict.len() {
            return Err(Error::UnknownMarker {
                id: self.marker_id,
                name: dict.name().to_string(),
                len: dict.len(),
            });
        }
        if !(self.marker_side_px > 0.0) || !(self.duration_ms >= 0.0) {
            return Err(Error::Config(
                "marker side must be positive and duration non-negative".into(),
            ));
        }
        if !(self.jitter_us >= 0.0) || self.bursts == 0 {
            return Err(Error::Config("jitter must be >= 0 and bursts >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventLabel {
    Signal,
    Noise,
}

/// Truth for one packet window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthFrame {
    pub t_start: u64,
    pub t_end: u64,
    pub t_mid: u64,
    pub marker_id: usize,
    /// Corners at `t_mid`, clockwise from the marker's top-left.
    pub corners: [Point2; 4],
    pub fully_visible: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub frames: Vec<TruthFrame>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub events: Vec<Event>,
    /// Parallel to `events`.
    pub labels: Vec<EventLabel>,
    pub truth: GroundTruth,
}

/// Marker color sampler in marker-local coordinates, 1 = white.
struct MarkerPattern {
    cells: BitGrid,
    n_cells: usize,
    cell: f64,
    side: f64,
}

impl MarkerPattern {
    fn new(code: &BitGrid, side: f64) -> Self {
        let n_m = code.size();
        let n_cells = n_m + 2;
        let mut cells = BitGrid::zeros(n_cells);
        for r in 0..n_m {
            for c in 0..n_m {
                cells.set(r + 1, c + 1, code.get(r, c));
            }
        }
        Self {
            cells,
            n_cells,
            cell: side / n_cells as f64,
            side,
        }
    }

    fn color(&self, u: f64, v: f64) -> u8 {
        if u < 0.0 || v < 0.0 || u >= self.side || v >= self.side {
            return 1;
        }
        let c = ((u / self.cell) as usize).min(self.n_cells - 1);
        let r = ((v / self.cell) as usize).min(self.n_cells - 1);
        self.cells.get(r, c)
    }
}

/// Exact boundary-crossing times (ms) and polarities for one pixel center.
fn pixel_crossings(
    pattern: &MarkerPattern,
    cfg: &SimConfig,
    px: f64,
    py: f64,
    out: &mut Vec<(f64, Polarity)>,
    times: &mut Vec<f64>,
) {
    let (vx, vy) = cfg.velocity;
    times.clear();
    for k in 0..=pattern.n_cells {
        let off = k as f64 * pattern.cell;
        if vx != 0.0 {
            times.push((px - cfg.start.x - off) / vx);
        }
        if vy != 0.0 {
            times.push((py - cfg.start.y - off) / vy);
        }
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let color_at = |t: f64| {
        let p = cfg.position(t);
        pattern.color(px - p.x, py - p.y)
    };
    let n = times.len();
    if n == 0 {
        return;
    }
    let mut before = color_at(times[0] - 1.0);
    for i in 0..n {
        let probe = if i + 1 < n {
            0.5 * (times[i] + times[i + 1])
        } else {
            times[i] + 1.0
        };
        let after = color_at(probe);
        let t = times[i];
        if after != before && t >= 0.0 && t < cfg.duration_ms {
            let pol = if after == 0 { Polarity::Off } else { Polarity::On };
            out.push((t, pol));
        }
        before = after;
    }
}

/// Ground truth for every packet window that overlaps `[t0, t0 + duration)`,
/// windows aligned to multiples of `window_us`.
pub fn ground_truth(cfg: &SimConfig, window_us: u64) -> GroundTruth {
    let end = cfg.t0_us as f64 + cfg.duration_ms * 1000.0;
    ground_truth_until(cfg, window_us, end.ceil() as u64)
}

/// Ground truth for the windows from the one containing `t0` up to the one
/// containing `end_us - 1`.
pub fn ground_truth_until(cfg: &SimConfig, window_us: u64, end_us: u64) -> GroundTruth {
    let mut t_start = cfg.t0_us / window_us * window_us;
    let mut frames = Vec::new();
    while t_start < end_us {
        let t_end = t_start + window_us;
        let t_mid = t_start + window_us / 2;
        let t_ms = (t_mid as f64 - cfg.t0_us as f64) / 1000.0;
        frames.push(TruthFrame {
            t_start,
            t_end,
            t_mid,
            marker_id: cfg.marker_id,
            corners: cfg.corners(t_ms),
            fully_visible: cfg.fully_visible(t_ms),
        });
        t_start = t_end;
    }
    GroundTruth { frames }
}

/// Generates the labeled, time-sorted event stream. Truth uses 10 ms windows
/// and extends far enough to cover every event; call [`ground_truth_until`]
/// for other window lengths.
pub fn simulate(cfg: &SimConfig, dict: &MarkerDictionary) -> Result<SimOutput> {
    cfg.validate(dict)?;
    let code = dict.grid(cfg.marker_id).expect("validated id");
    let pattern = MarkerPattern::new(&code, cfg.marker_side_px);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let jitter = (cfg.jitter_us > 0.0).then(|| Normal::new(0.0, cfg.jitter_us).expect("finite sigma"));
    let t0 = cfg.t0_us as f64;

    let (w, h) = (cfg.geometry.width, cfg.geometry.height);
    let mut tagged: Vec<(Event, EventLabel)> = Vec::new();
    let mut crossings = Vec::new();
    let mut scratch = Vec::new();
    for y in 0..h {
        for x in 0..w {
            crossings.clear();
            pixel_crossings(&pattern, cfg, x as f64, y as f64, &mut crossings, &mut scratch);
            for &(t_ms, pol) in &crossings {
                for _ in 0..cfg.bursts {
                    let dt = jitter.map_or(0.0, |d| d.sample(&mut rng));
                    let t = (t0 + t_ms * 1000.0 + dt).round().max(0.0) as u64;
                    tagged.push((Event::new(x as u16, y as u16, t, pol), EventLabel::Signal));
                }
            }
        }
    }

    let n_signal = tagged.len();
    let span_us = cfg.duration_ms * 1000.0;
    let n_noise = match cfg.noise {
        NoiseModel::None => 0,
        NoiseModel::FractionOfSignal(f) => (f * n_signal as f64).round() as usize,
        NoiseModel::PerPixelRate(hz) => {
            let lambda = hz * cfg.geometry.pixel_count() as f64 * span_us * 1e-6;
            if lambda > 0.0 {
                Poisson::new(lambda).map(|p| p.sample(&mut rng) as usize).unwrap_or(0)
            } else {
                0
            }
        }
    };
    if span_us > 0.0 {
        for _ in 0..n_noise {
            let x = rng.random_range(0..w) as u16;
            let y = rng.random_range(0..h) as u16;
            let t = (t0 + rng.random_range(0.0..span_us)).floor() as u64;
            let pol = if rng.random::<bool>() { Polarity::On } else { Polarity::Off };
            tagged.push((Event::new(x, y, t, pol), EventLabel::Noise));
        }
    }

    tagged.sort_by_key(|(e, _)| e.t);
    let nominal_end = (t0 + span_us).ceil() as u64;
    let end = tagged.last().map_or(nominal_end, |(e, _)| nominal_end.max(e.t + 1));
    let (events, labels) = tagged.into_iter().unzip();
    Ok(SimOutput {
        events,
        labels,
        truth: ground_truth_until(cfg, 10_000, end),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Left,
    Right,
    Up,
    Down,
    /// 45° towards bottom-right.
    Diagonal,
}

impl Direction {
    pub const LATERAL: [Direction; 4] = [Direction::Left, Direction::Right, Direction::Up, Direction::Down];

    pub fn unit(self) -> (f64, f64) {
        match self {
            Direction::Left => (-1.0, 0.0),
            Direction::Right => (1.0, 0.0),
            Direction::Up => (0.0, -1.0),
            Direction::Down => (0.0, 1.0),
            Direction::Diagonal => (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Right => "right",
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Diagonal => "diagonal",
        }
    }
}

/// Config for a marker entering on one side of the sensor and leaving on the
/// opposite side, centered across the motion.
pub fn traversal(
    geometry: SensorGeometry,
    marker_id: usize,
    side: f64,
    dir: Direction,
    speed: f64,
) -> SimConfig {
    let (w, h) = (geometry.width as f64, geometry.height as f64);
    let margin = 2.0;
    let (ux, uy) = dir.unit();
    let along = |extent: f64, u: f64| {
        if u > 0.0 {
            -side - margin
        } else if u < 0.0 {
            extent + margin
        } else {
            (extent - side) / 2.0
        }
    };
    let start = Point2::new(along(w, ux), along(h, uy));
    let travel_x = if ux != 0.0 { (w + side + 2.0 * margin) / ux.abs() } else { 0.0 };
    let travel_y = if uy != 0.0 { (h + side + 2.0 * margin) / uy.abs() } else { 0.0 };
    let distance = travel_x.max(travel_y);
    SimConfig {
        geometry,
        marker_id,
        marker_side_px: side,
        start,
        velocity: (ux * speed, uy * speed),
        duration_ms: distance / speed,
        ..SimConfig::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectedOutcome {
    Detect,
    /// Known failure mode, observed but not gated.
    Unreliable,
    NoDetection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteCase {
    pub name: String,
    pub config: SimConfig,
    pub direction: Direction,
    pub speed: f64,
    pub expected: ExpectedOutcome,
}

pub const SUITE_SPEEDS: [f64; 3] = [1.0, 2.0, 4.0];
pub const DIAGONAL_SPEED: f64 = 2.0;
pub const SLOW_SPEED: f64 = 0.05;

/// Jitter and noise applied on top of every suite case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteNoise {
    pub jitter_us: f64,
    pub noise: NoiseModel,
}

impl SuiteNoise {
    pub const CLEAN: SuiteNoise = SuiteNoise {
        jitter_us: 0.0,
        noise: NoiseModel::None,
    };
    pub const NOISY: SuiteNoise = SuiteNoise {
        jitter_us: 200.0,
        noise: NoiseModel::FractionOfSignal(0.05),
    };
}

/// Every dictionary marker swept left, right, up and down at 1, 2 and
/// 4 px/ms (expected to decode), plus a diagonal sweep (unreliable) and a
/// near-static 0.05 px/ms drift (expected to yield nothing).
pub fn motion_suite(dict: &MarkerDictionary, noise: SuiteNoise, base_seed: u64) -> Vec<SuiteCase> {
    let geometry = SensorGeometry::dvs128();
    let mut cases = Vec::new();
    let mut push = |mut config: SimConfig, direction, speed, expected| {
        config.jitter_us = noise.jitter_us;
        config.noise = noise.noise;
        config.seed = base_seed.wrapping_add(cases.len() as u64);
        cases.push(SuiteCase {
            name: format!("id{:02}_{}_{}", config.marker_id, direction_name(direction), speed),
            config,
            direction,
            speed,
            expected,
        });
    };
    for id in 0..dict.len() {
        for dir in Direction::LATERAL {
            for speed in SUITE_SPEEDS {
                let cfg = traversal(geometry, id, DEFAULT_MARKER_SIDE, dir, speed);
                push(cfg, dir, speed, ExpectedOutcome::Detect);
            }
        }
        let diag = traversal(geometry, id, DEFAULT_MARKER_SIDE, Direction::Diagonal, DIAGONAL_SPEED);
        push(diag, Direction::Diagonal, DIAGONAL_SPEED, ExpectedOutcome::Unreliable);
        let mut slow = traversal(geometry, id, DEFAULT_MARKER_SIDE, Direction::Right, SLOW_SPEED);
        slow.start = Point2::new(
            (geometry.width as f64 - DEFAULT_MARKER_SIDE) / 2.0,
            (geometry.height as f64 - DEFAULT_MARKER_SIDE) / 2.0,
        );
        slow.duration_ms = 200.0;
        push(slow, Direction::Right, SLOW_SPEED, ExpectedOutcome::NoDetection);
    }
    cases
}

fn direction_name(d: Direction) -> &'static str {
    d.name()
}
