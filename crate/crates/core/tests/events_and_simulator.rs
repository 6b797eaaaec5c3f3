//! Packetization, the noise filter and the simulator against brute-force
//! references.

use std::collections::HashSet;

use evmarker::dictionary::{render_marker, MarkerDictionary};
use evmarker::event::{noise_filter, packetize, Event, EventPacket, NoiseFilterConfig, Polarity, SensorGeometry};
use evmarker::event_image::build_time_image;
use evmarker::simulator::{simulate, traversal, Direction, EventLabel, NoiseModel, SimConfig, DEFAULT_MARKER_SIDE};
use evmarker::segments::Point2;
use proptest::prelude::*;

fn small_config() -> SimConfig {
    SimConfig {
        geometry: SensorGeometry::new(40, 36).unwrap(),
        marker_id: 6,
        marker_side_px: 24.0,
        start: Point2::new(-20.2037, 5.3121),
        velocity: (1.13, 0.27),
        duration_ms: 30.0,
        ..SimConfig::default()
    }
}

/// Marker color (1 = white) at a sensor point, from the rendered cell grid.
fn color_oracle(cfg: &SimConfig, cells: &evmarker::raster::Raster<u8>, x: f64, y: f64, t_ms: f64) -> u8 {
    let n = cells.width() as f64;
    let (u, v) = (x - cfg.start.x - cfg.velocity.0 * t_ms, y - cfg.start.y - cfg.velocity.1 * t_ms);
    let s = cfg.marker_side_px;
    if u < 0.0 || v < 0.0 || u >= s || v >= s {
        return 1;
    }
    let c = ((u / s * n) as usize).min(cells.width() - 1);
    let r = ((v / s * n) as usize).min(cells.height() - 1);
    cells.at(c, r)
}

/// Color changes seen by dense time stepping at 0.01 ms: (x, y, t_ms, polarity)
/// where `t_ms` is the middle of the step that contains the change.
fn dense_crossings(cfg: &SimConfig, dict: &MarkerDictionary) -> Vec<(u16, u16, f64, Polarity)> {
    let cells = render_marker(cfg.marker_id, dict, 1).unwrap().cells;
    let dt = 0.01;
    let steps = (cfg.duration_ms / dt).round() as usize;
    let mut out = Vec::new();
    for y in 0..cfg.geometry.height {
        for x in 0..cfg.geometry.width {
            let (px, py) = (x as f64, y as f64);
            let mut prev = color_oracle(cfg, &cells, px, py, 0.0);
            for k in 1..=steps {
                let t = k as f64 * dt;
                let now = color_oracle(cfg, &cells, px, py, t);
                if now != prev {
                    let pol = if now == 0 { Polarity::Off } else { Polarity::On };
                    out.push((x as u16, y as u16, t - dt / 2.0, pol));
                }
                prev = now;
            }
        }
    }
    out
}

#[test]
fn simulated_event_count_matches_dense_stepping() {
    let dict = MarkerDictionary::builtin();
    let cfg = small_config();
    let sim = simulate(&cfg, &dict).unwrap();
    let oracle = dense_crossings(&cfg, &dict);
    assert!(oracle.len() > 500);
    assert_eq!(sim.events.len(), oracle.len());
    let mut events = sim.events.clone();
    events.sort_by_key(|e| (e.x, e.y, e.t));
    let mut want = oracle;
    want.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
    for (e, w) in events.iter().zip(&want) {
        assert_eq!((e.x, e.y, e.polarity), (w.0, w.1, w.3));
        assert!((e.t as f64 / 1000.0 - w.2).abs() <= 0.006, "{e:?} vs {w:?}");
    }
}

#[test]
fn time_image_support_is_the_set_of_crossed_pixels() {
    let dict = MarkerDictionary::builtin();
    let cfg = small_config();
    let sim = simulate(&cfg, &dict).unwrap();
    let oracle = dense_crossings(&cfg, &dict);
    for p in packetize(&sim.events, 10_000, cfg.geometry).unwrap() {
        let (lo, hi) = (p.t_start as f64 / 1000.0, p.t_end as f64 / 1000.0);
        for pol in Polarity::BOTH {
            let want: HashSet<(usize, usize)> = oracle
                .iter()
                .filter(|c| c.3 == pol && c.2 >= lo && c.2 < hi)
                .map(|c| (c.0 as usize, c.1 as usize))
                .collect();
            let got: HashSet<(usize, usize)> = build_time_image(&p, pol)
                .map(|ti| {
                    (0..ti.width())
                        .flat_map(|x| (0..ti.height()).map(move |y| (x, y)))
                        .filter(|&(x, y)| ti.valid.at(x, y))
                        .collect()
                })
                .unwrap_or_default();
            assert_eq!(got, want, "window {lo} ms, {}", pol.name());
        }
    }
}

#[test]
fn hundred_milliseconds_make_ten_packets() {
    let dict = MarkerDictionary::builtin();
    let mut cfg = traversal(SensorGeometry::dvs128(), 0, DEFAULT_MARKER_SIDE, Direction::Right, 1.0);
    cfg.start = Point2::new(10.0, 16.0);
    cfg.duration_ms = 100.0;
    let sim = simulate(&cfg, &dict).unwrap();
    let packets = packetize(&sim.events, 10_000, cfg.geometry).unwrap();
    let windows: HashSet<u64> = sim.events.iter().map(|e| e.t / 10_000).collect();
    let (lo, hi) = (*windows.iter().min().unwrap(), *windows.iter().max().unwrap());
    assert_eq!(packets.len() as u64, hi - lo + 1);
    assert_eq!(packets.len(), 10);
    for p in &packets {
        assert_eq!(p.t_end - p.t_start, 10_000);
        assert!(p.events.iter().all(|e| e.t >= p.t_start && e.t < p.t_end));
    }
    assert_eq!(packets.iter().map(|p| p.len()).sum::<usize>(), sim.events.len());
}

#[test]
fn simulation_is_deterministic_per_seed() {
    let dict = MarkerDictionary::builtin();
    let mut cfg = small_config();
    cfg.jitter_us = 150.0;
    cfg.noise = NoiseModel::FractionOfSignal(0.1);
    cfg.seed = 99;
    let a = simulate(&cfg, &dict).unwrap();
    let b = simulate(&cfg, &dict).unwrap();
    assert_eq!(a, b);
    cfg.seed = 100;
    assert_ne!(simulate(&cfg, &dict).unwrap().events, a.events);
}

/// Direct definition: an earlier event of the packet within the radius and
/// time window.
fn filter_reference(p: &EventPacket, cfg: NoiseFilterConfig) -> Vec<Event> {
    let r = cfg.radius as i64;
    p.events
        .iter()
        .enumerate()
        .filter(|(i, e)| {
            p.events[..*i].iter().any(|o| {
                (o.x as i64 - e.x as i64).abs() <= r
                    && (o.y as i64 - e.y as i64).abs() <= r
                    && e.t - o.t <= cfg.window_us
            })
        })
        .map(|(_, e)| *e)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noise_filter_matches_reference(
        raw in prop::collection::vec((0u16..12, 0u16..10, 0u64..10_000, any::<bool>()), 0..300),
        radius in 0u32..3,
        window_us in 0u64..4000,
    ) {
        let g = SensorGeometry::new(12, 10).unwrap();
        let mut events: Vec<Event> = raw
            .into_iter()
            .map(|(x, y, t, on)| Event::new(x, y, t, if on { Polarity::On } else { Polarity::Off }))
            .collect();
        events.sort_by_key(|e| e.t);
        let p = EventPacket::new(g, 0, 10_000, events);
        let cfg = NoiseFilterConfig { radius, window_us };
        prop_assert_eq!(noise_filter(&p, cfg).events, filter_reference(&p, cfg));
    }
}

#[test]
fn noise_filter_confusion_on_a_labeled_sweep() {
    let dict = MarkerDictionary::builtin();
    let mut cfg = traversal(SensorGeometry::dvs128(), 4, DEFAULT_MARKER_SIDE, Direction::Down, 1.0);
    cfg.noise = NoiseModel::FractionOfSignal(0.05);
    cfg.seed = 21;
    let sim = simulate(&cfg, &dict).unwrap();
    let filter = NoiseFilterConfig::default();
    assert_eq!((filter.radius, filter.window_us), (1, 2000));

    let (mut noise, mut noise_cut, mut signal, mut signal_kept) = (0usize, 0usize, 0usize, 0usize);
    let mut cursor = 0;
    for p in packetize(&sim.events, 10_000, cfg.geometry).unwrap() {
        let kept = filter_reference(&p, filter);
        let mut k = 0;
        for e in &p.events {
            let survived = kept.get(k) == Some(e);
            k += survived as usize;
            match sim.labels[cursor] {
                EventLabel::Noise => {
                    noise += 1;
                    noise_cut += !survived as usize;
                }
                EventLabel::Signal => {
                    signal += 1;
                    signal_kept += survived as usize;
                }
            }
            cursor += 1;
        }
    }
    let cut = noise_cut as f64 / noise as f64;
    let keep = signal_kept as f64 / signal as f64;
    assert!(cut >= 0.90, "removed {:.1}% of noise", 100.0 * cut);
    assert!(keep >= 0.95, "kept {:.1}% of edge events", 100.0 * keep);
}
