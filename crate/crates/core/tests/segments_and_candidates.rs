//! Line segments, age correction and candidate pairing.

use evmarker::candidates::{compatible, form_candidates, min_angle, project};
use evmarker::dictionary::MarkerDictionary;
use evmarker::event::{packetize, Polarity, SensorGeometry};
use evmarker::event_image::{build_time_image, normalize, SmoothImage};
use evmarker::pipeline::{Detector, PipelineConfig};
use evmarker::raster::Raster;
use evmarker::segments::{correct_age, detect_segments, segment_age, AgeCorrectionParams, LineSegment, LsdParams, Point2};
use evmarker::simulator::{simulate, traversal, Direction, SimConfig, DEFAULT_MARKER_SIDE};
use proptest::prelude::*;

fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> LineSegment {
    LineSegment::new(Point2::new(x1, y1), Point2::new(x2, y2), Polarity::On)
}

#[test]
fn single_step_edge_gives_one_segment() {
    // dark left half, bright right half, 60 rows tall: one edge at x = 39.5
    let (w, h) = (80, 60);
    let img = SmoothImage {
        polarity: Polarity::On,
        values: Raster::from_fn(w, h, |x, _| if x < 40 { 0.1 } else { 0.9 }),
        valid: Raster::filled(w, h, true),
    };
    let segs = detect_segments(&img, 25.0, &LsdParams::default());
    assert_eq!(segs.len(), 1, "{segs:?}");
    let s = segs[0];
    let (top, bottom) = if s.p1.y < s.p2.y { (s.p1, s.p2) } else { (s.p2, s.p1) };
    assert!(top.dist(Point2::new(39.5, 0.0)) <= 2.0, "{top:?}");
    assert!(bottom.dist(Point2::new(39.5, 59.0)) <= 2.0, "{bottom:?}");
    let angle = min_angle(&s, &seg(0.0, 0.0, 0.0, 1.0)).unwrap();
    assert!(angle.to_degrees() <= 2.0, "{} deg", angle.to_degrees());
}

fn right_sweep(speed: f64) -> SimConfig {
    let mut cfg = traversal(SensorGeometry::dvs128(), 1, DEFAULT_MARKER_SIDE, Direction::Right, speed);
    cfg.start.y = 16.0;
    cfg
}

#[test]
fn segment_age_equals_normalized_crossing_time() {
    let dict = MarkerDictionary::builtin();
    let cfg = right_sweep(1.0);
    let sim = simulate(&cfg, &dict).unwrap();
    let packets = packetize(&sim.events, 10_000, cfg.geometry).unwrap();
    let mut checked = 0;
    for p in packets.iter().skip(3).take(4) {
        // leading (right) edge is white to black: off events
        let ti = build_time_image(p, Polarity::Off).unwrap();
        let norm = normalize(&ti, false);
        let range = (ti.t_max - ti.t_min) as f64;
        for x in 0..cfg.geometry.width {
            let t_cross = 1000.0 * (x as f64 - cfg.start.x - cfg.marker_side_px) / cfg.velocity.0;
            if t_cross < p.t_start as f64 || t_cross >= p.t_end as f64 {
                continue;
            }
            let s = seg(x as f64, cfg.start.y + 2.0, x as f64, cfg.start.y + cfg.marker_side_px - 2.0);
            let want = (t_cross - ti.t_min as f64) / range;
            let got = segment_age(&s, &norm).unwrap();
            assert!((got - want).abs() <= 0.02, "column {x}: age {got} vs {want}");
            checked += 1;
        }
    }
    assert!(checked >= 30);
}

#[test]
fn corrected_leading_edge_has_age_one_half() {
    let dict = MarkerDictionary::builtin();
    let cfg = right_sweep(2.0);
    let sim = simulate(&cfg, &dict).unwrap();
    let detector = Detector::new(PipelineConfig::default(), dict).unwrap();
    let mut checked = 0;
    for p in packetize(&sim.events, 10_000, cfg.geometry).unwrap() {
        let trace = detector.trace_packet(&p);
        let Some(off) = trace.off else { continue };
        let lead_x = cfg.position(p.t_mid() as f64 / 1000.0).x + cfg.marker_side_px;
        for s in &off.corrected {
            if (s.midpoint().x - lead_x).abs() > 3.0 {
                continue;
            }
            let age = segment_age(s, &off.norm).unwrap();
            assert!((age - 0.5).abs() <= 0.05, "age {age} for {s:?}");
            assert_eq!(s.age, Some(age));
            checked += 1;
        }
    }
    assert!(checked >= 3, "only {checked} leading-edge segments");
}

#[test]
fn age_correction_on_linear_time_field() {
    // time grows linearly with x across a 100 px band: age(x) = (x - 10) / 99
    let norm = evmarker::event_image::NormImage {
        polarity: Polarity::Off,
        values: Raster::from_fn(128, 128, |x, _| if (10..110).contains(&x) { (x as f64 - 10.0) / 99.0 } else { 0.0 }),
        valid: Raster::from_fn(128, 128, |x, _| (10..110).contains(&x)),
        flipped: false,
    };
    let params = AgeCorrectionParams::default();
    for x0 in [52.0, 55.5, 63.0, 66.0, 70.0] {
        let s = LineSegment::new(Point2::new(x0, 20.0), Point2::new(x0, 100.0), Polarity::Off);
        let c = correct_age(&s, &norm, &params).expect("correctable");
        let age = segment_age(&c, &norm).unwrap();
        assert!((age - 0.5).abs() <= 0.05, "start {x0}: age {age}");
    }
    let far = LineSegment::new(Point2::new(15.0, 20.0), Point2::new(15.0, 100.0), Polarity::Off);
    assert!(correct_age(&far, &norm, &params).is_none(), "shift beyond max_shift");
}

#[test]
fn horizontal_sweep_yields_one_decodable_candidate_on_the_marker_edges() {
    let dict = MarkerDictionary::builtin();
    let cfg = right_sweep(1.0);
    let sim = simulate(&cfg, &dict).unwrap();
    let detector = Detector::new(PipelineConfig::default(), dict).unwrap();
    let packets = packetize(&sim.events, 10_000, cfg.geometry).unwrap();
    let mut visible = 0;
    for (p, f) in packets.iter().zip(&sim.truth.frames) {
        if !f.fully_visible {
            continue;
        }
        visible += 1;
        let trace = detector.trace_packet(p);
        let hits: Vec<_> = trace.decoded.iter().filter(|d| d.2.is_some()).collect();
        assert_eq!(hits.len(), 1, "packet at {} us", p.t_start);
        let c = hits[0].0;
        let (left, right) = (f.corners[0].x, f.corners[1].x);
        assert!((c.on_seg.midpoint().x - left).abs() <= 3.0, "on {:?} vs x={left}", c.on_seg);
        assert!((c.off_seg.midpoint().x - right).abs() <= 3.0, "off {:?} vs x={right}", c.off_seg);
        for s in [c.on_seg, c.off_seg] {
            let (lo, hi) = (s.p1.y.min(s.p2.y), s.p1.y.max(s.p2.y));
            assert!((lo - f.corners[0].y).abs() <= 3.0 && (hi - f.corners[3].y).abs() <= 3.0, "{s:?}");
        }
    }
    assert!(visible >= 2);
}

#[test]
fn projection_examples() {
    let l1 = seg(0.0, 0.0, 10.0, 0.0);
    assert!(project(&l1, &seg(5.0, 3.0, 5.0, 8.0)));
    assert!(!project(&l1, &seg(20.0, 3.0, 30.0, 3.0)));
    assert!(compatible(&seg(0.0, 0.0, 10.0, 0.0), &seg(0.0, 5.0, 21.0, 5.0)).is_none());
    assert!(compatible(&seg(0.0, 0.0, 10.0, 0.0), &seg(0.0, 5.0, 10.0, 5.0)).is_some());
}

fn arb_seg() -> impl Strategy<Value = LineSegment> {
    (0.0f64..100.0, 0.0f64..100.0, 0.0f64..100.0, 0.0f64..100.0)
        .prop_filter("non-degenerate", |(a, b, c, d)| (a - c).hypot(b - d) > 0.5)
        .prop_map(|(a, b, c, d)| seg(a, b, c, d))
}

/// `0 <= (p - a).(b - a) <= |b - a|^2` for either endpoint `p`.
fn project_oracle(l1: &LineSegment, l2: &LineSegment) -> bool {
    let (dx, dy) = (l1.p2.x - l1.p1.x, l1.p2.y - l1.p1.y);
    let len2 = dx * dx + dy * dy;
    [l2.p1, l2.p2].iter().any(|p| {
        let dot = (p.x - l1.p1.x) * dx + (p.y - l1.p1.y) * dy;
        dot >= 0.0 && dot <= len2
    })
}

proptest! {
    #[test]
    fn projection_matches_closed_form(l1 in arb_seg(), l2 in arb_seg()) {
        prop_assert_eq!(project(&l1, &l2), project_oracle(&l1, &l2));
    }

    #[test]
    fn candidates_satisfy_all_predicates(
        on in prop::collection::vec(arb_seg(), 0..8),
        off in prop::collection::vec(arb_seg(), 0..8),
    ) {
        let off: Vec<LineSegment> = off.into_iter().map(|mut s| { s.polarity = Polarity::Off; s }).collect();
        let cands = form_candidates(&on, &off, None);
        let mut expected = 0;
        for a in &on {
            for b in &off {
                let (la, lb) = (a.length(), b.length());
                let ok = la < 2.0 * lb
                    && lb < 2.0 * la
                    && (project_oracle(a, b) || project_oracle(b, a))
                    && min_angle(a, b).unwrap() <= std::f64::consts::FRAC_PI_6;
                expected += ok as usize;
                prop_assert_eq!(ok, cands.iter().any(|c| c.on_seg == *a && c.off_seg == *b));
            }
        }
        prop_assert_eq!(cands.len(), expected);
        let swapped = form_candidates(&off, &on, None);
        prop_assert_eq!(swapped.len(), cands.len());
    }

    #[test]
    fn cap_keeps_the_most_parallel_pairs(
        on in prop::collection::vec(arb_seg(), 1..10),
        off in prop::collection::vec(arb_seg(), 1..10),
        cap in 0usize..6,
    ) {
        let all = form_candidates(&on, &off, None);
        let capped = form_candidates(&on, &off, Some(cap));
        prop_assert_eq!(capped.len(), all.len().min(cap));
        let worst_kept = capped.iter().map(|c| c.angle).fold(0.0, f64::max);
        let dropped = all.iter().filter(|c| !capped.contains(c));
        for c in dropped {
            prop_assert!(c.angle >= worst_kept);
        }
    }
}
