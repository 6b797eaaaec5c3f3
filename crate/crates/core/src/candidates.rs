//! Pairing of on/off segments into marker candidates.

use std::f64::consts::FRAC_PI_6;

use crate::segments::LineSegment;

/// An (on, off) segment pair hypothesized to be the trailing and leading
/// edges of one moving marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub on_seg: LineSegment,
    pub off_seg: LineSegment,
    /// Minimum angle between the two segments, radians.
    pub angle: f64,
}

/// Angle between the undirected segment directions, in `[0, π/2]`.
pub fn min_angle(l1: &LineSegment, l2: &LineSegment) -> Option<f64> {
    let d1 = l1.direction()?;
    let d2 = l2.direction()?;
    let cos = (d1.x * d2.x + d1.y * d2.y).abs().min(1.0);
    Some(cos.acos())
}

/// True iff an endpoint of `l2`, taken relative to `l1.p1`, projects onto
/// `l1` within `[0, length(l1)]`.
pub fn project(l1: &LineSegment, l2: &LineSegment) -> bool {
    let Some(d) = l1.direction() else {
        return false;
    };
    let len = l1.length();
    let within = |p: crate::segments::Point2| {
        let s = (p.x - l1.p1.x) * d.x + (p.y - l1.p1.y) * d.y;
        (0.0..=len).contains(&s)
    };
    within(l2.p1) || within(l2.p2)
}

/// Evaluates the four pairing predicates; returns the angle when they hold.
pub fn compatible(on: &LineSegment, off: &LineSegment) -> Option<f64> {
    let (lon, loff) = (on.length(), off.length());
    if !(lon < 2.0 * loff && loff < 2.0 * lon) {
        return None;
    }
    if !(project(on, off) || project(off, on)) {
        return None;
    }
    let gamma = min_angle(on, off)?;
    (gamma <= FRAC_PI_6).then_some(gamma)
}

/// All compatible (on, off) pairs in on-major order. When more than `cap`
/// pairs qualify, the `cap` most parallel ones are kept (order preserved).
pub fn form_candidates(
    on_list: &[LineSegment],
    off_list: &[LineSegment],
    cap: Option<usize>,
) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = on_list
        .iter()
        .flat_map(|on| {
            off_list.iter().filter_map(move |off| {
                compatible(on, off).map(|angle| Candidate {
                    on_seg: *on,
                    off_seg: *off,
                    angle,
                })
            })
        })
        .collect();

    if let Some(cap) = cap {
        if out.len() > cap {
            let mut idx: Vec<usize> = (0..out.len()).collect();
            idx.sort_by(|&a, &b| out[a].angle.total_cmp(&out[b].angle).then(a.cmp(&b)));
            idx.truncate(cap);
            idx.sort_unstable();
            out = idx.into_iter().map(|i| out[i]).collect();
        }
    }
    out
}
