//! Frame and pass detection rates against simulator ground truth.
//!
//! A frame counts as detected only when a detection carries the true marker
//! id. A pass is a maximal run of consecutive packets in which the whole
//! marker is visible; it is detected when any of its frames is.

use std::collections::HashMap;
use std::ops::AddAssign;

use crate::error::{Error, Result};
use crate::pipeline::PacketResult;
use crate::simulator::GroundTruth;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Metrics {
    pub visible_frames: usize,
    pub detected_frames: usize,
    pub passes: usize,
    pub detected_passes: usize,
    /// Detections whose id differs from the truth, in any frame.
    pub wrong_detections: usize,
    pub total_detections: usize,
}

impl Metrics {
    /// Percentage, `None` when there are no visible frames.
    pub fn frame_rate(&self) -> Option<f64> {
        (self.visible_frames > 0).then(|| 100.0 * self.detected_frames as f64 / self.visible_frames as f64)
    }

    pub fn pass_rate(&self) -> Option<f64> {
        (self.passes > 0).then(|| 100.0 * self.detected_passes as f64 / self.passes as f64)
    }
}

impl AddAssign for Metrics {
    fn add_assign(&mut self, o: Metrics) {
        self.visible_frames += o.visible_frames;
        self.detected_frames += o.detected_frames;
        self.passes += o.passes;
        self.detected_passes += o.detected_passes;
        self.wrong_detections += o.wrong_detections;
        self.total_detections += o.total_detections;
    }
}

/// Formats a rate, `N/A` when undefined.
pub fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "N/A".to_string(), |v| format!("{v:.2}%"))
}

/// Per-packet detection ids, as read back from a report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketIds {
    pub t_start: u64,
    pub ids: Vec<usize>,
}

impl From<&PacketResult> for PacketIds {
    fn from(r: &PacketResult) -> Self {
        Self {
            t_start: r.t_start,
            ids: r.detections.iter().map(|d| d.marker_id).collect(),
        }
    }
}

pub fn evaluate(results: &[PacketResult], truth: &GroundTruth) -> Result<Metrics> {
    let ids: Vec<PacketIds> = results.iter().map(PacketIds::from).collect();
    evaluate_ids(&ids, truth)
}

/// Matches packets to truth frames by window start. A packet whose window
/// has no truth frame is an error.
pub fn evaluate_ids(packets: &[PacketIds], truth: &GroundTruth) -> Result<Metrics> {
    let by_start: HashMap<u64, usize> = truth
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| (f.t_start, i))
        .collect();
    let mut correct = vec![false; truth.frames.len()];
    let mut m = Metrics::default();
    for p in packets {
        let &fi = by_start.get(&p.t_start).ok_or_else(|| {
            Error::Misaligned(format!("no ground-truth frame starts at {} us", p.t_start))
        })?;
        let want = truth.frames[fi].marker_id;
        m.total_detections += p.ids.len();
        m.wrong_detections += p.ids.iter().filter(|id| **id != want).count();
        correct[fi] |= p.ids.contains(&want);
    }
    let mut in_pass = false;
    let mut pass_hit = false;
    for (f, &hit) in truth.frames.iter().zip(&correct) {
        if f.fully_visible {
            m.visible_frames += 1;
            m.detected_frames += hit as usize;
            if !in_pass {
                in_pass = true;
                pass_hit = false;
                m.passes += 1;
            }
            pass_hit |= hit;
        } else if in_pass {
            in_pass = false;
            m.detected_passes += pass_hit as usize;
        }
    }
    if in_pass {
        m.detected_passes += pass_hit as usize;
    }
    Ok(m)
}
