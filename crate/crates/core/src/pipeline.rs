//! Per-packet detection pipeline and its configuration.

use std::time::Instant;

use rayon::prelude::*;

use crate::candidates::{form_candidates, Candidate};
use crate::decoder::{self, DecoderConfig, Detection, UnwarpedImage};
use crate::dictionary::MarkerDictionary;
use crate::error::{Error, Result};
use crate::event::{noise_filter, packetize, Event, EventPacket, NoiseFilterConfig, Polarity, SensorGeometry};
use crate::event_image::{build_time_image, normalize, refine, smooth, GaussianKernel, NormImage, SmoothImage};
use crate::segments::{correct_age, detect_segments, AgeCorrectionParams, LineSegment, LsdParams};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub width: u32,
    pub height: u32,
    /// Smoothing kernel size.
    pub n_s: usize,
    pub sigma_s: f64,
    pub l_min: f64,
    pub s_c: usize,
    pub n_d: usize,
    pub sigma_d: f64,
    pub theta: f64,
    pub window_us: u64,
    pub noise_radius: u32,
    pub noise_window_us: u64,
    /// Detect segments on `1 - I_norm` instead of `I_norm`.
    pub flip: bool,
    /// Polarity whose sampling points move left by `n_d / 4`.
    pub shift_polarity: Polarity,
    /// Upper bound on candidates per packet; `None` for no bound.
    pub candidate_cap: Option<usize>,
    pub max_shift: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            n_s: 3,
            sigma_s: 0.8,
            l_min: 25.0,
            s_c: 160,
            n_d: 20,
            sigma_d: 3.35,
            theta: 0.55,
            window_us: 10_000,
            noise_radius: 1,
            noise_window_us: 2_000,
            flip: true,
            shift_polarity: Polarity::Off,
            candidate_cap: Some(64),
            max_shift: 20.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.width < 8 || self.height < 8 {
            return bad("W and H must be at least 8");
        }
        if self.n_s == 0 || self.n_s.is_multiple_of(2) || self.n_s > self.width.min(self.height) as usize {
            return bad("n_s must be odd, positive and no larger than the image");
        }
        if self.n_d == 0 || !self.s_c.is_multiple_of(self.n_d) || self.s_c / self.n_d < 3 {
            return bad("s_c must be a multiple of n_d with at least 3 cells");
        }
        if (self.s_c / self.n_d - 2).pow(2) > 64 {
            return bad("code grid larger than 8x8 is not supported");
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return bad("theta must lie in (0, 1]");
        }
        if !(self.sigma_s > 0.0 && self.sigma_d > 0.0) {
            return bad("sigmas must be positive");
        }
        if self.window_us == 0 {
            return Err(Error::ZeroWindow);
        }
        if !(self.l_min >= 0.0 && self.max_shift >= 0.0) {
            return bad("l_min and max_shift must be non-negative");
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<SensorGeometry> {
        SensorGeometry::new(self.width, self.height)
    }

    pub fn noise_filter(&self) -> NoiseFilterConfig {
        NoiseFilterConfig {
            radius: self.noise_radius,
            window_us: self.noise_window_us,
        }
    }

    pub fn decoder(&self) -> DecoderConfig {
        DecoderConfig {
            s_c: self.s_c,
            n_d: self.n_d,
            sigma_d: self.sigma_d,
            theta: self.theta,
            shift: self.n_d as f64 / 4.0,
            shift_polarity: self.shift_polarity,
            min_area: self.l_min * self.l_min / 2.0,
        }
    }

    pub fn age_params(&self) -> AgeCorrectionParams {
        AgeCorrectionParams {
            max_shift: self.max_shift,
            ..AgeCorrectionParams::default()
        }
    }
}

/// Wall-clock time per stage group, microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    /// Noise filter and event images.
    pub event_image_us: f64,
    /// LSD, age correction and candidate pairing.
    pub segments_us: f64,
    /// Corner ordering, homographies and perspective unwarp.
    pub unwarp_us: f64,
    /// Cell responses, bit recurrence and dictionary look-up.
    pub decode_us: f64,
    pub total_us: f64,
}

impl StageTimings {
    pub const GROUPS: [&'static str; 4] = [
        "event image creation and the rest",
        "segment detection and candidate formation",
        "candidate unwarping",
        "marker decoding and code look-up",
    ];

    pub fn groups(&self) -> [f64; 4] {
        [self.event_image_us, self.segments_us, self.unwarp_us, self.decode_us]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketResult {
    pub index: usize,
    pub t_start: u64,
    pub t_mid: u64,
    pub detections: Vec<Detection>,
    pub n_segments: [usize; 2],
    pub n_candidates: usize,
    pub timings: StageTimings,
}

/// Images and segments of one polarity.
#[derive(Debug, Clone)]
pub struct PolarityTrace {
    pub norm: NormImage,
    pub smooth: SmoothImage,
    pub segments: Vec<LineSegment>,
    pub corrected: Vec<LineSegment>,
}

/// Everything a packet went through, for inspection and stage dumps.
#[derive(Debug, Clone)]
pub struct PacketTrace {
    pub filtered: EventPacket,
    pub on: Option<PolarityTrace>,
    pub off: Option<PolarityTrace>,
    pub candidates: Vec<Candidate>,
    pub decoded: Vec<(Candidate, decoder::DecodeTrace, Option<Detection>)>,
}

/// Reusable detector holding the configuration, dictionary and kernel.
#[derive(Debug, Clone)]
pub struct Detector {
    cfg: PipelineConfig,
    decoder: DecoderConfig,
    dict: MarkerDictionary,
    kernel: GaussianKernel,
    lsd: LsdParams,
}

impl Detector {
    pub fn new(cfg: PipelineConfig, dict: MarkerDictionary) -> Result<Self> {
        cfg.validate()?;
        let n_cells = cfg.s_c / cfg.n_d;
        if dict.code_size() + 2 != n_cells {
            return Err(Error::Config(format!(
                "dictionary code size {} does not match s_c / n_d = {n_cells} cells",
                dict.code_size()
            )));
        }
        Ok(Self {
            kernel: GaussianKernel::new(cfg.n_s, cfg.sigma_s),
            decoder: cfg.decoder(),
            lsd: LsdParams::default(),
            cfg,
            dict,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn dictionary(&self) -> &MarkerDictionary {
        &self.dict
    }

    fn polarity(&self, packet: &EventPacket, p: Polarity) -> Option<(NormImage, SmoothImage)> {
        let ti = build_time_image(packet, p)?;
        let norm = normalize(&ti, false);
        let detect_on = if self.cfg.flip { normalize(&ti, true) } else { norm.clone() };
        let sm = smooth(&refine(&detect_on), &self.kernel);
        Some((norm, sm))
    }

    fn segments(&self, norm: &NormImage, sm: &SmoothImage) -> (Vec<LineSegment>, Vec<LineSegment>) {
        let raw = detect_segments(sm, self.cfg.l_min, &self.lsd);
        let params = self.cfg.age_params();
        let corrected = raw.iter().filter_map(|s| correct_age(s, norm, &params)).collect();
        (raw, corrected)
    }

    /// Runs the full chain on one packet. Detections keep candidate order;
    /// a repeated marker id keeps its first detection.
    pub fn detect_packet(&self, packet: &EventPacket, index: usize) -> PacketResult {
        let t_all = Instant::now();
        let mut timings = StageTimings::default();
        let mut result = PacketResult {
            index,
            t_start: packet.t_start,
            t_mid: packet.t_mid(),
            detections: Vec::new(),
            n_segments: [0, 0],
            n_candidates: 0,
            timings,
        };

        let t = Instant::now();
        let filtered = noise_filter(packet, self.cfg.noise_filter());
        let on = self.polarity(&filtered, Polarity::On);
        let off = self.polarity(&filtered, Polarity::Off);
        timings.event_image_us = micros(t);

        if let (Some((norm_on, sm_on)), Some((norm_off, sm_off))) = (on, off) {
            let t = Instant::now();
            let (_, seg_on) = self.segments(&norm_on, &sm_on);
            let (_, seg_off) = self.segments(&norm_off, &sm_off);
            let candidates = form_candidates(&seg_on, &seg_off, self.cfg.candidate_cap);
            timings.segments_us = micros(t);
            result.n_segments = [seg_on.len(), seg_off.len()];
            result.n_candidates = candidates.len();

            let t = Instant::now();
            let unwarped: Vec<([crate::segments::Point2; 4], UnwarpedImage, UnwarpedImage)> = candidates
                .iter()
                .filter_map(|c| decoder::candidate_geometry(c, &self.decoder))
                .map(|(corners, h)| {
                    (
                        corners,
                        decoder::unwarp(&norm_on, &h, self.cfg.s_c),
                        decoder::unwarp(&norm_off, &h, self.cfg.s_c),
                    )
                })
                .collect();
            timings.unwarp_us = micros(t);

            let t = Instant::now();
            for (corners, u_on, u_off) in &unwarped {
                let (_, _, _, _, bits) = decoder::read_bits(u_on, u_off, &self.decoder);
                if let Some(d) = decoder::identify(&bits, corners, &self.dict, packet.t_mid()) {
                    if !result.detections.iter().any(|e| e.marker_id == d.marker_id) {
                        result.detections.push(d);
                    }
                }
            }
            timings.decode_us = micros(t);
        }
        timings.total_us = micros(t_all);
        result.timings = timings;
        result
    }

    /// Same chain as [`Detector::detect_packet`], keeping every intermediate.
    pub fn trace_packet(&self, packet: &EventPacket) -> PacketTrace {
        let filtered = noise_filter(packet, self.cfg.noise_filter());
        let mk = |p| {
            self.polarity(&filtered, p).map(|(norm, smooth)| {
                let (segments, corrected) = self.segments(&norm, &smooth);
                PolarityTrace {
                    norm,
                    smooth,
                    segments,
                    corrected,
                }
            })
        };
        let on = mk(Polarity::On);
        let off = mk(Polarity::Off);
        let mut candidates = Vec::new();
        let mut decoded = Vec::new();
        if let (Some(a), Some(b)) = (&on, &off) {
            candidates = form_candidates(&a.corrected, &b.corrected, self.cfg.candidate_cap);
            for c in &candidates {
                if let Some(tr) = decoder::trace_candidate(c, &a.norm, &b.norm, &self.decoder) {
                    let det = decoder::identify(&tr.bits, &tr.corners, &self.dict, packet.t_mid());
                    decoded.push((*c, tr, det));
                }
            }
        }
        PacketTrace {
            filtered,
            on,
            off,
            candidates,
            decoded,
        }
    }

    /// Packetizes a stream and detects in every packet, sequentially or
    /// across threads. Output order is packet order either way.
    pub fn detect_stream(&self, events: &[Event], parallel: bool) -> Result<Vec<PacketResult>> {
        let packets = packetize(events, self.cfg.window_us, self.cfg.geometry()?)?;
        Ok(if parallel {
            packets
                .par_iter()
                .enumerate()
                .map(|(i, p)| self.detect_packet(p, i))
                .collect()
        } else {
            packets
                .iter()
                .enumerate()
                .map(|(i, p)| self.detect_packet(p, i))
                .collect()
        })
    }
}

fn micros(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e6
}

/// One-shot convenience wrapper around [`Detector::detect_packet`].
pub fn detect_packet(packet: &EventPacket, cfg: &PipelineConfig, dict: &MarkerDictionary) -> Result<PacketResult> {
    Ok(Detector::new(cfg.clone(), dict.clone())?.detect_packet(packet, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.decoder().n_m(), 6);
        let bad = PipelineConfig {
            n_d: 30,
            ..PipelineConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn empty_packet_has_no_detections() {
        let det = Detector::new(PipelineConfig::default(), MarkerDictionary::builtin()).unwrap();
        let p = EventPacket::empty(SensorGeometry::dvs128(), 0, 10_000);
        let r = det.detect_packet(&p, 0);
        assert!(r.detections.is_empty());
        assert!(r.timings.total_us >= 0.0);
    }

    #[test]
    fn only_on_events_give_no_candidates() {
        let det = Detector::new(PipelineConfig::default(), MarkerDictionary::builtin()).unwrap();
        let events = (0..100u16)
            .flat_map(|y| (40..50u16).map(move |x| Event::new(x, y, (x as u64 - 40) * 1000, Polarity::On)))
            .collect();
        let p = EventPacket::new(SensorGeometry::dvs128(), 0, 10_000, events);
        let r = det.detect_packet(&p, 0);
        assert_eq!(r.n_candidates, 0);
        assert!(r.detections.is_empty());
    }
}
