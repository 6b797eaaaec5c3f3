//! Text formats: event CSV, ground-truth sidecar, detection report and the
//! flat `key=value` pipeline configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::dictionary::Rotation;
use crate::error::{Error, Result};
use crate::event::{validate_stream, Event, Polarity, SensorGeometry};
use crate::metrics::PacketIds;
use crate::pipeline::{PacketResult, PipelineConfig};
use crate::segments::Point2;
use crate::simulator::{GroundTruth, TruthFrame};

/// `read_to_string` with the path in the error.
pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn field<T: FromStr>(s: &str, what: &str, path: &Path, line: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad {what} `{}`", s.trim())))
}

/// Lines that carry data: 1-based line number and content, skipping blanks.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn split_exact<'a>(l: &'a str, n: usize, path: &Path, line: usize) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = l.split(',').collect();
    if parts.len() != n {
        return Err(parse_err(
            path,
            line,
            format!("expected {n} comma-separated fields, found {}", parts.len()),
        ));
    }
    Ok(parts)
}

/// Parses the event CSV: a `w,h` header, then `t_us,x,y,p` lines with
/// `p` in {0, 1}. Events must be in bounds and time-ordered.
pub fn parse_events(text: &str, path: &Path) -> Result<(SensorGeometry, Vec<Event>)> {
    let mut lines = data_lines(text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing `w,h` header"))?;
    let hp = split_exact(header, 2, path, hl)?;
    let geometry = SensorGeometry::new(field(hp[0], "width", path, hl)?, field(hp[1], "height", path, hl)?)?;

    let mut events = Vec::new();
    let mut prev = 0u64;
    for (ln, l) in lines {
        let p = split_exact(l, 4, path, ln)?;
        let t: u64 = field(p[0], "timestamp", path, ln)?;
        let x: u16 = field(p[1], "x", path, ln)?;
        let y: u16 = field(p[2], "y", path, ln)?;
        let bit: u8 = field(p[3], "polarity", path, ln)?;
        let polarity =
            Polarity::from_bit(bit).ok_or_else(|| parse_err(path, ln, format!("polarity must be 0 or 1, got {bit}")))?;
        if !geometry.contains(x as u32, y as u32) {
            return Err(parse_err(
                path,
                ln,
                format!("pixel ({x}, {y}) outside the {}x{} sensor", geometry.width, geometry.height),
            ));
        }
        if t < prev {
            return Err(parse_err(path, ln, format!("timestamp {t} earlier than previous {prev}")));
        }
        prev = t;
        events.push(Event::new(x, y, t, polarity));
    }
    Ok((geometry, events))
}

pub fn read_events(path: &Path) -> Result<(SensorGeometry, Vec<Event>)> {
    parse_events(&read_text(path)?, path)
}

pub fn format_events(geometry: SensorGeometry, events: &[Event]) -> Result<String> {
    validate_stream(events, geometry)?;
    let mut s = String::with_capacity(16 * events.len() + 16);
    writeln!(s, "{},{}", geometry.width, geometry.height).unwrap();
    for e in events {
        writeln!(s, "{},{},{},{}", e.t, e.x, e.y, e.polarity.bit()).unwrap();
    }
    Ok(s)
}

pub fn write_events(path: &Path, geometry: SensorGeometry, events: &[Event]) -> Result<()> {
    write_text(path, &format_events(geometry, events)?)
}

fn push_corners(s: &mut String, corners: &[Point2; 4]) {
    for c in corners {
        write!(s, ",{},{}", c.x, c.y).unwrap();
    }
}

fn parse_corners(p: &[&str], path: &Path, line: usize) -> Result<[Point2; 4]> {
    let mut c = [Point2::new(0.0, 0.0); 4];
    for (k, pt) in c.iter_mut().enumerate() {
        pt.x = field(p[2 * k], "coordinate", path, line)?;
        pt.y = field(p[2 * k + 1], "coordinate", path, line)?;
    }
    Ok(c)
}

/// One line per packet window: `t_mid,id,x0,y0,...,x3,y3,visible`.
pub fn format_truth(truth: &GroundTruth) -> String {
    let mut s = String::new();
    for f in &truth.frames {
        write!(s, "{},{}", f.t_mid, f.marker_id).unwrap();
        push_corners(&mut s, &f.corners);
        writeln!(s, ",{}", f.fully_visible as u8).unwrap();
    }
    s
}

/// Inverse of [`format_truth`]; window bounds are rebuilt from `window_us`.
pub fn parse_truth(text: &str, window_us: u64, path: &Path) -> Result<GroundTruth> {
    let half = window_us / 2;
    let mut frames = Vec::new();
    for (ln, l) in data_lines(text) {
        let p = split_exact(l, 11, path, ln)?;
        let t_mid: u64 = field(p[0], "t_mid", path, ln)?;
        if t_mid < half {
            return Err(parse_err(path, ln, format!("t_mid {t_mid} precedes the first window")));
        }
        let visible: u8 = field(p[10], "visible flag", path, ln)?;
        if visible > 1 {
            return Err(parse_err(path, ln, "visible flag must be 0 or 1"));
        }
        frames.push(TruthFrame {
            t_start: t_mid - half,
            t_end: t_mid - half + window_us,
            t_mid,
            marker_id: field(p[1], "marker id", path, ln)?,
            corners: parse_corners(&p[2..10], path, ln)?,
            fully_visible: visible == 1,
        });
    }
    Ok(GroundTruth { frames })
}

pub fn read_truth(path: &Path, window_us: u64) -> Result<GroundTruth> {
    parse_truth(&read_text(path)?, window_us, path)
}

pub fn write_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    write_text(path, &format_truth(truth))
}

/// Detection report: one `packet_index,t_mid,id,rotation,x0,y0,...,x3,y3`
/// line per detection, rotation in degrees.
pub fn format_report(results: &[PacketResult]) -> String {
    let mut s = String::new();
    for r in results {
        for d in &r.detections {
            write!(s, "{},{},{},{}", r.index, d.t_mid, d.marker_id, d.rotation.degrees()).unwrap();
            push_corners(&mut s, &d.corners);
            s.push('\n');
        }
    }
    s
}

/// A report line read back.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRecord {
    pub packet_index: usize,
    pub t_mid: u64,
    pub marker_id: usize,
    pub rotation: Rotation,
    pub corners: [Point2; 4],
}

pub fn parse_report(text: &str, path: &Path) -> Result<Vec<ReportRecord>> {
    data_lines(text)
        .map(|(ln, l)| {
            let p = split_exact(l, 12, path, ln)?;
            let deg: u32 = field(p[3], "rotation", path, ln)?;
            Ok(ReportRecord {
                packet_index: field(p[0], "packet index", path, ln)?,
                t_mid: field(p[1], "t_mid", path, ln)?,
                marker_id: field(p[2], "marker id", path, ln)?,
                rotation: Rotation::from_degrees(deg)
                    .ok_or_else(|| parse_err(path, ln, format!("rotation {deg} is not a multiple of 90")))?,
                corners: parse_corners(&p[4..12], path, ln)?,
            })
        })
        .collect()
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRecord>> {
    parse_report(&read_text(path)?, path)
}

/// Groups report records per packet for [`crate::metrics::evaluate_ids`].
/// Packets without detections are absent, which does not change the metrics.
pub fn report_packet_ids(records: &[ReportRecord], window_us: u64) -> Vec<PacketIds> {
    let mut out: Vec<PacketIds> = Vec::new();
    for r in records {
        let t_start = r.t_mid.saturating_sub(window_us / 2);
        match out.last_mut() {
            Some(last) if last.t_start == t_start => last.ids.push(r.marker_id),
            _ => out.push(PacketIds {
                t_start,
                ids: vec![r.marker_id],
            }),
        }
    }
    out
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

/// Flat `key=value` configuration; `#` starts a comment. Unknown keys and
/// duplicates are errors. Keys not given keep their defaults.
pub fn parse_config(text: &str, path: &Path) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    let mut seen = std::collections::HashSet::new();
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let l = raw.split('#').next().unwrap().trim();
        if l.is_empty() {
            continue;
        }
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| parse_err(path, ln, "expected `key=value`"))?;
        let (k, v) = (k.trim(), v.trim());
        if !seen.insert(k.to_string()) {
            return Err(parse_err(path, ln, format!("duplicate key `{k}`")));
        }
        match k {
            "width" => cfg.width = field(v, k, path, ln)?,
            "height" => cfg.height = field(v, k, path, ln)?,
            "n_s" => cfg.n_s = field(v, k, path, ln)?,
            "sigma_s" => cfg.sigma_s = field(v, k, path, ln)?,
            "l_min" => cfg.l_min = field(v, k, path, ln)?,
            "s_c" => cfg.s_c = field(v, k, path, ln)?,
            "n_d" => cfg.n_d = field(v, k, path, ln)?,
            "sigma_d" => cfg.sigma_d = field(v, k, path, ln)?,
            "theta" => cfg.theta = field(v, k, path, ln)?,
            "window_us" => cfg.window_us = field(v, k, path, ln)?,
            "noise_radius" => cfg.noise_radius = field(v, k, path, ln)?,
            "noise_window_us" => cfg.noise_window_us = field(v, k, path, ln)?,
            "max_shift" => cfg.max_shift = field(v, k, path, ln)?,
            "flip" => cfg.flip = parse_bool(v).ok_or_else(|| parse_err(path, ln, "flip must be true or false"))?,
            "shift_polarity" => {
                cfg.shift_polarity = match v {
                    "on" => Polarity::On,
                    "off" => Polarity::Off,
                    _ => return Err(parse_err(path, ln, "shift_polarity must be on or off")),
                }
            }
            "candidate_cap" => {
                cfg.candidate_cap = match v {
                    "none" => None,
                    _ => Some(field(v, k, path, ln)?),
                }
            }
            _ => return Err(parse_err(path, ln, format!("unknown key `{k}`"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<PipelineConfig> {
    parse_config(&read_text(path)?, path)
}

pub fn format_config(cfg: &PipelineConfig) -> String {
    let cap = cfg.candidate_cap.map_or_else(|| "none".to_string(), |c| c.to_string());
    format!(
        "width={}\nheight={}\nn_s={}\nsigma_s={}\nl_min={}\ns_c={}\nn_d={}\nsigma_d={}\ntheta={}\n\
         window_us={}\nnoise_radius={}\nnoise_window_us={}\nflip={}\nshift_polarity={}\n\
         candidate_cap={}\nmax_shift={}\n",
        cfg.width,
        cfg.height,
        cfg.n_s,
        cfg.sigma_s,
        cfg.l_min,
        cfg.s_c,
        cfg.n_d,
        cfg.sigma_d,
        cfg.theta,
        cfg.window_us,
        cfg.noise_radius,
        cfg.noise_window_us,
        cfg.flip,
        cfg.shift_polarity.name(),
        cap,
        cfg.max_shift
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn events_round_trip() {
        let g = SensorGeometry::new(16, 8).unwrap();
        let ev = vec![
            Event::new(0, 0, 5, Polarity::On),
            Event::new(15, 7, 5, Polarity::Off),
            Event::new(3, 2, 900, Polarity::On),
        ];
        let text = format_events(g, &ev).unwrap();
        assert!(text.starts_with("16,8\n5,0,0,1\n"));
        assert_eq!(parse_events(&text, p()).unwrap(), (g, ev));
    }

    #[test]
    fn event_errors_carry_line_numbers() {
        let cases = [
            ("16,16\n1,0,0,2\n", 2),
            ("16,16\n5,0,0,1\n\n4,0,0,1\n", 4),
            ("16,16\n1,16,0,1\n", 2),
            ("16,16\n1,0,0\n", 2),
            ("16\n", 1),
            ("16,16\n-1,0,0,1\n", 2),
        ];
        for (text, want) in cases {
            match parse_events(text, p()) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(parse_events("", p()).is_err());
    }

    #[test]
    fn truth_round_trip() {
        let f = TruthFrame {
            t_start: 10_000,
            t_end: 20_000,
            t_mid: 15_000,
            marker_id: 4,
            corners: [
                Point2::new(1.5, 2.0),
                Point2::new(97.5, 2.0),
                Point2::new(97.5, 98.0),
                Point2::new(1.5, 98.0),
            ],
            fully_visible: true,
        };
        let gt = GroundTruth { frames: vec![f] };
        let text = format_truth(&gt);
        assert_eq!(text, "15000,4,1.5,2,97.5,2,97.5,98,1.5,98,1\n");
        assert_eq!(parse_truth(&text, 10_000, p()).unwrap(), gt);
    }

    #[test]
    fn report_groups_by_packet() {
        let text = "0,5000,3,90,0,0,1,0,1,1,0,1\n0,5000,7,0,0,0,1,0,1,1,0,1\n2,25000,3,270,0,0,1,0,1,1,0,1\n";
        let recs = parse_report(text, p()).unwrap();
        assert_eq!(recs[0].rotation, Rotation::R90);
        let ids = report_packet_ids(&recs, 10_000);
        assert_eq!(ids.len(), 2);
        assert_eq!((ids[0].t_start, ids[0].ids.clone()), (0, vec![3, 7]));
        assert_eq!(ids[1].t_start, 20_000);
        assert!(parse_report("0,5000,3,45,0,0,1,0,1,1,0,1\n", p()).is_err());
    }

    #[test]
    fn config_round_trip_and_errors() {
        let cfg = PipelineConfig {
            theta: 0.6,
            candidate_cap: None,
            shift_polarity: Polarity::On,
            ..PipelineConfig::default()
        };
        assert_eq!(parse_config(&format_config(&cfg), p()).unwrap(), cfg);
        assert_eq!(parse_config("# defaults\n\n", p()).unwrap(), PipelineConfig::default());
        assert!(parse_config("bogus=1\n", p()).is_err());
        assert!(parse_config("theta=1\ntheta=2\n", p()).is_err());
        assert!(parse_config("theta\n", p()).is_err());
        assert!(parse_config("s_c=150\n", p()).is_err());
    }
}
