//! Event data types, packetization and the background-activity filter.

use crate::error::{Error, Result};

/// Sign of the brightness change reported by a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    /// Brightness decrease (white to black).
    Off,
    /// Brightness increase (black to white).
    On,
}

impl Polarity {
    pub const BOTH: [Polarity; 2] = [Polarity::On, Polarity::Off];

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Polarity::Off),
            1 => Some(Polarity::On),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Polarity::Off => 0,
            Polarity::On => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Polarity::Off => "off",
            Polarity::On => "on",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    /// Timestamp in microseconds.
    pub t: u64,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(x: u16, y: u16, t: u64, polarity: Polarity) -> Self {
        Self { x, y, t, polarity }
    }
}

/// Sensor resolution in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SensorGeometry {
    pub width: u32,
    pub height: u32,
}

impl SensorGeometry {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width < 8 || height < 8 {
            return Err(Error::GeometryTooSmall { width, height });
        }
        Ok(Self { width, height })
    }

    /// The 128x128 resolution of the DVS128.
    pub fn dvs128() -> Self {
        Self {
            width: 128,
            height: 128,
        }
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// All events that fall into one half-open time window `[t_start, t_end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPacket {
    pub events: Vec<Event>,
    pub t_start: u64,
    pub t_end: u64,
    pub geometry: SensorGeometry,
}

impl EventPacket {
    pub fn new(geometry: SensorGeometry, t_start: u64, t_end: u64, events: Vec<Event>) -> Self {
        debug_assert!(events.iter().all(|e| e.t >= t_start && e.t < t_end));
        Self {
            events,
            t_start,
            t_end,
            geometry,
        }
    }

    pub fn empty(geometry: SensorGeometry, t_start: u64, t_end: u64) -> Self {
        Self::new(geometry, t_start, t_end, Vec::new())
    }

    /// Mid-point of the window, used as the timestamp of detections.
    pub fn t_mid(&self) -> u64 {
        self.t_start + (self.t_end - self.t_start) / 2
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Checks that a stream is time-ordered and inside the sensor.
pub fn validate_stream(stream: &[Event], geometry: SensorGeometry) -> Result<()> {
    let mut prev = 0u64;
    for (index, e) in stream.iter().enumerate() {
        if !geometry.contains(e.x as u32, e.y as u32) {
            return Err(Error::OutOfBounds {
                index,
                x: e.x as u32,
                y: e.y as u32,
                width: geometry.width,
                height: geometry.height,
            });
        }
        if index > 0 && e.t < prev {
            return Err(Error::Unsorted {
                index,
                t: e.t,
                prev,
            });
        }
        prev = e.t;
    }
    Ok(())
}

/// Splits a time-ordered stream into contiguous packets of `window_us`.
///
/// Windows are aligned to multiples of `window_us`; the first one contains the
/// first event. Windows without events produce empty packets.
pub fn packetize(
    stream: &[Event],
    window_us: u64,
    geometry: SensorGeometry,
) -> Result<Vec<EventPacket>> {
    if window_us == 0 {
        return Err(Error::ZeroWindow);
    }
    validate_stream(stream, geometry)?;
    let (Some(first), Some(last)) = (stream.first(), stream.last()) else {
        return Ok(Vec::new());
    };

    let origin = first.t / window_us * window_us;
    let count = ((last.t - origin) / window_us + 1) as usize;
    let mut packets = Vec::with_capacity(count);
    let mut rest = stream;
    for k in 0..count as u64 {
        let t_start = origin + k * window_us;
        let t_end = t_start + window_us;
        let split = rest.partition_point(|e| e.t < t_end);
        let (inside, tail) = rest.split_at(split);
        packets.push(EventPacket::new(geometry, t_start, t_end, inside.to_vec()));
        rest = tail;
    }
    debug_assert!(rest.is_empty());
    Ok(packets)
}

/// Background-activity filter parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseFilterConfig {
    /// Chebyshev radius of the spatial support, in pixels.
    pub radius: u32,
    /// How far back in time a supporting event may be, in microseconds.
    pub window_us: u64,
}

impl Default for NoiseFilterConfig {
    fn default() -> Self {
        Self {
            radius: 1,
            window_us: 2000,
        }
    }
}

/// Keeps an event only if some earlier event of the packet (either polarity)
/// fired within `radius` pixels and `window_us` microseconds before it.
///
/// Only the latest timestamp per pixel is tracked; since events arrive in time
/// order this is the most recent possible supporter for every neighbor.
pub fn noise_filter(packet: &EventPacket, config: NoiseFilterConfig) -> EventPacket {
    let geometry = packet.geometry;
    let w = geometry.width as usize;
    let h = geometry.height as usize;
    let r = config.radius as usize;
    let mut last: Vec<Option<u64>> = vec![None; w * h];
    let mut kept = Vec::with_capacity(packet.events.len());

    for e in &packet.events {
        let x = e.x as usize;
        let y = e.y as usize;
        let x0 = x.saturating_sub(r);
        let x1 = (x + r).min(w - 1);
        let y0 = y.saturating_sub(r);
        let y1 = (y + r).min(h - 1);
        let supported = (y0..=y1).any(|yy| {
            last[yy * w + x0..=yy * w + x1]
                .iter()
                .any(|ts| matches!(ts, Some(ts) if e.t - ts <= config.window_us))
        });
        if supported {
            kept.push(*e);
        }
        last[y * w + x] = Some(e.t);
    }

    EventPacket::new(geometry, packet.t_start, packet.t_end, kept)
}
