//! Per-stage timing statistics over many packets.

use std::fmt;

use crate::pipeline::{PacketResult, StageTimings};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: impl Iterator<Item = f64> + Clone) -> Self {
        let n = xs.clone().count();
        if n == 0 {
            return Self::default();
        }
        let mean = xs.clone().sum::<f64>() / n as f64;
        let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

/// Timing summary in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingSummary {
    pub packets: usize,
    pub groups: [MeanStd; 4],
    pub total: MeanStd,
    /// Mean of total minus the four groups.
    pub unattributed: f64,
}

impl TimingSummary {
    pub fn from_timings(t: &[StageTimings]) -> Self {
        let ms = |f: fn(&StageTimings) -> f64| MeanStd::of(t.iter().map(move |x| f(x) / 1000.0));
        let groups = [
            ms(|x| x.event_image_us),
            ms(|x| x.segments_us),
            ms(|x| x.unwarp_us),
            ms(|x| x.decode_us),
        ];
        let total = ms(|x| x.total_us);
        Self {
            packets: t.len(),
            unattributed: total.mean - groups.iter().map(|g| g.mean).sum::<f64>(),
            groups,
            total,
        }
    }

    pub fn from_results(r: &[PacketResult]) -> Self {
        let t: Vec<StageTimings> = r.iter().map(|p| p.timings).collect();
        Self::from_timings(&t)
    }

    pub fn packets_per_second(&self) -> f64 {
        if self.total.mean > 0.0 {
            1000.0 / self.total.mean
        } else {
            f64::INFINITY
        }
    }
}

impl fmt::Display for TimingSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} packets", self.packets)?;
        for (name, g) in StageTimings::GROUPS.iter().zip(&self.groups) {
            writeln!(f, "  {name:<44} {:>8.3} ± {:.3} ms", g.mean, g.std)?;
        }
        writeln!(f, "  {:<44} {:>8.3} ± {:.3} ms", "total", self.total.mean, self.total.std)?;
        write!(f, "  {:<44} {:>8.1}", "packets per second", self.packets_per_second())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std() {
        let m = MeanStd::of([1.0, 3.0].into_iter());
        assert_eq!((m.mean, m.std), (2.0, 1.0));
        assert_eq!(MeanStd::of(std::iter::empty()), MeanStd::default());
    }

    #[test]
    fn summary_groups() {
        let t = StageTimings {
            event_image_us: 1000.0,
            segments_us: 2000.0,
            unwarp_us: 3000.0,
            decode_us: 500.0,
            total_us: 7000.0,
        };
        let s = TimingSummary::from_timings(&[t, t]);
        assert_eq!(s.groups[2].mean, 3.0);
        assert!((s.unattributed - 0.5).abs() < 1e-12);
        assert!((s.packets_per_second() - 1000.0 / 7.0).abs() < 1e-9);
    }
}
