//! Loss, fairness, delay and utilization accounting.
//!
//! Counters cover bursts created inside the measurement window. Reserved
//! wavelength-time is clipped to the window and split by the owning burst's
//! fate, so per link `delivered + wasted + idle` is exactly the link's
//! wavelength-time over the window.

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::kernel::SimTime;
use crate::topology::{LinkId, Topology};
use crate::traffic::Fate;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("burst {0} already has a recorded fate")]
    FateRecordedTwice(u64),
    #[error("`InFlight` is not a final fate")]
    NotFinal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HopCounts {
    pub attempts: u64,
    pub drops: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsLedger {
    pub offered: u64,
    pub delivered: u64,
    pub lost_burst: u64,
    pub lost_bcp: u64,
    pub in_flight_at_end: u64,
    /// Indexed by remaining hops `h`; entry 0 is unused.
    pub per_remaining_hop: Vec<HopCounts>,
    /// Clipped reserved time per directed link, delivered bursts.
    pub reserved_delivered: Vec<u64>,
    /// Clipped reserved time per directed link, lost bursts.
    pub reserved_wasted: Vec<u64>,
    pub delay_sum: u128,
    pub offered_bits: u128,
    pub window: (SimTime, SimTime),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub burst_contention: f64,
    pub bcp_contention: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Utilization {
    pub delivered: f64,
    pub wasted: f64,
    pub idle: f64,
}

impl MetricsLedger {
    pub fn new(links: usize, window: (SimTime, SimTime)) -> Self {
        assert!(window.1 > window.0, "measurement window must have positive length");
        MetricsLedger {
            offered: 0,
            delivered: 0,
            lost_burst: 0,
            lost_bcp: 0,
            in_flight_at_end: 0,
            per_remaining_hop: Vec::new(),
            reserved_delivered: vec![0; links],
            reserved_wasted: vec![0; links],
            delay_sum: 0,
            offered_bits: 0,
            window,
        }
    }

    pub fn in_window(&self, t: SimTime) -> bool {
        t >= self.window.0 && t < self.window.1
    }

    pub fn window_length(&self) -> SimTime {
        self.window.1 - self.window.0
    }

    pub fn record_offered(&mut self, length_bits: u64) {
        self.offered += 1;
        self.offered_bits += length_bits as u128;
    }

    fn hop(&mut self, h: usize) -> &mut HopCounts {
        if self.per_remaining_hop.len() <= h {
            self.per_remaining_hop.resize(h + 1, HopCounts::default());
        }
        &mut self.per_remaining_hop[h]
    }

    pub fn record_hop_attempt(&mut self, remaining_hops: usize) {
        self.hop(remaining_hops).attempts += 1;
    }

    /// Records a burst's final fate. `remaining_hops` is `hop_count - hops_done`
    /// at the node where a loss happened and is ignored for deliveries.
    pub fn record_fate(
        &mut self,
        fate: Fate,
        remaining_hops: usize,
        delay: Option<SimTime>,
    ) -> Result<(), MetricsError> {
        match fate {
            Fate::InFlight => return Err(MetricsError::NotFinal),
            Fate::Delivered => {
                self.delivered += 1;
                self.delay_sum += delay.map_or(0, |d| d.0 as u128);
            }
            Fate::LostBurstContention => {
                self.lost_burst += 1;
                self.hop(remaining_hops).drops += 1;
            }
            Fate::LostBcpContention => {
                self.lost_bcp += 1;
                self.hop(remaining_hops).drops += 1;
            }
        }
        Ok(())
    }

    /// Adds the part of `[start, end)` inside the window to the link's tally.
    pub fn add_reservation(&mut self, link: LinkId, start: SimTime, end: SimTime, delivered: bool) {
        let lo = start.max(self.window.0);
        let hi = end.min(self.window.1);
        if hi <= lo {
            return;
        }
        let len = (hi - lo).0;
        if delivered {
            self.reserved_delivered[link.0] += len;
        } else {
            self.reserved_wasted[link.0] += len;
        }
    }

    pub fn loss_probability(&self) -> Option<LossBreakdown> {
        if self.offered == 0 {
            return None;
        }
        let n = self.offered as f64;
        let burst = self.lost_burst as f64 / n;
        let bcp = self.lost_bcp as f64 / n;
        Some(LossBreakdown {
            total: (self.lost_burst + self.lost_bcp) as f64 / n,
            burst_contention: burst,
            bcp_contention: bcp,
        })
    }

    /// Conditional drop probability per remaining-hop count.
    pub fn fairness_curve(&self) -> BTreeMap<usize, f64> {
        self.per_remaining_hop
            .iter()
            .enumerate()
            .filter(|(_, c)| c.attempts > 0)
            .map(|(h, c)| (h, c.drops as f64 / c.attempts as f64))
            .collect()
    }

    pub fn mean_delay(&self) -> Option<f64> {
        (self.delivered > 0).then(|| self.delay_sum as f64 / self.delivered as f64)
    }

    /// Network-wide wavelength-time split, over all `W` wavelengths of every link.
    pub fn utilization(&self, topology: &Topology) -> Utilization {
        let window = self.window_length().0 as f64;
        let capacity: f64 = topology
            .links()
            .iter()
            .map(|l| l.wavelength_count as f64 * window)
            .sum();
        let delivered: u64 = self.reserved_delivered.iter().sum();
        let wasted: u64 = self.reserved_wasted.iter().sum();
        let delivered = delivered as f64 / capacity;
        let wasted = wasted as f64 / capacity;
        Utilization {
            delivered,
            wasted,
            idle: 1.0 - delivered - wasted,
        }
    }

    /// `(delivered, wasted, idle)` wavelength-time of one link, in ticks.
    pub fn link_partition(&self, topology: &Topology, link: LinkId) -> (u64, u64, u64) {
        let total = topology.link(link).wavelength_count as u64 * self.window_length().0;
        let d = self.reserved_delivered[link.0];
        let w = self.reserved_wasted[link.0];
        (d, w, total - d - w)
    }

    /// Offered traffic per node in bits/s.
    pub fn offered_bit_rate_per_node(&self, nodes: usize) -> f64 {
        self.offered_bits as f64 / self.window_length().as_secs_f64() / nodes as f64
    }

    pub fn is_conserved(&self) -> bool {
        self.offered == self.delivered + self.lost_burst + self.lost_bcp + self.in_flight_at_end
    }
}

/// Mean and 95% Student-t half-width over replications.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    /// `None` with fewer than two replications.
    pub half_width: Option<f64>,
}

impl ReplicationSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "no replications to summarize");
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let half_width = (values.len() >= 2).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let t = StudentsT::new(0.0, 1.0, n - 1.0)
                .expect("degrees of freedom are positive")
                .inverse_cdf(0.975);
            t * (var / n).sqrt()
        });
        ReplicationSummary {
            values,
            mean,
            half_width,
        }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width.unwrap_or(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width.unwrap_or(0.0)
    }

    pub fn overlaps(&self, other: &ReplicationSummary) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }

    /// True when this interval lies entirely below `other`.
    pub fn strictly_below(&self, other: &ReplicationSummary) -> bool {
        self.upper() < other.lower()
    }
}

/// Erlang-B blocking probability for `servers` channels offered `load` Erlangs.
pub fn erlang_b(servers: u32, load: f64) -> f64 {
    (1..=servers).fold(1.0, |b, n| load * b / (n as f64 + load * b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{from_edges, LinkDefaults};

    #[test]
    fn loss_ratios() {
        let mut l = MetricsLedger::new(1, (SimTime(0), SimTime(1)));
        assert_eq!(l.loss_probability(), None);
        l.offered = 1_000_000;
        l.lost_burst = 2_000;
        l.lost_bcp = 500;
        let p = l.loss_probability().unwrap();
        assert!((p.total - 2.5e-3).abs() < 1e-15);
        assert!((p.burst_contention - 2e-3).abs() < 1e-15);
        assert!((p.bcp_contention - 5e-4).abs() < 1e-15);
        assert!((p.burst_contention + p.bcp_contention - p.total).abs() < 1e-15);
    }

    #[test]
    fn no_losses_is_zero() {
        let mut l = MetricsLedger::new(1, (SimTime(0), SimTime(1)));
        l.offered = 10;
        l.delivered = 10;
        assert_eq!(l.loss_probability().unwrap().total, 0.0);
    }

    #[test]
    fn remaining_hop_drops() {
        let mut l = MetricsLedger::new(1, (SimTime(0), SimTime(1)));
        // 3-hop burst dropped before its 2nd hop: attempts at h=3 and h=2, drop at h=2
        l.record_hop_attempt(3);
        l.record_hop_attempt(2);
        l.record_fate(Fate::LostBurstContention, 2, None).unwrap();
        assert_eq!(l.per_remaining_hop[2], HopCounts { attempts: 1, drops: 1 });
        assert_eq!(l.per_remaining_hop[3], HopCounts { attempts: 1, drops: 0 });
        // 1-hop burst dropped at ingress
        l.record_hop_attempt(1);
        l.record_fate(Fate::LostBcpContention, 1, None).unwrap();
        assert_eq!(l.per_remaining_hop[1].drops, 1);
        assert_eq!(l.record_fate(Fate::InFlight, 1, None), Err(MetricsError::NotFinal));
    }

    #[test]
    fn fairness_ratio() {
        let mut l = MetricsLedger::new(1, (SimTime(0), SimTime(1)));
        l.per_remaining_hop = vec![
            HopCounts::default(),
            HopCounts {
                attempts: 10_000,
                drops: 30,
            },
            HopCounts {
                attempts: 10_000,
                drops: 10,
            },
        ];
        let c = l.fairness_curve();
        assert_eq!(c.len(), 2);
        assert!((c[&1] - 3e-3).abs() < 1e-15);
        assert!((c[&2] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn single_reservation_utilization() {
        let defaults = LinkDefaults {
            wavelengths: 1,
            control_wavelengths: 0,
            ..LinkDefaults::default()
        };
        let topo = from_edges("pair", 2, &[(0, 1)], defaults).unwrap();
        let second = SimTime::from_secs_f64(1.0);
        let mut l = MetricsLedger::new(2, (SimTime::ZERO, second));
        l.add_reservation(
            LinkId(0),
            SimTime::from_ms(3),
            SimTime::from_ms(3) + SimTime::from_us(100),
            true,
        );
        let (d, w, idle) = l.link_partition(&topo, LinkId(0));
        assert_eq!(d + w + idle, second.0);
        // the topology has two directed links, so divide by one of them
        let u = l.utilization(&topo);
        assert!((u.delivered * 2.0 - 1e-4).abs() < 1e-12);
        assert!((u.delivered + u.wasted + u.idle - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reservations_are_clipped() {
        let mut l = MetricsLedger::new(1, (SimTime(100), SimTime(200)));
        l.add_reservation(LinkId(0), SimTime(50), SimTime(150), false);
        l.add_reservation(LinkId(0), SimTime(190), SimTime(300), true);
        l.add_reservation(LinkId(0), SimTime(200), SimTime(300), true);
        assert_eq!(l.reserved_wasted[0], 50);
        assert_eq!(l.reserved_delivered[0], 10);
    }

    #[test]
    fn erlang_b_recursion() {
        assert!((erlang_b(4, 2.0) - 0.095_238).abs() < 1e-6);
        assert_eq!(erlang_b(0, 3.0), 1.0);
        assert!((erlang_b(1, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn student_t_half_width() {
        let s = ReplicationSummary::from_values(vec![1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        // t(0.975, 2) = 4.302653, sd = 1
        assert!((s.half_width.unwrap() - 4.302_653 / 3f64.sqrt()).abs() < 1e-5);
        let single = ReplicationSummary::from_values(vec![5.0]);
        assert_eq!(single.half_width, None);
    }
}
