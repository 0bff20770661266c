//! Signalling timing of the three OBS node architectures.
//!
//! * **C-OBS**: out-of-band BCP with a path-dependent offset. The ingress sets
//!   the offset to `t_sw + hops * t_proc`; each downstream control unit
//!   consumes `t_proc` of it.
//! * **E-OBS**: out-of-band BCP with a fixed offset of `t_sw`. Input fibre
//!   delay lines hold the burst for `t_proc` at every downstream node.
//! * **L-OBS**: in-band label sent just ahead of the burst on the same
//!   wavelength. Input delay lines hold label and burst for `t_proc + t_sw`.
//!
//! C-OBS and E-OBS give up `CW` wavelengths per link to carry BCPs, and BCPs
//! leaving a control unit at overlapping instants collide on that wavelength.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::kernel::{Event, Flow, Handler, Kernel, KernelError, RandomStream, SimTime};
use crate::topology::DirectedLink;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Architecture {
    COBS,
    EOBS,
    LOBS,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::COBS, Architecture::EOBS, Architecture::LOBS];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::COBS => "c-obs",
            Architecture::EOBS => "e-obs",
            Architecture::LOBS => "l-obs",
        }
    }

    pub fn has_control_channel(self) -> bool {
        !matches!(self, Architecture::LOBS)
    }

    /// C-OBS reserves out of order, so it needs void filling.
    pub fn uses_void_filling(self) -> bool {
        matches!(self, Architecture::COBS)
    }

    pub fn control_kind(self) -> ControlKind {
        match self {
            Architecture::LOBS => ControlKind::Label,
            _ => ControlKind::Bcp,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArchError {
    #[error("unknown architecture `{0}` (expected c-obs, e-obs or l-obs)")]
    Unknown(String),
    #[error("hop count must be at least 1")]
    NoHops,
}

impl FromStr for Architecture {
    type Err = ArchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "c-obs" | "cobs" => Ok(Architecture::COBS),
            "e-obs" | "eobs" => Ok(Architecture::EOBS),
            "l-obs" | "lobs" => Ok(Architecture::LOBS),
            _ => Err(ArchError::Unknown(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArchitectureParams {
    pub arch: Architecture,
    pub t_sw: SimTime,
    pub t_proc: SimTime,
}

impl ArchitectureParams {
    /// 1 us switching, 10 us processing.
    pub fn new(arch: Architecture) -> Self {
        ArchitectureParams {
            arch,
            t_sw: SimTime::from_us(1),
            t_proc: SimTime::from_us(10),
        }
    }

    pub fn data_channels(&self, link: &DirectedLink) -> u32 {
        if self.arch.has_control_channel() {
            link.wavelength_count - link.control_wavelengths
        } else {
            link.wavelength_count
        }
    }

    /// Time from the burst leaving the ingress to the ingress reservation start,
    /// i.e. the offset the control message starts with.
    pub fn ingress_offset(&self, hops: usize) -> SimTime {
        match self.arch {
            Architecture::COBS => min_offset(self.t_sw, self.t_proc, hops).expect("route has hops"),
            Architecture::EOBS => self.t_sw,
            Architecture::LOBS => SimTime::ZERO,
        }
    }

    /// Delay from a control message's leading edge reaching a node to the
    /// instant that node's control unit has processed it.
    pub fn processing_delay(&self) -> SimTime {
        match self.arch {
            Architecture::LOBS => self.t_proc + self.t_sw,
            _ => self.t_proc,
        }
    }

    /// Offset left between the processed control message and the burst head
    /// at the switch output, given the offset observed on arrival.
    pub fn offset_after_processing(&self, arrived_offset: SimTime) -> SimTime {
        match self.arch {
            Architecture::COBS => arrived_offset - self.t_proc,
            Architecture::EOBS => self.t_sw,
            Architecture::LOBS => SimTime::ZERO,
        }
    }

    pub fn added_latency(&self, hops: usize) -> SimTime {
        added_latency(self.arch, self.t_sw, self.t_proc, hops)
    }
}

/// Smallest C-OBS offset that keeps the burst behind its BCP over `hops` hops.
pub fn min_offset(t_sw: SimTime, t_proc: SimTime, hops: usize) -> Result<SimTime, ArchError> {
    if hops < 1 {
        return Err(ArchError::NoHops);
    }
    Ok(t_sw + t_proc * hops as u64)
}

/// End-to-end delay on top of propagation (assembly time taken as zero).
pub fn added_latency(arch: Architecture, t_sw: SimTime, t_proc: SimTime, hops: usize) -> SimTime {
    match arch {
        Architecture::COBS | Architecture::EOBS => t_sw + t_proc * hops as u64,
        Architecture::LOBS => (t_proc + t_sw) * hops as u64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControlKind {
    Bcp,
    Label,
}

/// A BCP or label as seen by a control unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ControlUnitMessage {
    pub kind: ControlKind,
    pub burst_id: u64,
    pub burst_duration: SimTime,
    /// Time from the message's leading edge to the burst head. `None` for labels.
    pub remaining_offset: Option<SimTime>,
    /// Leading-edge arrival time at the current node.
    pub arrived_at: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcpOutcome {
    Sent,
    Contention,
}

/// Occupancy of the control wavelength on every directed link.
///
/// Transmissions are attempted in non-decreasing time order (they happen at
/// the instant a control unit releases a BCP), so only the last committed
/// interval can overlap a new attempt. Lost BCPs occupy nothing.
#[derive(Clone, Debug)]
pub struct ControlChannelBook {
    last: Vec<Option<(SimTime, SimTime)>>,
    attempts: Vec<u64>,
    collisions: Vec<u64>,
}

impl ControlChannelBook {
    pub fn new(links: usize) -> Self {
        ControlChannelBook {
            last: vec![None; links],
            attempts: vec![0; links],
            collisions: vec![0; links],
        }
    }

    /// Tries to put `[at, at + d_bcp)` on link `link`'s control wavelength.
    pub fn transmit(&mut self, link: usize, at: SimTime, d_bcp: SimTime) -> BcpOutcome {
        self.attempts[link] += 1;
        if let Some((start, end)) = self.last[link] {
            debug_assert!(at >= start, "BCP attempts must be time ordered");
            if at < end && at + d_bcp > start {
                self.collisions[link] += 1;
                return BcpOutcome::Contention;
            }
        }
        self.last[link] = Some((at, at + d_bcp));
        BcpOutcome::Sent
    }

    pub fn attempts(&self, link: usize) -> u64 {
        self.attempts[link]
    }

    pub fn collisions(&self, link: usize) -> u64 {
        self.collisions[link]
    }
}

/// Outcome of [`bcp_merge_experiment`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BcpMergeResult {
    pub attempts: u64,
    pub collisions: u64,
    pub offered_rho: f64,
}

impl BcpMergeResult {
    pub fn contention_fraction(&self) -> f64 {
        self.collisions as f64 / self.attempts as f64
    }
}

#[derive(Clone, Copy, Debug)]
enum MergeEvent {
    Release(usize),
}

struct MergeNode {
    streams: Vec<(RandomStream, f64)>,
    book: ControlChannelBook,
    d_bcp: SimTime,
    remaining: u64,
}

impl Handler<MergeEvent> for MergeNode {
    type Error = KernelError;

    fn handle(&mut self, kernel: &mut Kernel<MergeEvent>, event: Event<MergeEvent>) -> Result<Flow, KernelError> {
        let MergeEvent::Release(i) = event.payload;
        self.book.transmit(0, event.fire_at, self.d_bcp);
        self.remaining -= 1;
        if self.remaining == 0 {
            return Ok(Flow::Stop);
        }
        let (stream, mean) = &mut self.streams[i];
        let gap = stream.exponential(*mean);
        kernel.schedule(
            event.fire_at + SimTime((gap.round() as u64).max(1)),
            MergeEvent::Release(i),
        )?;
        Ok(Flow::Continue)
    }
}

/// Feeds independent Poisson BCP streams (rates in BCPs/s) into one control
/// wavelength and counts how many collide.
pub fn bcp_merge_experiment(rates: &[f64], d_bcp: SimTime, attempts: u64, seed: u64) -> BcpMergeResult {
    assert!(!rates.is_empty() && attempts > 0);
    let mut kernel = Kernel::new();
    let mut streams = Vec::new();
    for (i, &rate) in rates.iter().enumerate() {
        let mean = SimTime::PS_PER_SECOND as f64 / rate;
        let mut stream = RandomStream::new(seed, format!("bcp-merge/{i}"));
        let first = SimTime((stream.exponential(mean).round() as u64).max(1));
        kernel.schedule(first, MergeEvent::Release(i)).expect("clock at zero");
        streams.push((stream, mean));
    }
    let mut node = MergeNode {
        streams,
        book: ControlChannelBook::new(1),
        d_bcp,
        remaining: attempts,
    };
    kernel
        .run_until(SimTime(u64::MAX), &mut node)
        .expect("merge events never go back in time");
    BcpMergeResult {
        attempts: node.book.attempts(0),
        collisions: node.book.collisions(0),
        offered_rho: rates.iter().sum::<f64>() * d_bcp.as_secs_f64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn us(x: u64) -> SimTime {
        SimTime::from_us(x)
    }

    #[test]
    fn min_offset_values() {
        assert_eq!(min_offset(us(1), us(10), 3), Ok(us(31)));
        assert_eq!(min_offset(us(1), us(10), 1), Ok(us(11)));
        assert_eq!(min_offset(SimTime::ZERO, SimTime::ZERO, 5), Ok(SimTime::ZERO));
        assert_eq!(min_offset(us(1), us(10), 0), Err(ArchError::NoHops));
    }

    #[test]
    fn added_latency_values() {
        assert_eq!(added_latency(Architecture::COBS, us(1), us(10), 3), us(31));
        assert_eq!(added_latency(Architecture::EOBS, us(1), us(10), 3), us(31));
        assert_eq!(added_latency(Architecture::LOBS, us(1), us(10), 3), us(33));
        for a in Architecture::ALL {
            assert_eq!(added_latency(a, SimTime::ZERO, SimTime::ZERO, 4), SimTime::ZERO);
        }
    }

    #[test]
    fn cobs_offset_recurrence() {
        let p = ArchitectureParams::new(Architecture::COBS);
        let mut seen = vec![];
        let mut offset = p.ingress_offset(3);
        for _ in 0..3 {
            seen.push(offset);
            offset = p.offset_after_processing(offset);
        }
        assert_eq!(seen, vec![us(31), us(21), us(11)]);
        assert_eq!(offset, us(1));
    }

    #[test]
    fn eobs_and_lobs_offsets() {
        let e = ArchitectureParams::new(Architecture::EOBS);
        assert_eq!(e.ingress_offset(5), us(1));
        assert_eq!(e.offset_after_processing(us(1)), us(1));
        let l = ArchitectureParams::new(Architecture::LOBS);
        assert_eq!(l.ingress_offset(5), SimTime::ZERO);
        assert_eq!(l.processing_delay(), us(11));
    }

    #[test]
    fn parse_names() {
        assert_eq!("c-obs".parse::<Architecture>(), Ok(Architecture::COBS));
        assert_eq!("E_OBS".parse::<Architecture>(), Ok(Architecture::EOBS));
        assert!("x-obs".parse::<Architecture>().is_err());
    }

    #[test]
    fn control_channel_overlap_and_boundary() {
        let ns = SimTime::from_ns;
        let mut b = ControlChannelBook::new(1);
        assert_eq!(b.transmit(0, ns(100), ns(10)), BcpOutcome::Sent);
        assert_eq!(b.transmit(0, ns(105), ns(10)), BcpOutcome::Contention);
        assert_eq!(b.transmit(0, ns(110), ns(10)), BcpOutcome::Sent);
        assert_eq!((b.attempts(0), b.collisions(0)), (3, 1));
    }

    #[test]
    fn lost_bcp_does_not_extend_busy_period() {
        let ns = SimTime::from_ns;
        let mut b = ControlChannelBook::new(1);
        b.transmit(0, ns(0), ns(10));
        assert_eq!(b.transmit(0, ns(9), ns(10)), BcpOutcome::Contention);
        // [9, 19) was dropped, so 12 only sees [0, 10)
        assert_eq!(b.transmit(0, ns(12), ns(10)), BcpOutcome::Sent);
    }

    #[test]
    fn data_channels_per_architecture() {
        let link = DirectedLink {
            from: crate::topology::NodeId(0),
            to: crate::topology::NodeId(1),
            wavelength_count: 32,
            control_wavelengths: 1,
            bit_rate: 10_000_000_000,
            propagation_delay: SimTime::from_ms(1),
        };
        assert_eq!(ArchitectureParams::new(Architecture::COBS).data_channels(&link), 31);
        assert_eq!(ArchitectureParams::new(Architecture::EOBS).data_channels(&link), 31);
        assert_eq!(ArchitectureParams::new(Architecture::LOBS).data_channels(&link), 32);
    }
}
