//! Burst arrivals at the edge nodes.
//!
//! Offered load is normalized to link capacity: a load of 1 from one node
//! fills all `W` wavelengths of one link. Every node runs a Poisson source
//! with exponentially distributed burst lengths and uniform destinations.

use rand::Rng;
use thiserror::Error;

use crate::kernel::{RandomStream, SimTime};
use crate::topology::NodeId;

/// Control packets (BCP or label) are a fixed 100 bits.
pub const CONTROL_PACKET_BITS: u64 = 100;

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("`load` must be positive, got {0}")]
    Load(f64),
    #[error("`mean_burst_bits` must be positive")]
    MeanBurstBits,
    #[error("`data_bit_rate` must be positive")]
    DataBitRate,
    #[error("`control_bit_rate` must be positive")]
    ControlBitRate,
    #[error("wavelength count must be positive")]
    Wavelengths,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadSpec {
    pub offered_load: f64,
    pub mean_burst_bits: u64,
    pub data_bit_rate: u64,
    pub control_bit_rate: u64,
    /// Wavelengths per link used to normalize one Erlang (includes any control wavelength).
    pub wavelengths: u32,
}

impl Default for LoadSpec {
    /// Load 0.5 with 1 Mbit bursts on 32-wavelength, 10 Gbps links.
    fn default() -> Self {
        LoadSpec {
            offered_load: 0.5,
            mean_burst_bits: 1_000_000,
            data_bit_rate: 10_000_000_000,
            control_bit_rate: 10_000_000_000,
            wavelengths: 32,
        }
    }
}

impl LoadSpec {
    pub fn validate(&self) -> Result<(), TrafficError> {
        if !(self.offered_load > 0.0 && self.offered_load.is_finite()) {
            return Err(TrafficError::Load(self.offered_load));
        }
        if self.mean_burst_bits == 0 {
            return Err(TrafficError::MeanBurstBits);
        }
        if self.data_bit_rate == 0 {
            return Err(TrafficError::DataBitRate);
        }
        if self.control_bit_rate == 0 {
            return Err(TrafficError::ControlBitRate);
        }
        if self.wavelengths == 0 {
            return Err(TrafficError::Wavelengths);
        }
        Ok(())
    }

    pub fn mean_duration_secs(&self) -> f64 {
        self.mean_burst_bits as f64 / self.data_bit_rate as f64
    }

    /// Bursts per second offered by one node.
    pub fn node_rate(&self) -> f64 {
        self.offered_load * self.wavelengths as f64 / self.mean_duration_secs()
    }

    pub fn mean_interarrival(&self) -> f64 {
        SimTime::PS_PER_SECOND as f64 / self.node_rate()
    }

    pub fn burst_duration(&self, length_bits: u64) -> SimTime {
        SimTime::transmission(length_bits, self.data_bit_rate)
    }

    pub fn control_packet_duration(&self) -> SimTime {
        control_packet_duration(CONTROL_PACKET_BITS, self.control_bit_rate)
    }
}

pub fn control_packet_duration(bits: u64, control_bit_rate: u64) -> SimTime {
    SimTime::transmission(bits, control_bit_rate)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fate {
    InFlight,
    Delivered,
    LostBurstContention,
    LostBcpContention,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Burst {
    pub id: u64,
    pub source: NodeId,
    pub destination: NodeId,
    pub length_bits: u64,
    pub duration: SimTime,
    pub created_at: SimTime,
}

/// Poisson burst source attached to one edge node.
#[derive(Debug)]
pub struct TrafficSource {
    node: NodeId,
    node_count: usize,
    spec: LoadSpec,
    stream: RandomStream,
}

impl TrafficSource {
    pub fn new(node: NodeId, node_count: usize, spec: LoadSpec, stream: RandomStream) -> Self {
        assert!(node_count >= 2, "traffic needs at least two nodes");
        assert!(node.0 < node_count);
        TrafficSource {
            node,
            node_count,
            spec,
            stream,
        }
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    /// Draws the next arrival after `now`: its absolute time and the burst created then.
    pub fn next_arrival(&mut self, now: SimTime, id: u64) -> (SimTime, Burst) {
        let gap = self.stream.exponential(self.spec.mean_interarrival());
        let at = now + SimTime((gap.round() as u64).max(1));
        let bits = self.stream.exponential(self.spec.mean_burst_bits as f64);
        let length_bits = (bits.round() as u64).max(1);
        let pick = self.stream.rng().random_range(0..self.node_count - 1);
        let destination = NodeId(if pick >= self.node.0 { pick + 1 } else { pick });
        let burst = Burst {
            id,
            source: self.node,
            destination,
            length_bits,
            duration: self.spec.burst_duration(length_bits),
            created_at: at,
        };
        (at, burst)
    }
}
