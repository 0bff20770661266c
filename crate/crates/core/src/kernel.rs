//! Deterministic discrete-event kernel.
//!
//! Events are dispatched in `(fire_at, seq)` order, where `seq` is the
//! insertion counter. Models that schedule several events for the same
//! instant must insert the causally-prior one first.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Picoseconds since the start of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const PS_PER_SECOND: u64 = 1_000_000_000_000;

    pub const fn from_ps(ps: u64) -> Self {
        SimTime(ps)
    }

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns * 1_000)
    }

    pub const fn from_us(us: u64) -> Self {
        SimTime(us * 1_000_000)
    }

    pub const fn from_ms(ms: u64) -> Self {
        SimTime(ms * 1_000_000_000)
    }

    /// Nearest tick to `secs` seconds. Negative inputs clamp to zero.
    pub fn from_secs_f64(secs: f64) -> Self {
        SimTime((secs * Self::PS_PER_SECOND as f64).round().max(0.0) as u64)
    }

    pub const fn ps(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / Self::PS_PER_SECOND as f64
    }

    /// Time needed to serialize `bits` at `bit_rate` bits/s, rounded to the nearest tick.
    pub fn transmission(bits: u64, bit_rate: u64) -> Self {
        assert!(bit_rate > 0, "bit rate must be positive");
        let num = bits as u128 * Self::PS_PER_SECOND as u128;
        let rate = bit_rate as u128;
        SimTime(((num + rate / 2) / rate) as u64)
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.checked_add(rhs.0).expect("simulation time overflow"))
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        *self = *self + rhs;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.checked_sub(rhs.0).expect("negative simulation time"))
    }
}

impl std::ops::Mul<u64> for SimTime {
    type Output = SimTime;
    fn mul(self, rhs: u64) -> SimTime {
        SimTime(self.0.checked_mul(rhs).expect("simulation time overflow"))
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ps", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("event scheduled at {at} but the clock is already at {now}")]
    ScheduledInPast { at: SimTime, now: SimTime },
}

/// A scheduled event with its tie-breaking sequence number.
#[derive(Debug, Clone)]
pub struct Event<P> {
    pub fire_at: SimTime,
    pub seq: u64,
    pub payload: P,
}

impl<P> PartialEq for Event<P> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.seq == other.seq
    }
}

impl<P> Eq for Event<P> {}

impl<P> PartialOrd for Event<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Event<P> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        (other.fire_at, other.seq).cmp(&(self.fire_at, self.seq))
    }
}

/// What a handler wants the kernel to do after an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

pub trait Handler<P> {
    type Error: From<KernelError>;

    fn handle(&mut self, kernel: &mut Kernel<P>, event: Event<P>) -> Result<Flow, Self::Error>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DispatchSummary {
    pub dispatched: u64,
    pub clock: SimTime,
    /// Running digest of every dispatched `(fire_at, seq)` pair.
    pub trace_digest: u64,
    pub stopped_early: bool,
}

pub struct Kernel<P> {
    queue: BinaryHeap<Event<P>>,
    clock: SimTime,
    next_seq: u64,
    dispatched: u64,
    digest: u64,
}

impl<P> Default for Kernel<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Kernel<P> {
    pub fn new() -> Self {
        Kernel {
            queue: BinaryHeap::new(),
            clock: SimTime::ZERO,
            next_seq: 0,
            dispatched: 0,
            digest: 0xcbf2_9ce4_8422_2325,
        }
    }

    pub fn now(&self) -> SimTime {
        self.clock
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn schedule(&mut self, fire_at: SimTime, payload: P) -> Result<(), KernelError> {
        if fire_at < self.clock {
            return Err(KernelError::ScheduledInPast {
                at: fire_at,
                now: self.clock,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Event { fire_at, seq, payload });
        Ok(())
    }

    /// Dispatch every event with `fire_at <= limit`, or until the handler asks to stop.
    pub fn run_until<H: Handler<P>>(&mut self, limit: SimTime, handler: &mut H) -> Result<DispatchSummary, H::Error> {
        let start = self.dispatched;
        let mut stopped_early = false;
        while self.queue.peek().is_some_and(|e| e.fire_at <= limit) {
            let event = self.queue.pop().expect("peeked");
            debug_assert!(event.fire_at >= self.clock);
            self.clock = event.fire_at;
            self.dispatched += 1;
            self.digest = mix(self.digest, event.fire_at.0, event.seq);
            if handler.handle(self, event)? == Flow::Stop {
                stopped_early = true;
                break;
            }
        }
        if !stopped_early && limit > self.clock {
            self.clock = limit;
        }
        Ok(DispatchSummary {
            dispatched: self.dispatched - start,
            clock: self.clock,
            trace_digest: self.digest,
            stopped_early,
        })
    }
}

fn mix(acc: u64, a: u64, b: u64) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = acc;
    for word in [a, b] {
        for byte in word.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(PRIME);
        }
    }
    h
}

/// Seeded random stream keyed by `(master_seed, stream_id)`.
///
/// The ChaCha8 seed is `SHA-256(master_seed as little-endian u64 || stream_id bytes)`,
/// so streams are independent of creation order and adding a stream leaves the
/// others untouched.
#[derive(Clone, Debug)]
pub struct RandomStream {
    id: String,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(master_seed: u64, stream_id: impl Into<String>) -> Self {
        let id = stream_id.into();
        let mut hasher = Sha256::new();
        hasher.update(master_seed.to_le_bytes());
        hasher.update(id.as_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        RandomStream {
            id,
            rng: ChaCha8Rng::from_seed(seed),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Exponential sample with the given mean. Returns a strictly positive value.
    pub fn exponential(&mut self, mean: f64) -> f64 {
        assert!(mean > 0.0 && mean.is_finite(), "exponential mean must be positive");
        let dist = Exp::new(1.0 / mean).expect("positive rate");
        loop {
            let x: f64 = dist.sample(&mut self.rng);
            if x > 0.0 {
                return x;
            }
        }
    }

    /// Exponential duration with the given mean, at least one tick.
    pub fn exponential_time(&mut self, mean: SimTime) -> SimTime {
        let x = self.exponential(mean.0 as f64);
        SimTime((x.round() as u64).max(1))
    }
}
