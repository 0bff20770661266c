//! Network-level simulation of one replication.
//!
//! Each burst is represented by its control message walking the route. When
//! a control unit finishes processing (or, at the ingress, when the burst is
//! created) the node does three things in order:
//!
//! 1. reserves the output data channel for the interval the burst will occupy,
//! 2. for C-OBS/E-OBS, transmits the BCP on the output control wavelength,
//! 3. schedules processing at the next node.
//!
//! A failed reservation is a burst-contention loss, a failed BCP transmission
//! a BCP-contention loss. Reservations already made for a lost burst stay in
//! place and are accounted as wasted capacity.
//!
//! Every request on a link is decided at `start - lead`, where `lead` is the
//! remaining offset at that node. For E-OBS (`lead = t_sw`) and L-OBS
//! (`lead = 0`) this makes request start times non-decreasing per link,
//! which is what lets Horizon replace void filling there.

use std::io::Write;
use std::sync::Arc;

use slab::Slab;
use smallvec::SmallVec;
use thiserror::Error;

use crate::architectures::{
    Architecture, ArchitectureParams, BcpOutcome, ControlChannelBook, ControlKind, ControlUnitMessage,
};
use crate::kernel::{DispatchSummary, Event, Flow, Handler, Kernel, KernelError, RandomStream, SimTime};
use crate::metrics::{MetricsError, MetricsLedger};
use crate::scheduler::{ChannelBook, HorizonBook, ReservationRequest, Selection, VoidBook};
use crate::topology::{LinkId, NodeId, RouteTable, Topology, TopologyError};
use crate::traffic::{Burst, Fate, LoadSpec, TrafficError, TrafficSource};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("burst {burst} reached node {node} with offset {offset}, below t_proc + t_sw")]
    OffsetTooSmall { burst: u64, node: NodeId, offset: SimTime },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Immutable topology plus its route table, shared by replications.
#[derive(Clone, Debug)]
pub struct Network {
    pub topology: Arc<Topology>,
    pub routes: Arc<RouteTable>,
}

impl Network {
    pub fn new(topology: Topology) -> Result<Self, TopologyError> {
        let routes = crate::topology::shortest_routes(&topology)?;
        Ok(Network {
            topology: Arc::new(topology),
            routes: Arc::new(routes),
        })
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub params: ArchitectureParams,
    pub load: LoadSpec,
    /// Nominal number of bursts generated over `[0, window end)`.
    pub bursts: u64,
    /// Leading fraction of the run excluded from all counters.
    pub warmup_fraction: f64,
    pub seed: u64,
    /// How long after the window closes in-flight bursts may take to resolve.
    pub drain_limit: SimTime,
    pub record_reservations: bool,
    pub record_requests: bool,
}

impl SimConfig {
    pub fn new(arch: Architecture, load: LoadSpec, bursts: u64, seed: u64) -> Self {
        SimConfig {
            params: ArchitectureParams::new(arch),
            load,
            bursts,
            warmup_fraction: 0.1,
            seed,
            drain_limit: SimTime::from_secs_f64(10.0),
            record_reservations: false,
            record_requests: false,
        }
    }

    /// `(warmup end, window end)` for a network of `nodes` sources.
    pub fn window(&self, nodes: usize) -> (SimTime, SimTime) {
        let total_rate = self.load.node_rate() * nodes as f64;
        let end = SimTime::from_secs_f64(self.bursts as f64 / total_rate);
        let start = SimTime::from_secs_f64(end.as_secs_f64() * self.warmup_fraction);
        (start, end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReservationRecord {
    pub link: LinkId,
    pub channel: usize,
    pub start: SimTime,
    pub end: SimTime,
    pub burst_id: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RequestRecord {
    pub link: LinkId,
    pub submitted_at: SimTime,
    pub request: ReservationRequest,
}

/// Counters for the timing invariants, checked on every event.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TimingAudit {
    /// Delivered bursts whose delay minus propagation was compared with the closed form.
    pub delay_checks: u64,
    pub delay_violations: u64,
    /// C-OBS offsets compared with `t_sw + (H - k + 1) * t_proc` at the k-th downstream node.
    pub offset_checks: u64,
    pub offset_violations: u64,
    /// E-OBS control arrivals compared with the fixed `t_sw` offset.
    pub fixed_offset_checks: u64,
    pub fixed_offset_violations: u64,
    /// E-OBS/L-OBS requests whose start preceded an earlier request on the same link.
    pub order_violations: u64,
}

impl TimingAudit {
    pub fn violations(&self) -> u64 {
        self.delay_violations + self.offset_violations + self.fixed_offset_violations + self.order_violations
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub ledger: MetricsLedger,
    pub audit: TimingAudit,
    pub summary: DispatchSummary,
    pub bcp_attempts: u64,
    pub bcp_collisions: u64,
    pub reservation_log: Vec<ReservationRecord>,
    pub request_trace: Vec<RequestRecord>,
}

#[derive(Clone, Copy, Debug)]
enum NetEvent {
    SourceFire(usize),
    /// Control unit at the next node on the route has finished processing.
    ControlArrival(usize),
    /// Burst tail has reached the egress.
    BurstTailArrival(usize),
}

struct InFlight {
    burst: Burst,
    hop_count: usize,
    hops_done: usize,
    msg: ControlUnitMessage,
    head_at_egress: SimTime,
    measured: bool,
    tracked: bool,
    fate: Fate,
    reservations: SmallVec<[(LinkId, SimTime, SimTime); 6]>,
}

struct Engine<'a> {
    net: &'a Network,
    cfg: &'a SimConfig,
    d_ctrl: SimTime,
    sources: Vec<TrafficSource>,
    pending: Vec<Burst>,
    next_id: u64,
    books: Vec<ChannelBook>,
    control: ControlChannelBook,
    last_start: Vec<SimTime>,
    bursts: Slab<InFlight>,
    ledger: MetricsLedger,
    audit: TimingAudit,
    /// Bursts created before the window end that have not resolved.
    unresolved: u64,
    reservation_log: Vec<ReservationRecord>,
    request_trace: Vec<RequestRecord>,
}

impl Engine<'_> {
    fn inject(&mut self, kernel: &mut Kernel<NetEvent>, burst: Burst) -> Result<(), SimError> {
        let route = self.net.routes.route(burst.source, burst.destination);
        let hop_count = route.hop_count();
        let measured = self.ledger.in_window(burst.created_at);
        let tracked = burst.created_at < self.ledger.window.1;
        if measured {
            self.ledger.record_offered(burst.length_bits);
        }
        if tracked {
            self.unresolved += 1;
        }
        let now = kernel.now();
        let offset = self.cfg.params.ingress_offset(hop_count);
        let kind = self.cfg.params.arch.control_kind();
        let msg = ControlUnitMessage {
            kind,
            burst_id: burst.id,
            burst_duration: burst.duration,
            remaining_offset: (kind == ControlKind::Bcp).then_some(offset),
            arrived_at: now,
        };
        let slot = self.bursts.insert(InFlight {
            burst,
            hop_count,
            hops_done: 0,
            msg,
            head_at_egress: SimTime::ZERO,
            measured,
            tracked,
            fate: Fate::InFlight,
            reservations: SmallVec::new(),
        });
        self.forward(kernel, slot, now, offset)
    }

    /// Control processing at the current node is done at `now`; the burst head
    /// leaves the switch `lead` later.
    fn forward(
        &mut self,
        kernel: &mut Kernel<NetEvent>,
        slot: usize,
        now: SimTime,
        lead: SimTime,
    ) -> Result<(), SimError> {
        let params = self.cfg.params;
        let st = &mut self.bursts[slot];
        let (k, hops) = (st.hops_done, st.hop_count);
        if k == hops {
            st.head_at_egress = now + lead;
            let tail = st.head_at_egress + st.burst.duration;
            kernel.schedule(tail, NetEvent::BurstTailArrival(slot))?;
            return Ok(());
        }
        let remaining = hops - k;
        let link = self.net.routes.route(st.burst.source, st.burst.destination).links[k];
        if st.measured {
            self.ledger.record_hop_attempt(remaining);
        }

        let mut duration = st.burst.duration;
        if params.arch == Architecture::LOBS {
            duration += self.d_ctrl;
        }
        let req = ReservationRequest::new(now + lead, duration, st.burst.id);
        if self.cfg.record_requests {
            self.request_trace.push(RequestRecord {
                link,
                submitted_at: now,
                request: req,
            });
        }
        if params.arch != Architecture::COBS {
            if req.start < self.last_start[link.0] {
                self.audit.order_violations += 1;
            }
            self.last_start[link.0] = req.start;
        }
        let channel = match self.books[link.0].reserve(&req, now) {
            Selection::Channel(c) => c,
            Selection::Blocked => return self.resolve(slot, Fate::LostBurstContention, remaining),
        };
        st.reservations.push((link, req.start, req.end()));
        if self.cfg.record_reservations {
            self.reservation_log.push(ReservationRecord {
                link,
                channel,
                start: req.start,
                end: req.end(),
                burst_id: req.burst_id,
            });
        }

        let prop = self.net.topology.link(link).propagation_delay;
        let lead_in = match params.arch {
            Architecture::COBS | Architecture::EOBS => {
                if self.control.transmit(link.0, now, self.d_ctrl) == BcpOutcome::Contention {
                    return self.resolve(slot, Fate::LostBcpContention, remaining);
                }
                now + prop
            }
            Architecture::LOBS => req.start + prop,
        };
        st.hops_done += 1;
        st.msg.arrived_at = lead_in;
        if let Some(off) = st.msg.remaining_offset.as_mut() {
            *off = lead;
        }
        kernel.schedule(lead_in + params.processing_delay(), NetEvent::ControlArrival(slot))?;
        Ok(())
    }

    fn on_control(&mut self, kernel: &mut Kernel<NetEvent>, slot: usize) -> Result<(), SimError> {
        let params = self.cfg.params;
        let now = kernel.now();
        let st = &self.bursts[slot];
        let lead = match params.arch {
            Architecture::COBS => {
                let offset = st.msg.remaining_offset.expect("BCP carries an offset");
                let k = st.hops_done as u64;
                let expected = params.t_sw + params.t_proc * (st.hop_count as u64 - k + 1);
                self.audit.offset_checks += 1;
                if offset != expected {
                    self.audit.offset_violations += 1;
                }
                if offset < params.t_proc + params.t_sw {
                    let node = self.net.routes.route(st.burst.source, st.burst.destination).nodes[st.hops_done];
                    return Err(SimError::OffsetTooSmall {
                        burst: st.burst.id,
                        node,
                        offset,
                    });
                }
                params.offset_after_processing(offset)
            }
            Architecture::EOBS => {
                self.audit.fixed_offset_checks += 1;
                if st.msg.remaining_offset != Some(params.t_sw) {
                    self.audit.fixed_offset_violations += 1;
                }
                params.t_sw
            }
            Architecture::LOBS => SimTime::ZERO,
        };
        self.forward(kernel, slot, now, lead)
    }

    fn on_tail(&mut self, slot: usize) -> Result<(), SimError> {
        let st = &self.bursts[slot];
        let route = self.net.routes.route(st.burst.source, st.burst.destination);
        let delay = st.head_at_egress - st.burst.created_at;
        let prop = route.propagation(&self.net.topology);
        self.audit.delay_checks += 1;
        if delay.saturating_sub(prop) != self.cfg.params.added_latency(st.hop_count) || delay < prop {
            self.audit.delay_violations += 1;
        }
        self.resolve(slot, Fate::Delivered, 0)
    }

    fn resolve(&mut self, slot: usize, fate: Fate, remaining: usize) -> Result<(), SimError> {
        let mut st = self.bursts.remove(slot);
        if st.fate != Fate::InFlight {
            return Err(MetricsError::FateRecordedTwice(st.burst.id).into());
        }
        st.fate = fate;
        let delivered = fate == Fate::Delivered;
        for &(link, start, end) in &st.reservations {
            self.ledger.add_reservation(link, start, end, delivered);
        }
        if st.measured {
            let delay = delivered.then(|| st.head_at_egress - st.burst.created_at);
            self.ledger.record_fate(fate, remaining, delay)?;
        }
        if st.tracked {
            self.unresolved -= 1;
        }
        Ok(())
    }
}

impl Handler<NetEvent> for Engine<'_> {
    type Error = SimError;

    fn handle(&mut self, kernel: &mut Kernel<NetEvent>, event: Event<NetEvent>) -> Result<Flow, SimError> {
        match event.payload {
            NetEvent::SourceFire(node) => {
                let (at, next) = self.sources[node].next_arrival(kernel.now(), self.next_id);
                self.next_id += 1;
                let burst = std::mem::replace(&mut self.pending[node], next);
                kernel.schedule(at, NetEvent::SourceFire(node))?;
                self.inject(kernel, burst)?;
            }
            NetEvent::ControlArrival(slot) => self.on_control(kernel, slot)?,
            NetEvent::BurstTailArrival(slot) => self.on_tail(slot)?,
        }
        if kernel.now() >= self.ledger.window.1 && self.unresolved == 0 {
            return Ok(Flow::Stop);
        }
        Ok(Flow::Continue)
    }
}

/// Runs one replication.
pub fn run(net: &Network, cfg: &SimConfig) -> Result<RunOutput, SimError> {
    cfg.load.validate()?;
    if !(0.0..1.0).contains(&cfg.warmup_fraction) {
        return Err(SimError::Config(format!(
            "warmup fraction must be in [0, 1), got {}",
            cfg.warmup_fraction
        )));
    }
    if cfg.bursts == 0 {
        return Err(SimError::Config("`bursts_per_replication` must be positive".into()));
    }
    let topo = &net.topology;
    let nodes = topo.node_count();
    let mut books = Vec::with_capacity(topo.directed_link_count());
    for link in topo.links() {
        let channels = cfg.params.data_channels(link) as usize;
        if channels == 0 {
            return Err(SimError::Config(format!(
                "link {}->{} has no data wavelength for {}",
                link.from, link.to, cfg.params.arch
            )));
        }
        books.push(if cfg.params.arch.uses_void_filling() {
            ChannelBook::Void(VoidBook::new(channels))
        } else {
            ChannelBook::Horizon(HorizonBook::new(channels))
        });
    }
    let window = cfg.window(nodes);
    let mut kernel = Kernel::new();
    let mut sources = Vec::with_capacity(nodes);
    let mut pending = Vec::with_capacity(nodes);
    let mut next_id = 0;
    for node in topo.nodes() {
        let stream = RandomStream::new(cfg.seed, format!("source/{}", node.0));
        let mut src = TrafficSource::new(node, nodes, cfg.load, stream);
        let (at, burst) = src.next_arrival(SimTime::ZERO, next_id);
        next_id += 1;
        kernel.schedule(at, NetEvent::SourceFire(node.0))?;
        sources.push(src);
        pending.push(burst);
    }
    let mut engine = Engine {
        net,
        cfg,
        d_ctrl: cfg.load.control_packet_duration(),
        sources,
        pending,
        next_id,
        books,
        control: ControlChannelBook::new(topo.directed_link_count()),
        last_start: vec![SimTime::ZERO; topo.directed_link_count()],
        bursts: Slab::new(),
        ledger: MetricsLedger::new(topo.directed_link_count(), window),
        audit: TimingAudit::default(),
        unresolved: 0,
        reservation_log: Vec::new(),
        request_trace: Vec::new(),
    };
    let summary = kernel.run_until(window.1 + cfg.drain_limit, &mut engine)?;
    let in_flight = engine.bursts.iter().filter(|(_, b)| b.measured).count() as u64;
    engine.ledger.in_flight_at_end = in_flight;
    let (mut bcp_attempts, mut bcp_collisions) = (0, 0);
    for l in 0..topo.directed_link_count() {
        bcp_attempts += engine.control.attempts(l);
        bcp_collisions += engine.control.collisions(l);
    }
    Ok(RunOutput {
        ledger: engine.ledger,
        audit: engine.audit,
        summary,
        bcp_attempts,
        bcp_collisions,
        reservation_log: engine.reservation_log,
        request_trace: engine.request_trace,
    })
}

/// Writes the reservation log as `link,channel,start_ps,end_ps,burst_id`.
pub fn write_reservation_log<W: Write>(records: &[ReservationRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["link", "channel", "start_ps", "end_ps", "burst_id"])?;
    for r in records {
        w.write_record(&[
            r.link.0.to_string(),
            r.channel.to_string(),
            r.start.0.to_string(),
            r.end.0.to_string(),
            r.burst_id.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// First pair of overlapping reservations on the same `(link, channel)`, if any.
pub fn find_overlap(records: &[ReservationRecord]) -> Option<(ReservationRecord, ReservationRecord)> {
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| (r.link, r.channel, r.start, r.end));
    sorted
        .windows(2)
        .find(|w| w[0].link == w[1].link && w[0].channel == w[1].channel && w[1].start < w[0].end)
        .map(|w| (w[0], w[1]))
}
