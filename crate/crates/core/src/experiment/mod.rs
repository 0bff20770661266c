//! Scenario sweeps, replication statistics and result tables.
//!
//! A [`Scenario`] is the cross product of topologies, parameter variants,
//! architectures, loads and replications. Each cell is an independent
//! simulation; replication `r` uses seed `master_seed + r` for every
//! architecture and load, so all architectures see the same traffic.

mod config;
mod output;
mod plot;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

pub use config::{load_config, parse_config, preset, scenario_to_config, ConfigError, PRESETS};
pub use output::{emit_csv, emit_hops_csv, HopRow, ResultRow, CSV_HEADER, HOPS_HEADER};
pub use plot::{emit_plot, PlotKind};

use crate::architectures::{Architecture, ArchitectureParams};
use crate::kernel::SimTime;
use crate::metrics::{HopCounts, ReplicationSummary};
use crate::network::{self, Network, RunOutput, SimConfig, SimError, TimingAudit};
use crate::topology::{self, LinkDefaults, RoutingPolicy, TopologyError};
use crate::traffic::LoadSpec;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
    #[error("nothing to write: result table is empty")]
    EmptyRows,
    #[error("plot `{kind}` needs {what}")]
    MissingColumns { kind: PlotKind, what: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TopologySpec {
    Nsfnet,
    Torus { rows: usize, cols: usize },
    File(PathBuf),
}

impl TopologySpec {
    pub fn label(&self) -> String {
        match self {
            TopologySpec::Nsfnet => "nsfnet".into(),
            TopologySpec::Torus { rows, cols } => format!("torus{rows}x{cols}"),
            TopologySpec::File(p) => p
                .file_stem()
                .map_or_else(|| "custom".into(), |s| s.to_string_lossy().into_owned()),
        }
    }

    pub fn build(&self, defaults: LinkDefaults) -> Result<topology::Topology, TopologyError> {
        match self {
            TopologySpec::Nsfnet => Ok(topology::build_nsfnet(defaults)),
            TopologySpec::Torus { rows, cols } => topology::build_torus(*rows, *cols, defaults),
            TopologySpec::File(p) => topology::load_topology_file(p, defaults),
        }
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySpec::File(p) => write!(f, "file:{}", p.display()),
            other => f.write_str(&other.label()),
        }
    }
}

impl FromStr for TopologySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "nsfnet" {
            return Ok(TopologySpec::Nsfnet);
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(TopologySpec::File(PathBuf::from(path)));
        }
        if let Some(dims) = s.strip_prefix("torus") {
            let (r, c) = dims
                .split_once('x')
                .ok_or_else(|| format!("torus must look like torus<rows>x<cols>, got `{s}`"))?;
            let rows = r.parse().map_err(|_| format!("bad torus rows in `{s}`"))?;
            let cols = c.parse().map_err(|_| format!("bad torus cols in `{s}`"))?;
            return Ok(TopologySpec::Torus { rows, cols });
        }
        Err(format!(
            "unknown topology `{s}` (expected nsfnet, torus<R>x<C> or file:<path>)"
        ))
    }
}

/// Link and traffic parameters that a sweep may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamVariant {
    pub wavelengths: u32,
    pub control_wavelengths: u32,
    pub mean_burst_bits: u64,
    pub control_bit_rate: u64,
}

impl Default for ParamVariant {
    fn default() -> Self {
        ParamVariant {
            wavelengths: 32,
            control_wavelengths: 1,
            mean_burst_bits: 1_000_000,
            control_bit_rate: 10_000_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub topologies: Vec<TopologySpec>,
    pub routing: RoutingPolicy,
    pub propagation_delay: SimTime,
    pub architectures: Vec<Architecture>,
    pub loads: Vec<f64>,
    pub wavelengths: Vec<u32>,
    pub control_wavelengths: u32,
    pub mean_burst_bits: Vec<u64>,
    pub control_bit_rates: Vec<u64>,
    pub data_bit_rate: u64,
    pub t_sw: SimTime,
    pub t_proc: SimTime,
    pub replications: usize,
    pub bursts_per_replication: u64,
    pub warmup_fraction: f64,
    pub master_seed: u64,
    pub plot: PlotKind,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: "scenario".into(),
            topologies: vec![TopologySpec::Nsfnet],
            routing: RoutingPolicy::Balanced,
            propagation_delay: SimTime::from_ms(1),
            architectures: Architecture::ALL.to_vec(),
            loads: vec![0.5],
            wavelengths: vec![32],
            control_wavelengths: 1,
            mean_burst_bits: vec![1_000_000],
            control_bit_rates: vec![10_000_000_000],
            data_bit_rate: 10_000_000_000,
            t_sw: SimTime::from_us(1),
            t_proc: SimTime::from_us(10),
            replications: 5,
            bursts_per_replication: 1_000_000,
            warmup_fraction: 0.1,
            master_seed: 1,
            plot: PlotKind::LossVsLoad,
        }
    }
}

impl Scenario {
    /// 10^5 bursts x 3 replications.
    pub fn quick(mut self) -> Self {
        self.replications = 3;
        self.bursts_per_replication = 100_000;
        self
    }

    pub fn variants(&self) -> Vec<ParamVariant> {
        let mut out = Vec::new();
        for &w in &self.wavelengths {
            for &b in &self.mean_burst_bits {
                for &c in &self.control_bit_rates {
                    out.push(ParamVariant {
                        wavelengths: w,
                        control_wavelengths: self.control_wavelengths,
                        mean_burst_bits: b,
                        control_bit_rate: c,
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, msg: String| {
            Err(ConfigError::Value {
                key: key.into(),
                message: msg,
            })
        };
        if self.topologies.is_empty() {
            return bad("topology", "at least one topology is required".into());
        }
        if self.architectures.is_empty() {
            return bad("architecture", "at least one architecture is required".into());
        }
        if self.loads.is_empty() {
            return bad("load", "at least one load is required".into());
        }
        if self.loads.windows(2).any(|w| w[0] >= w[1]) {
            return bad("load", "loads must be strictly increasing".into());
        }
        if self.loads.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
            return bad("load", "loads must lie in (0, 1]".into());
        }
        for &w in &self.wavelengths {
            if w == 0 || self.control_wavelengths >= w {
                return bad(
                    "W",
                    format!("need 0 <= CW < W, got W={w}, CW={}", self.control_wavelengths),
                );
            }
        }
        if self.mean_burst_bits.contains(&0) {
            return bad("mean_burst_bits", "must be positive".into());
        }
        if self.control_bit_rates.contains(&0) {
            return bad("control_bit_rate", "must be positive".into());
        }
        if self.data_bit_rate == 0 {
            return bad("data_bit_rate", "must be positive".into());
        }
        if self.replications == 0 {
            return bad("replications", "must be positive".into());
        }
        if self.bursts_per_replication == 0 {
            return bad("bursts_per_replication", "must be positive".into());
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad("warmup_fraction", "must lie in [0, 1)".into());
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.topologies.len() * self.variants().len() * self.architectures.len() * self.loads.len() * self.replications
    }
}

/// Identifies one sweep point (all replications of it).
#[derive(Clone, Debug, PartialEq)]
pub struct PointKey {
    pub topology: String,
    pub variant: ParamVariant,
    pub arch: Architecture,
    pub load: f64,
}

/// Metrics of one replication.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationMetrics {
    pub seed: u64,
    pub offered: u64,
    pub delivered: u64,
    pub lost_burst: u64,
    pub lost_bcp: u64,
    pub loss_total: f64,
    pub loss_burst: f64,
    pub loss_bcp: f64,
    pub utilization: f64,
    pub utilization_wasted: f64,
    pub mean_delay_ps: f64,
    pub per_remaining_hop: Vec<HopCounts>,
    pub audit: TimingAudit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HopPoint {
    pub attempts: u64,
    pub drops: u64,
    pub loss: ReplicationSummary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointSummary {
    pub key: PointKey,
    pub replications: Vec<ReplicationMetrics>,
    /// Error message of the first failed replication, if any.
    pub failure: Option<String>,
    pub offered: ReplicationSummary,
    pub delivered: ReplicationSummary,
    pub loss_total: ReplicationSummary,
    pub loss_burst: ReplicationSummary,
    pub loss_bcp: ReplicationSummary,
    pub utilization: ReplicationSummary,
    pub utilization_wasted: ReplicationSummary,
    pub mean_delay_ps: ReplicationSummary,
    /// Per remaining-hop count, only for hops attempted in every replication.
    pub fairness: BTreeMap<usize, HopPoint>,
    pub audit: TimingAudit,
}

#[derive(Clone, Debug)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub points: Vec<PointSummary>,
}

impl ScenarioResult {
    pub fn failed_cells(&self) -> usize {
        self.points.iter().filter(|p| p.failure.is_some()).count()
    }

    pub fn point(&self, topology: &str, arch: Architecture, load: f64) -> Option<&PointSummary> {
        self.points
            .iter()
            .find(|p| p.key.topology == topology && p.key.arch == arch && (p.key.load - load).abs() < 1e-9)
    }

    pub fn point_with(
        &self,
        topology: &str,
        arch: Architecture,
        load: f64,
        variant: ParamVariant,
    ) -> Option<&PointSummary> {
        self.points.iter().find(|p| {
            p.key.topology == topology
                && p.key.arch == arch
                && (p.key.load - load).abs() < 1e-9
                && p.key.variant == variant
        })
    }

    pub fn total_audit(&self) -> TimingAudit {
        self.points
            .iter()
            .fold(TimingAudit::default(), |a, p| add_audit(a, p.audit))
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        output::result_rows(self)
    }

    pub fn hop_rows(&self) -> Vec<HopRow> {
        output::hop_rows(self)
    }
}

fn add_audit(a: TimingAudit, b: TimingAudit) -> TimingAudit {
    TimingAudit {
        delay_checks: a.delay_checks + b.delay_checks,
        delay_violations: a.delay_violations + b.delay_violations,
        offset_checks: a.offset_checks + b.offset_checks,
        offset_violations: a.offset_violations + b.offset_violations,
        fixed_offset_checks: a.fixed_offset_checks + b.fixed_offset_checks,
        fixed_offset_violations: a.fixed_offset_violations + b.fixed_offset_violations,
        order_violations: a.order_violations + b.order_violations,
    }
}

fn build_network(scenario: &Scenario, spec: &TopologySpec, variant: &ParamVariant) -> Result<Network, ExperimentError> {
    let defaults = LinkDefaults {
        wavelengths: variant.wavelengths,
        control_wavelengths: variant.control_wavelengths,
        bit_rate: scenario.data_bit_rate,
        propagation_delay: scenario.propagation_delay,
    };
    let topo = spec.build(defaults)?;
    let routes = topology::shortest_routes_with(&topo, scenario.routing)?;
    Ok(Network {
        topology: topo.into(),
        routes: routes.into(),
    })
}

fn cell_config(scenario: &Scenario, variant: &ParamVariant, arch: Architecture, load: f64, r: usize) -> SimConfig {
    let spec = LoadSpec {
        offered_load: load,
        mean_burst_bits: variant.mean_burst_bits,
        data_bit_rate: scenario.data_bit_rate,
        control_bit_rate: variant.control_bit_rate,
        wavelengths: variant.wavelengths,
    };
    let mut cfg = SimConfig::new(
        arch,
        spec,
        scenario.bursts_per_replication,
        scenario.master_seed.wrapping_add(r as u64),
    );
    cfg.params = ArchitectureParams {
        arch,
        t_sw: scenario.t_sw,
        t_proc: scenario.t_proc,
    };
    cfg.warmup_fraction = scenario.warmup_fraction;
    cfg
}

/// Runs the first cell of `scenario` (first topology, variant, architecture
/// and load; replication 0) with the reservation log enabled.
pub fn traced_first_cell(scenario: &Scenario) -> Result<(Network, RunOutput), ExperimentError> {
    scenario.validate()?;
    let variant = scenario.variants()[0];
    let net = build_network(scenario, &scenario.topologies[0], &variant)?;
    let mut cfg = cell_config(scenario, &variant, scenario.architectures[0], scenario.loads[0], 0);
    cfg.record_reservations = true;
    let out = network::run(&net, &cfg)?;
    Ok((net, out))
}

struct Cell {
    point: usize,
    net: usize,
    cfg: SimConfig,
}

/// Runs every cell of `scenario` on up to `jobs` threads.
pub fn run_scenario(scenario: &Scenario, jobs: usize) -> Result<ScenarioResult, ExperimentError> {
    scenario.validate()?;
    let variants = scenario.variants();

    let mut networks = Vec::new();
    let mut net_index = BTreeMap::new();
    let mut keys = Vec::new();
    let mut cells = Vec::new();
    for topo_spec in &scenario.topologies {
        for variant in &variants {
            let net_key = (topo_spec.to_string(), variant.wavelengths);
            let net = match net_index.get(&net_key) {
                Some(&i) => i,
                None => {
                    networks.push(build_network(scenario, topo_spec, variant)?);
                    net_index.insert(net_key, networks.len() - 1);
                    networks.len() - 1
                }
            };
            for &arch in &scenario.architectures {
                for &load in &scenario.loads {
                    let point = keys.len();
                    keys.push(PointKey {
                        topology: topo_spec.label(),
                        variant: *variant,
                        arch,
                        load,
                    });
                    for r in 0..scenario.replications {
                        let cfg = cell_config(scenario, variant, arch, load, r);
                        cells.push(Cell { point, net, cfg });
                    }
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let outcomes: Vec<Result<ReplicationMetrics, String>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| run_cell(&networks[cell.net], &cell.cfg))
            .collect()
    });

    let mut grouped: Vec<Vec<Result<ReplicationMetrics, String>>> = vec![Vec::new(); keys.len()];
    for (cell, outcome) in cells.iter().zip(outcomes) {
        grouped[cell.point].push(outcome);
    }
    let points = keys
        .into_iter()
        .zip(grouped)
        .map(|(key, reps)| summarize_point(key, reps))
        .collect();
    Ok(ScenarioResult {
        scenario: scenario.clone(),
        points,
    })
}

fn run_cell(net: &Network, cfg: &SimConfig) -> Result<ReplicationMetrics, String> {
    let out = network::run(net, cfg).map_err(|e| e.to_string())?;
    let ledger = &out.ledger;
    let loss = ledger
        .loss_probability()
        .ok_or_else(|| "no bursts offered inside the measurement window".to_string())?;
    let util = ledger.utilization(&net.topology);
    Ok(ReplicationMetrics {
        seed: cfg.seed,
        offered: ledger.offered,
        delivered: ledger.delivered,
        lost_burst: ledger.lost_burst,
        lost_bcp: ledger.lost_bcp,
        loss_total: loss.total,
        loss_burst: loss.burst_contention,
        loss_bcp: loss.bcp_contention,
        utilization: util.delivered,
        utilization_wasted: util.wasted,
        mean_delay_ps: ledger.mean_delay().unwrap_or(f64::NAN),
        per_remaining_hop: ledger.per_remaining_hop.clone(),
        audit: out.audit,
    })
}

fn summarize_point(key: PointKey, reps: Vec<Result<ReplicationMetrics, String>>) -> PointSummary {
    let failure = reps.iter().find_map(|r| r.as_ref().err().cloned());
    let ok: Vec<ReplicationMetrics> = reps.into_iter().filter_map(Result::ok).collect();
    let summary = |f: &dyn Fn(&ReplicationMetrics) -> f64| {
        if ok.is_empty() {
            ReplicationSummary {
                values: vec![],
                mean: f64::NAN,
                half_width: None,
            }
        } else {
            ReplicationSummary::from_values(ok.iter().map(f).collect())
        }
    };
    let max_h = ok.iter().map(|r| r.per_remaining_hop.len()).max().unwrap_or(0);
    let mut fairness = BTreeMap::new();
    for h in 1..max_h {
        let counts: Vec<HopCounts> = ok
            .iter()
            .map(|r| r.per_remaining_hop.get(h).copied().unwrap_or_default())
            .collect();
        if counts.iter().any(|c| c.attempts == 0) {
            continue;
        }
        fairness.insert(
            h,
            HopPoint {
                attempts: counts.iter().map(|c| c.attempts).sum(),
                drops: counts.iter().map(|c| c.drops).sum(),
                loss: ReplicationSummary::from_values(
                    counts.iter().map(|c| c.drops as f64 / c.attempts as f64).collect(),
                ),
            },
        );
    }
    let audit = ok.iter().fold(TimingAudit::default(), |a, r| add_audit(a, r.audit));
    PointSummary {
        offered: summary(&|r| r.offered as f64),
        delivered: summary(&|r| r.delivered as f64),
        loss_total: summary(&|r| r.loss_total),
        loss_burst: summary(&|r| r.loss_burst),
        loss_bcp: summary(&|r| r.loss_bcp),
        utilization: summary(&|r| r.utilization),
        utilization_wasted: summary(&|r| r.utilization_wasted),
        mean_delay_ps: summary(&|r| r.mean_delay_ps),
        key,
        replications: ok,
        failure,
        fairness,
        audit,
    }
}
