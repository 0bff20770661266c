//! Result tables and their CSV form.

use std::path::Path;

use super::{ExperimentError, PointSummary, ScenarioResult};
use crate::metrics::ReplicationSummary;

pub const CSV_HEADER: [&str; 24] = [
    "scenario",
    "topology",
    "arch",
    "load",
    "W",
    "CW",
    "mean_burst_bits",
    "control_bit_rate",
    "seed",
    "offered",
    "delivered",
    "loss_total",
    "loss_burst",
    "loss_bcp",
    "utilization",
    "utilization_wasted",
    "mean_delay_ps",
    "ci_loss_total",
    "ci_loss_burst",
    "ci_loss_bcp",
    "ci_utilization",
    "ci_utilization_wasted",
    "ci_mean_delay_ps",
    "status",
];

pub const HOPS_HEADER: [&str; 13] = [
    "scenario",
    "topology",
    "arch",
    "load",
    "W",
    "CW",
    "mean_burst_bits",
    "control_bit_rate",
    "hops_remaining",
    "attempts",
    "drops",
    "loss",
    "ci_loss",
];

const UNITS: &str = "# units: load=Erlang per link normalized to W; loss_*=probability; \
utilization*=fraction of link wavelength-time; mean_delay_ps=picoseconds; \
ci_*=95% Student-t half-width; seed=* marks the mean over replications\n";

const HOPS_UNITS: &str = "# units: hops_remaining=links left to the egress when the reservation was attempted; \
loss=drops/attempts; ci_loss=95% Student-t half-width over replications\n";

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub topology: String,
    pub arch: String,
    pub load: f64,
    pub wavelengths: u32,
    pub control_wavelengths: u32,
    pub mean_burst_bits: u64,
    pub control_bit_rate: u64,
    /// `None` on aggregate rows.
    pub seed: Option<u64>,
    pub offered: f64,
    pub delivered: f64,
    pub loss_total: f64,
    pub loss_burst: f64,
    pub loss_bcp: f64,
    pub utilization: f64,
    pub utilization_wasted: f64,
    pub mean_delay_ps: f64,
    /// Half-widths in header order; empty on replication rows.
    pub ci: Option<[Option<f64>; 6]>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HopRow {
    pub scenario: String,
    pub topology: String,
    pub arch: String,
    pub load: f64,
    pub wavelengths: u32,
    pub control_wavelengths: u32,
    pub mean_burst_bits: u64,
    pub control_bit_rate: u64,
    pub hops_remaining: usize,
    pub attempts: u64,
    pub drops: u64,
    pub loss: f64,
    pub ci_loss: Option<f64>,
}

fn base_row(scenario: &str, p: &PointSummary) -> ResultRow {
    ResultRow {
        scenario: scenario.to_string(),
        topology: p.key.topology.clone(),
        arch: p.key.arch.to_string(),
        load: p.key.load,
        wavelengths: p.key.variant.wavelengths,
        control_wavelengths: p.key.variant.control_wavelengths,
        mean_burst_bits: p.key.variant.mean_burst_bits,
        control_bit_rate: p.key.variant.control_bit_rate,
        seed: None,
        offered: f64::NAN,
        delivered: f64::NAN,
        loss_total: f64::NAN,
        loss_burst: f64::NAN,
        loss_bcp: f64::NAN,
        utilization: f64::NAN,
        utilization_wasted: f64::NAN,
        mean_delay_ps: f64::NAN,
        ci: None,
        failure: p.failure.clone(),
    }
}

pub(super) fn result_rows(result: &ScenarioResult) -> Vec<ResultRow> {
    let name = &result.scenario.name;
    let mut rows = Vec::new();
    for p in &result.points {
        for r in &p.replications {
            rows.push(ResultRow {
                seed: Some(r.seed),
                offered: r.offered as f64,
                delivered: r.delivered as f64,
                loss_total: r.loss_total,
                loss_burst: r.loss_burst,
                loss_bcp: r.loss_bcp,
                utilization: r.utilization,
                utilization_wasted: r.utilization_wasted,
                mean_delay_ps: r.mean_delay_ps,
                failure: None,
                ..base_row(name, p)
            });
        }
        let hw = |s: &ReplicationSummary| s.half_width;
        rows.push(ResultRow {
            offered: p.offered.mean,
            delivered: p.delivered.mean,
            loss_total: p.loss_total.mean,
            loss_burst: p.loss_burst.mean,
            loss_bcp: p.loss_bcp.mean,
            utilization: p.utilization.mean,
            utilization_wasted: p.utilization_wasted.mean,
            mean_delay_ps: p.mean_delay_ps.mean,
            ci: Some([
                hw(&p.loss_total),
                hw(&p.loss_burst),
                hw(&p.loss_bcp),
                hw(&p.utilization),
                hw(&p.utilization_wasted),
                hw(&p.mean_delay_ps),
            ]),
            ..base_row(name, p)
        });
    }
    rows
}

pub(super) fn hop_rows(result: &ScenarioResult) -> Vec<HopRow> {
    let mut rows = Vec::new();
    for p in &result.points {
        for (&h, hp) in &p.fairness {
            rows.push(HopRow {
                scenario: result.scenario.name.clone(),
                topology: p.key.topology.clone(),
                arch: p.key.arch.to_string(),
                load: p.key.load,
                wavelengths: p.key.variant.wavelengths,
                control_wavelengths: p.key.variant.control_wavelengths,
                mean_burst_bits: p.key.variant.mean_burst_bits,
                control_bit_rate: p.key.variant.control_bit_rate,
                hops_remaining: h,
                attempts: hp.attempts,
                drops: hp.drops,
                loss: hp.loss.mean,
                ci_loss: hp.loss.half_width,
            });
        }
    }
    rows
}

fn prob(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.6e}")
    }
}

fn frac(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.6}")
    }
}

fn fixed1(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.1}")
    }
}

fn opt(x: Option<f64>, f: fn(f64) -> String) -> String {
    x.map(f).unwrap_or_default()
}

fn row_fields(r: &ResultRow) -> Vec<String> {
    let ci = r.ci.unwrap_or([None; 6]);
    let counts = |x: f64| if r.seed.is_some() { format!("{x:.0}") } else { fixed1(x) };
    vec![
        r.scenario.clone(),
        r.topology.clone(),
        r.arch.clone(),
        format!("{:.3}", r.load),
        r.wavelengths.to_string(),
        r.control_wavelengths.to_string(),
        r.mean_burst_bits.to_string(),
        r.control_bit_rate.to_string(),
        r.seed.map_or_else(|| "*".to_string(), |s| s.to_string()),
        counts(r.offered),
        counts(r.delivered),
        prob(r.loss_total),
        prob(r.loss_burst),
        prob(r.loss_bcp),
        frac(r.utilization),
        frac(r.utilization_wasted),
        fixed1(r.mean_delay_ps),
        opt(ci[0], prob),
        opt(ci[1], prob),
        opt(ci[2], prob),
        opt(ci[3], frac),
        opt(ci[4], frac),
        opt(ci[5], fixed1),
        match &r.failure {
            Some(m) => format!("failed: {m}"),
            None => "ok".to_string(),
        },
    ]
}

fn write_table(path: &Path, units: &str, header: &[&str], records: Vec<Vec<String>>) -> Result<(), ExperimentError> {
    if records.is_empty() {
        return Err(ExperimentError::EmptyRows);
    }
    let io_err = |e: &dyn std::fmt::Display| ExperimentError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(units.as_bytes().to_vec());
    w.write_record(header).map_err(|e| io_err(&e))?;
    for rec in records {
        w.write_record(&rec).map_err(|e| io_err(&e))?;
    }
    let bytes = w.into_inner().map_err(|e| io_err(&e))?;
    std::fs::write(path, bytes).map_err(|e| io_err(&e))
}

/// Writes `rows` with a units comment line and header. Fails without touching
/// the file system when `rows` is empty.
pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<(), ExperimentError> {
    write_table(path, UNITS, &CSV_HEADER, rows.iter().map(row_fields).collect())
}

pub fn emit_hops_csv(rows: &[HopRow], path: &Path) -> Result<(), ExperimentError> {
    let records = rows
        .iter()
        .map(|r| {
            vec![
                r.scenario.clone(),
                r.topology.clone(),
                r.arch.clone(),
                format!("{:.3}", r.load),
                r.wavelengths.to_string(),
                r.control_wavelengths.to_string(),
                r.mean_burst_bits.to_string(),
                r.control_bit_rate.to_string(),
                r.hops_remaining.to_string(),
                r.attempts.to_string(),
                r.drops.to_string(),
                prob(r.loss),
                opt(r.ci_loss, prob),
            ]
        })
        .collect();
    write_table(path, HOPS_UNITS, &HOPS_HEADER, records)
}
