//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test --release --test acceptance`. Criteria 3, 5 and 9
//! share one quick-scale sweep over both topologies; 4, 6, 7 and 8 use the
//! default scale of 10^6 bursts x 5 replications.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use obs_sim::architectures::bcp_merge_experiment;
use obs_sim::experiment::{preset, run_scenario, ParamVariant, PointSummary, Scenario, ScenarioResult, TopologySpec};
use obs_sim::metrics::{erlang_b, ReplicationSummary};
use obs_sim::network::{self, Network, SimConfig};
use obs_sim::scheduler::{ChannelBook, HorizonBook, VoidBook};
use obs_sim::topology::{from_edges, LinkDefaults};
use obs_sim::traffic::LoadSpec;
use obs_sim::{Architecture, SimTime};

use Architecture::{COBS, EOBS, LOBS};

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{} [{id:>2}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        let _ = std::io::stdout().flush();
    }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn ci(s: &ReplicationSummary) -> String {
    format!("{:.3e} ± {:.1e}", s.mean, s.half_width.unwrap_or(f64::NAN))
}

fn erlang_b_oracle(report: &mut Report) {
    let t0 = Instant::now();
    let defaults = LinkDefaults {
        wavelengths: 4,
        control_wavelengths: 0,
        ..LinkDefaults::default()
    };
    let topo = from_edges("pair", 2, &[(0, 1)], defaults).expect("two-node topology");
    let net = Network::new(topo).expect("routes");
    let load = LoadSpec {
        offered_load: 0.5,
        wavelengths: 4,
        ..LoadSpec::default()
    };
    let cfg = SimConfig::new(LOBS, load, 1_000_000, 11);
    let out = network::run(&net, &cfg).expect("run");
    let measured = out.ledger.loss_probability().expect("offered bursts").total;
    let expected = erlang_b(4, 2.0);
    let elapsed = t0.elapsed();
    report.line(
        1,
        "Erlang-B oracle",
        (measured - expected).abs() <= 0.005 && elapsed <= Duration::from_secs(60),
        format!("loss {measured:.5} vs Erlang-B(4, 2) = {expected:.5} (±0.005), {elapsed:.1?}"),
    );
}

fn bcp_collision_oracle(report: &mut Report) {
    let t0 = Instant::now();
    let d_bcp = SimTime::from_ns(10);
    let rho = 0.1;
    let rate = rho / d_bcp.as_secs_f64();
    let r = bcp_merge_experiment(&[rate / 2.0, rate / 2.0], d_bcp, 1_000_000, 12);
    let measured = r.contention_fraction();
    let expected = rho / (1.0 + rho);
    let elapsed = t0.elapsed();
    report.line(
        2,
        "BCP-collision oracle",
        (measured - expected).abs() <= 0.003 && elapsed <= Duration::from_secs(60),
        format!("contention {measured:.5} vs rho/(1+rho) = {expected:.5} (±0.003), {elapsed:.1?}"),
    );
}

fn get<'a>(r: &'a ScenarioResult, topo: &str, arch: Architecture, load: f64) -> &'a PointSummary {
    r.point(topo, arch, load)
        .unwrap_or_else(|| panic!("missing point {topo} {arch} {load}"))
}

fn architecture_ordering(report: &mut Report, grid: &ScenarioResult, elapsed: Duration) {
    let mut pass = elapsed <= Duration::from_secs(15 * 60);
    let mut detail = Vec::new();
    for topo in ["nsfnet", "torus6x6"] {
        for load in [0.5, 0.65, 0.8] {
            let l = &get(grid, topo, LOBS, load).loss_total;
            let e = &get(grid, topo, EOBS, load).loss_total;
            let c = &get(grid, topo, COBS, load).loss_total;
            let le = l.strictly_below(e);
            let ec = e.strictly_below(c);
            pass &= le && ec;
            detail.push(format!(
                "{topo}@{load}: L {} E {} C {} [L<E {} E<C {}]",
                ci(l),
                ci(e),
                ci(c),
                if le { "ok" } else { "no" },
                if ec { "ok" } else { "no" }
            ));
        }
    }
    report.line(
        3,
        "architecture ordering L < E < C",
        pass,
        format!("grid {elapsed:.0?}; {}", detail.join("; ")),
    );
}

/// Load at which burst-contention loss first reaches BCP-contention loss,
/// interpolated linearly on the difference between the two.
fn crossover(points: &[(f64, f64, f64)]) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (l0, b0, c0) = w[0];
        let (l1, b1, c1) = w[1];
        let (d0, d1) = (b0 - c0, b1 - c1);
        (d0 < 0.0 && d1 >= 0.0).then(|| l0 + (l1 - l0) * (-d0) / (d1 - d0))
    })
}

fn decomposition_crossover(report: &mut Report) {
    let loads = vec![0.2, 0.3, 0.4, 0.5, 0.6];
    let s = Scenario {
        name: "crossover".into(),
        topologies: vec![TopologySpec::Nsfnet],
        architectures: vec![COBS, EOBS],
        loads: loads.clone(),
        ..Scenario::default()
    };
    let r = run_scenario(&s, jobs()).expect("crossover sweep");
    let mut pass = true;
    let mut detail = Vec::new();
    for arch in [COBS, EOBS] {
        let pts: Vec<(f64, f64, f64)> = loads
            .iter()
            .map(|&l| {
                let p = get(&r, "nsfnet", arch, l);
                (l, p.loss_burst.mean, p.loss_bcp.mean)
            })
            .collect();
        let (_, b02, c02) = pts[0];
        let (_, b06, c06) = pts[4];
        let x = crossover(&pts);
        let ok = c02 > b02 && b06 > c06 && x.is_some_and(|x| (0.3..=0.5).contains(&x));
        pass &= ok;
        detail.push(format!(
            "{arch}: @0.2 bcp {c02:.2e} > burst {b02:.2e} {}; @0.6 burst {b06:.2e} > bcp {c06:.2e} {}; crossover {}",
            c02 > b02,
            b06 > c06,
            x.map_or("none".into(), |x| format!("{x:.3}"))
        ));
    }
    report.line(4, "loss decomposition crossover in [0.3, 0.5]", pass, detail.join("; "));
}

fn bcp_coincidence(report: &mut Report, grid: &ScenarioResult) {
    let mut checked = 0;
    let mut bad = Vec::new();
    for p in grid.points.iter().filter(|p| p.key.arch == COBS) {
        let e = get(grid, &p.key.topology, EOBS, p.key.load);
        checked += 1;
        if !p.loss_bcp.overlaps(&e.loss_bcp) {
            bad.push(format!(
                "{}@{}: C {} E {}",
                p.key.topology,
                p.key.load,
                ci(&p.loss_bcp),
                ci(&e.loss_bcp)
            ));
        }
    }
    report.line(
        5,
        "C-OBS/E-OBS BCP loss coincide",
        bad.is_empty() && checked > 0,
        if bad.is_empty() {
            format!("{checked} loads x topologies overlap")
        } else {
            bad.join("; ")
        },
    );
}

fn parameter_directions(report: &mut Report) {
    let s = Scenario {
        loads: vec![0.5],
        ..preset("fig4").expect("preset")
    };
    let r = run_scenario(&s, jobs()).expect("fig4 sweep");
    let base = ParamVariant::default();
    let at = |v: ParamVariant| {
        r.point_with("nsfnet", COBS, 0.5, v)
            .expect("variant present")
            .loss_bcp
            .clone()
    };
    let b = at(base);
    let w16 = at(ParamVariant {
        wavelengths: 16,
        ..base
    });
    let long = at(ParamVariant {
        mean_burst_bits: 5_000_000,
        ..base
    });
    let slow = at(ParamVariant {
        control_bit_rate: 622_000_000,
        ..base
    });
    let w = w16.strictly_below(&b);
    let l = long.strictly_below(&b);
    let c = b.strictly_below(&slow);
    report.line(
        6,
        "BCP loss vs W, burst length, control rate",
        w && l && c,
        format!(
            "base {}; W=16 {} (lower: {w}); 5 Mbit {} (lower: {l}); 622 Mbps {} (higher: {c})",
            ci(&b),
            ci(&w16),
            ci(&long),
            ci(&slow)
        ),
    );
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn fairness_and_utilization(report: &mut Report, grid: &ScenarioResult) {
    let s = Scenario {
        name: "torus065".into(),
        topologies: vec![TopologySpec::Torus { rows: 6, cols: 6 }],
        loads: vec![0.65],
        ..Scenario::default()
    };
    let r = run_scenario(&s, jobs()).expect("torus sweep");
    let curve = |arch| &get(&r, "torus6x6", arch, 0.65).fairness;

    let c = curve(COBS);
    let hs: Vec<f64> = c.keys().map(|&h| h as f64).collect();
    let ls: Vec<f64> = c.values().map(|p| p.loss.mean).collect();
    let rho = spearman(&hs, &ls);
    let flat = |arch| {
        let f = curve(arch);
        let max_lower = f.values().map(|p| p.loss.lower()).fold(f64::NEG_INFINITY, f64::max);
        let min_upper = f.values().map(|p| p.loss.upper()).fold(f64::INFINITY, f64::min);
        (f.len() >= 2 && max_lower <= min_upper, f)
    };
    let (e_flat, e) = flat(EOBS);
    let (l_flat, l) = flat(LOBS);
    let lobs_bcp: u64 = r
        .points
        .iter()
        .chain(&grid.points)
        .filter(|p| p.key.arch == LOBS)
        .flat_map(|p| &p.replications)
        .map(|m| m.lost_bcp)
        .sum();
    let show = |f: &BTreeMap<usize, obs_sim::experiment::HopPoint>| {
        f.iter()
            .map(|(h, p)| format!("h{h} {}", ci(&p.loss)))
            .collect::<Vec<_>>()
            .join(", ")
    };
    report.line(
        7,
        "fairness by remaining hops",
        rho < -0.9 && e_flat && l_flat && lobs_bcp == 0,
        format!(
            "C-OBS spearman {rho:.3} [{}]; E-OBS flat {e_flat} [{}]; L-OBS flat {l_flat} [{}]; L-OBS BCP losses {lobs_bcp}",
            show(c),
            show(e),
            show(l)
        ),
    );

    let u = |arch| get(&r, "torus6x6", arch, 0.65).utilization.clone();
    let (ul, ue, uc) = (u(LOBS), u(EOBS), u(COBS));
    let fmt = |s: &ReplicationSummary| format!("{:.5} ± {:.1e}", s.mean, s.half_width.unwrap_or(f64::NAN));
    report.line(
        8,
        "utilization ordering L > E > C",
        ue.strictly_below(&ul) && uc.strictly_below(&ue),
        format!("L {} E {} C {}", fmt(&ul), fmt(&ue), fmt(&uc)),
    );
}

fn deterministic_timing(report: &mut Report, grid: &ScenarioResult) {
    let a = grid.total_audit();
    report.line(
        9,
        "deterministic timing",
        a.violations() == 0 && a.delay_checks > 0 && a.offset_checks > 0,
        format!(
            "{} delay checks, {} C-OBS offset checks, {} E-OBS offset checks, {} violations",
            a.delay_checks,
            a.offset_checks,
            a.fixed_offset_checks,
            a.violations()
        ),
    );
}

fn scheduler_equivalence(report: &mut Report) {
    let torus = obs_sim::build_torus(6, 6, LinkDefaults::default()).expect("torus");
    let net = Network::new(torus).expect("routes");
    let mut total = 0usize;
    let mut mismatches = 0usize;
    for arch in [EOBS, LOBS] {
        let load = LoadSpec {
            offered_load: 0.8,
            ..LoadSpec::default()
        };
        let mut cfg = SimConfig::new(arch, load, 40_000, 21);
        cfg.record_requests = true;
        let out = network::run(&net, &cfg).expect("run");
        let channels = |link| cfg.params.data_channels(net.topology.link(link)) as usize;
        let mut books: BTreeMap<usize, (ChannelBook, ChannelBook)> = BTreeMap::new();
        for rec in &out.request_trace {
            let (h, v) = books.entry(rec.link.0).or_insert_with(|| {
                let n = channels(rec.link);
                (
                    ChannelBook::Horizon(HorizonBook::new(n)),
                    ChannelBook::Void(VoidBook::new(n)),
                )
            });
            total += 1;
            if h.reserve(&rec.request, rec.submitted_at) != v.reserve(&rec.request, rec.submitted_at) {
                mismatches += 1;
            }
        }
    }
    report.line(
        10,
        "Horizon/LAUC equals Void/LAUC-VF on E/L traces",
        mismatches == 0 && total >= 100_000,
        format!("{total} requests replayed, {mismatches} differing decisions"),
    );
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    erlang_b_oracle(&mut report);
    bcp_collision_oracle(&mut report);

    let mut grid_scenario = preset("fig2").expect("preset").quick();
    grid_scenario.loads = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.65, 0.7, 0.8, 0.9];
    let t0 = Instant::now();
    let grid = run_scenario(&grid_scenario, jobs()).expect("fig2 grid");
    let grid_time = t0.elapsed();
    architecture_ordering(&mut report, &grid, grid_time);
    decomposition_crossover(&mut report);
    bcp_coincidence(&mut report, &grid);
    parameter_directions(&mut report);
    fairness_and_utilization(&mut report, &grid);
    deterministic_timing(&mut report, &grid);
    scheduler_equivalence(&mut report);

    println!("{} of 10 criteria failed", report.failures);
    if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
