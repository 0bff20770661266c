// Loss probability per reservation attempt, grouped by how many hops the
// burst still has to travel, for each architecture on the 6x6 torus.

use obs_sim::experiment::{run_scenario, Scenario, TopologySpec};

pub fn run_example(bursts: u64, load: f64) -> anyhow::Result<usize> {
    let s = Scenario {
        name: "fairness".into(),
        topologies: vec![TopologySpec::Torus { rows: 6, cols: 6 }],
        loads: vec![load],
        replications: 2,
        bursts_per_replication: bursts,
        ..Scenario::default()
    };
    let r = run_scenario(&s, 1)?;
    for p in &r.points {
        let curve: Vec<String> = p
            .fairness
            .iter()
            .map(|(h, hp)| format!("h{h}={:.2e}", hp.loss.mean))
            .collect();
        println!("{:<6} {}", p.key.arch, curve.join("  "));
    }
    Ok(r.points.iter().map(|p| p.fairness.len()).sum())
}

fn main() -> anyhow::Result<()> {
    run_example(500_000, 0.8)?;
    Ok(())
}
