// Splits C-OBS loss on NSFNET into burst contention (no free data channel)
// and BCP contention (collision on the control wavelength).

use obs_sim::experiment::{run_scenario, Scenario, TopologySpec};
use obs_sim::Architecture;

pub fn run_example(bursts: u64) -> anyhow::Result<Vec<(f64, f64, f64)>> {
    let s = Scenario {
        name: "decomposition".into(),
        topologies: vec![TopologySpec::Nsfnet],
        architectures: vec![Architecture::COBS],
        loads: vec![0.2, 0.4, 0.6, 0.8],
        replications: 2,
        bursts_per_replication: bursts,
        ..Scenario::default()
    };
    let r = run_scenario(&s, 1)?;
    println!("load   burst-contention   BCP-contention");
    let mut out = Vec::new();
    for p in &r.points {
        println!(
            "{:.1}    {:.3e}          {:.3e}",
            p.key.load, p.loss_burst.mean, p.loss_bcp.mean
        );
        out.push((p.key.load, p.loss_burst.mean, p.loss_bcp.mean));
    }
    Ok(out)
}

fn main() -> anyhow::Result<()> {
    run_example(300_000)?;
    Ok(())
}
