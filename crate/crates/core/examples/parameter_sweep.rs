// BCP-contention loss of C-OBS on NSFNET at load 0.5 as the wavelength
// count, mean burst length and control bit rate vary.

use obs_sim::experiment::{preset, run_scenario};

pub fn run_example(bursts: u64) -> anyhow::Result<usize> {
    let mut s = preset("fig4")?;
    s.loads = vec![0.5];
    s.replications = 2;
    s.bursts_per_replication = bursts;
    let r = run_scenario(&s, 1)?;
    println!(" W  burst(Mbit)  control     BCP loss");
    for p in &r.points {
        let v = p.key.variant;
        println!(
            "{:>2}  {:>11}  {:>7}M  {:.3e}",
            v.wavelengths,
            v.mean_burst_bits / 1_000_000,
            v.control_bit_rate / 1_000_000,
            p.loss_bcp.mean
        );
    }
    Ok(r.points.len())
}

fn main() -> anyhow::Result<()> {
    run_example(200_000)?;
    Ok(())
}
