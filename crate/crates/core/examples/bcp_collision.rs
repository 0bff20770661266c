// Control-wavelength contention at a merge node. A BCP collides when it
// starts while another is still being transmitted; collided BCPs are dropped
// without occupying the channel, so the loss fraction is rho / (1 + rho).

use obs_sim::architectures::bcp_merge_experiment;
use obs_sim::SimTime;

pub fn run_example(attempts: u64) -> Vec<(f64, f64)> {
    let d_bcp = SimTime::from_ns(10);
    let mut out = Vec::new();
    for rho in [0.01, 0.05, 0.1, 0.2] {
        let rate = rho / d_bcp.as_secs_f64();
        let r = bcp_merge_experiment(&[rate / 2.0, rate / 2.0], d_bcp, attempts, 5);
        println!(
            "rho={rho:<5} collided {:.5}  expected {:.5}",
            r.contention_fraction(),
            rho / (1.0 + rho)
        );
        out.push((rho, r.contention_fraction()));
    }
    out
}

fn main() {
    run_example(1_000_000);
}
