// How link wavelength-time divides into capacity used by delivered bursts,
// capacity reserved for bursts lost downstream, and idle capacity.

use obs_sim::{build_torus, run, Architecture, LinkDefaults, LoadSpec, Network, SimConfig};

pub fn run_example(bursts: u64) -> anyhow::Result<Vec<(Architecture, f64, f64)>> {
    let net = Network::new(build_torus(6, 6, LinkDefaults::default())?)?;
    let spec = LoadSpec {
        offered_load: 0.65,
        ..LoadSpec::default()
    };
    let mut out = Vec::new();
    for arch in Architecture::ALL {
        let r = run(&net, &SimConfig::new(arch, spec, bursts, 9))?;
        let u = r.ledger.utilization(&net.topology);
        println!(
            "{arch:<6} delivered {:.4}  wasted {:.2e}  idle {:.4}",
            u.delivered, u.wasted, u.idle
        );
        out.push((arch, u.delivered, u.wasted));
    }
    Ok(out)
}

fn main() -> anyhow::Result<()> {
    run_example(500_000)?;
    Ok(())
}
