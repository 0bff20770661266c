// A two-node L-OBS network is a pair of independent loss systems: with no
// control channel and identical offsets, each direction blocks like M/M/k/k.

use obs_sim::metrics::erlang_b;
use obs_sim::topology::{from_edges, LinkDefaults};
use obs_sim::{run, Architecture, LoadSpec, Network, SimConfig};

pub fn run_example(bursts: u64) -> anyhow::Result<Vec<(u32, f64, f64, f64)>> {
    let mut rows = Vec::new();
    for w in [4u32, 8] {
        let defaults = LinkDefaults {
            wavelengths: w,
            control_wavelengths: 0,
            ..LinkDefaults::default()
        };
        let net = Network::new(from_edges("pair", 2, &[(0, 1)], defaults)?)?;
        for load in [0.3, 0.5, 0.7] {
            let spec = LoadSpec {
                offered_load: load,
                wavelengths: w,
                ..LoadSpec::default()
            };
            let out = run(&net, &SimConfig::new(Architecture::LOBS, spec, bursts, 3))?;
            let measured = out.ledger.loss_probability().map_or(0.0, |l| l.total);
            let expected = erlang_b(w, load * w as f64);
            println!("W={w:<2} load={load:.1}  measured {measured:.5}  Erlang-B {expected:.5}");
            rows.push((w, load, measured, expected));
        }
    }
    Ok(rows)
}

fn main() -> anyhow::Result<()> {
    run_example(500_000)?;
    Ok(())
}
