// Describes a small ring with one long, narrow spur in the text topology
// format, runs E-OBS on it and writes the per-channel reservation log.

use obs_sim::network::{find_overlap, write_reservation_log};
use obs_sim::topology::{parse_topology, shortest_routes_with, RoutingPolicy};
use obs_sim::{run, Architecture, LinkDefaults, LoadSpec, Network, SimConfig};

const RING: &str = "
# node <id> [name]
node 0 north
node 1 east
node 2 south
node 3 west
node 4 hub
# link <a> <b> [delay_ps] [W] [CW]
link 0 1
link 1 2
link 2 3
link 3 0
link 0 4 5000000000 8 1
";

pub fn run_example(bursts: u64) -> anyhow::Result<usize> {
    let topo = parse_topology(RING, LinkDefaults::default())?;
    let routes = shortest_routes_with(&topo, RoutingPolicy::LowestNextHop)?;
    println!(
        "{} nodes, {} directed links, longest route {} hops",
        topo.node_count(),
        topo.directed_link_count(),
        routes.max_hops()
    );
    let net = Network {
        topology: topo.into(),
        routes: routes.into(),
    };
    let spec = LoadSpec {
        offered_load: 0.3,
        ..LoadSpec::default()
    };
    let mut cfg = SimConfig::new(Architecture::EOBS, spec, bursts, 2);
    cfg.record_reservations = true;
    let out = run(&net, &cfg)?;
    let loss = out.ledger.loss_probability().map_or(0.0, |l| l.total);
    println!(
        "loss {loss:.3e}, mean delay {:.3} ms",
        out.ledger.mean_delay().unwrap_or(0.0) / 1e9
    );
    anyhow::ensure!(find_overlap(&out.reservation_log).is_none(), "overlapping reservations");

    let mut csv = Vec::new();
    write_reservation_log(&out.reservation_log, &mut csv)?;
    for line in String::from_utf8(csv)?.lines().take(4) {
        println!("{line}");
    }
    Ok(out.reservation_log.len())
}

fn main() -> anyhow::Result<()> {
    run_example(50_000)?;
    Ok(())
}
