// Replays recorded reservation requests through both channel books. With a
// fixed offset (E-OBS, L-OBS) requests reach each link in start order, so the
// horizon book and the void-filling book make the same decisions; with
// path-dependent offsets (C-OBS) the two books diverge.

use std::collections::BTreeMap;

use obs_sim::scheduler::{ChannelBook, HorizonBook, VoidBook};
use obs_sim::{build_torus, run, Architecture, LinkDefaults, LoadSpec, Network, SimConfig};

pub fn run_example(bursts: u64) -> anyhow::Result<Vec<(Architecture, usize, usize)>> {
    let net = Network::new(build_torus(6, 6, LinkDefaults::default())?)?;
    let spec = LoadSpec {
        offered_load: 0.8,
        ..LoadSpec::default()
    };
    let mut out = Vec::new();
    for arch in Architecture::ALL {
        let mut cfg = SimConfig::new(arch, spec, bursts, 4);
        cfg.record_requests = true;
        let trace = run(&net, &cfg)?.request_trace;
        let mut books = BTreeMap::new();
        let mut differ = 0;
        for rec in &trace {
            let n = cfg.params.data_channels(net.topology.link(rec.link)) as usize;
            let (h, v) = books.entry(rec.link).or_insert_with(|| {
                (
                    ChannelBook::Horizon(HorizonBook::new(n)),
                    ChannelBook::Void(VoidBook::new(n)),
                )
            });
            if h.reserve(&rec.request, rec.submitted_at) != v.reserve(&rec.request, rec.submitted_at) {
                differ += 1;
            }
        }
        println!("{arch:<6} {} requests, {differ} decisions differ", trace.len());
        out.push((arch, trace.len(), differ));
    }
    Ok(out)
}

fn main() -> anyhow::Result<()> {
    run_example(100_000)?;
    Ok(())
}
