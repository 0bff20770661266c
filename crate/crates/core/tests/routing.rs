use std::collections::VecDeque;

use obs_sim::topology::{
    build_nsfnet, build_torus, shortest_routes_with, LinkDefaults, NodeId, RoutingPolicy, Topology,
};

fn bfs(topo: &Topology, from: NodeId) -> Vec<usize> {
    let mut dist = vec![usize::MAX; topo.node_count()];
    dist[from.0] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for &l in topo.out_links(u) {
            let v = topo.link(l).to;
            if dist[v.0] == usize::MAX {
                dist[v.0] = dist[u.0] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

fn topologies() -> Vec<Topology> {
    vec![
        build_nsfnet(LinkDefaults::default()),
        build_torus(6, 6, LinkDefaults::default()).unwrap(),
        build_torus(3, 3, LinkDefaults::default()).unwrap(),
        build_torus(4, 7, LinkDefaults::default()).unwrap(),
    ]
}

const POLICIES: [RoutingPolicy; 2] = [RoutingPolicy::Balanced, RoutingPolicy::LowestNextHop];

#[test]
fn routes_are_shortest_and_well_formed() {
    for topo in topologies() {
        for policy in POLICIES {
            let table = shortest_routes_with(&topo, policy).unwrap();
            for s in topo.nodes() {
                let dist = bfs(&topo, s);
                for d in topo.nodes().filter(|&d| d != s) {
                    let r = table.route(s, d);
                    assert_eq!(r.hop_count(), dist[d.0], "{} {policy} {s:?}->{d:?}", topo.name());
                    assert_eq!(r.nodes.first(), Some(&s));
                    assert_eq!(r.nodes.last(), Some(&d));
                    for (i, &l) in r.links.iter().enumerate() {
                        let link = topo.link(l);
                        assert_eq!((link.from, link.to), (r.nodes[i], r.nodes[i + 1]));
                    }
                }
            }
        }
    }
}

#[test]
fn torus_distances_are_symmetric_and_metric() {
    let topo = build_torus(3, 3, LinkDefaults::default()).unwrap();
    let t = shortest_routes_with(&topo, RoutingPolicy::Balanced).unwrap();
    let hop = |a: usize, b: usize| {
        if a == b {
            0
        } else {
            t.route(NodeId(a), NodeId(b)).hop_count()
        }
    };
    let n = topo.node_count();
    for a in 0..n {
        for b in 0..n {
            assert_eq!(hop(a, b), hop(b, a));
            for m in 0..n {
                assert!(hop(a, b) <= hop(a, m) + hop(m, b));
            }
        }
    }
}

#[test]
fn construction_is_deterministic() {
    for policy in POLICIES {
        for topo in topologies() {
            let a = shortest_routes_with(&topo, policy).unwrap();
            let b = shortest_routes_with(&topo, policy).unwrap();
            assert!(a.iter().eq(b.iter()));
        }
    }
}

#[test]
fn balanced_routing_spreads_torus_load() {
    let topo = build_torus(6, 6, LinkDefaults::default()).unwrap();
    let usage = |policy| {
        let t = shortest_routes_with(&topo, policy).unwrap();
        let mut per_link = vec![0usize; topo.directed_link_count()];
        for r in t.iter() {
            for l in &r.links {
                per_link[l.0] += 1;
            }
        }
        (*per_link.iter().min().unwrap(), *per_link.iter().max().unwrap())
    };
    let (lo, hi) = usage(RoutingPolicy::Balanced);
    assert!(hi - lo <= 4, "{lo}..{hi}");
    let (lo, hi) = usage(RoutingPolicy::LowestNextHop);
    assert!(hi - lo > 20, "{lo}..{hi}");
}
