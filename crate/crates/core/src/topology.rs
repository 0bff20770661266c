//! Network graphs and hop-count shortest-path routing.
//!
//! Every bidirectional link becomes two [`DirectedLink`]s with identical
//! parameters. Routes are computed once per topology by breadth-first
//! search and are immutable afterwards.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::kernel::SimTime;

const NSFNET_DATA: &str = include_str!("../data/nsfnet.topo");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("torus dimensions must be at least 2x2, got {rows}x{cols}")]
    TorusTooSmall { rows: usize, cols: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid wavelength split W={wavelengths}, CW={control}")]
    Wavelengths { wavelengths: u32, control: u32 },
    #[error("topology has fewer than two nodes")]
    TooSmall,
    #[error("node {to} is unreachable from node {from}")]
    Unreachable { from: NodeId, to: NodeId },
    #[error("cannot read topology file: {0}")]
    Io(String),
}

/// Parameters shared by every link unless a topology file overrides them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkDefaults {
    pub wavelengths: u32,
    pub control_wavelengths: u32,
    pub bit_rate: u64,
    pub propagation_delay: SimTime,
}

impl Default for LinkDefaults {
    fn default() -> Self {
        LinkDefaults {
            wavelengths: 32,
            control_wavelengths: 1,
            bit_rate: 10_000_000_000,
            propagation_delay: SimTime::from_ms(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectedLink {
    pub from: NodeId,
    pub to: NodeId,
    pub wavelength_count: u32,
    pub control_wavelengths: u32,
    pub bit_rate: u64,
    pub propagation_delay: SimTime,
}

#[derive(Clone, Debug)]
pub struct Topology {
    name: String,
    node_names: Vec<Option<String>>,
    links: Vec<DirectedLink>,
    out_links: Vec<Vec<LinkId>>,
}

impl Topology {
    fn with_nodes(name: impl Into<String>, nodes: usize) -> Self {
        Topology {
            name: name.into(),
            node_names: vec![None; nodes],
            links: Vec::new(),
            out_links: vec![Vec::new(); nodes],
        }
    }

    fn add_bidirectional(
        &mut self,
        a: NodeId,
        b: NodeId,
        wavelengths: u32,
        control: u32,
        bit_rate: u64,
        delay: SimTime,
    ) -> Result<(), TopologyError> {
        if wavelengths == 0 || control >= wavelengths {
            return Err(TopologyError::Wavelengths { wavelengths, control });
        }
        for (from, to) in [(a, b), (b, a)] {
            let id = LinkId(self.links.len());
            self.links.push(DirectedLink {
                from,
                to,
                wavelength_count: wavelengths,
                control_wavelengths: control,
                bit_rate,
                propagation_delay: delay,
            });
            self.out_links[from.0].push(id);
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId)
    }

    pub fn node_name(&self, node: NodeId) -> Option<&str> {
        self.node_names[node.0].as_deref()
    }

    pub fn links(&self) -> &[DirectedLink] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &DirectedLink {
        &self.links[id.0]
    }

    pub fn directed_link_count(&self) -> usize {
        self.links.len()
    }

    pub fn bidirectional_link_count(&self) -> usize {
        self.links.len() / 2
    }

    pub fn out_links(&self, node: NodeId) -> &[LinkId] {
        &self.out_links[node.0]
    }

    pub fn out_degree(&self, node: NodeId) -> usize {
        self.out_links[node.0].len()
    }

    pub fn in_degree(&self, node: NodeId) -> usize {
        self.links.iter().filter(|l| l.to == node).count()
    }

    /// Overwrites the wavelength split on every link.
    pub fn set_wavelengths(&mut self, wavelengths: u32, control: u32) -> Result<(), TopologyError> {
        if wavelengths == 0 || control >= wavelengths {
            return Err(TopologyError::Wavelengths { wavelengths, control });
        }
        for link in &mut self.links {
            link.wavelength_count = wavelengths;
            link.control_wavelengths = control;
        }
        Ok(())
    }

    pub fn set_bit_rate(&mut self, bit_rate: u64) {
        for link in &mut self.links {
            link.bit_rate = bit_rate;
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.node_count() == 0 {
            return true;
        }
        let dist = self.bfs_from(NodeId(0));
        dist.iter().all(Option::is_some)
    }

    fn bfs_from(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        dist[source.0] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u.0].unwrap();
            for &l in self.out_links(u) {
                let v = self.links[l.0].to;
                if dist[v.0].is_none() {
                    dist[v.0] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Hop distances from every node to `destination`.
    fn distances_to(&self, destination: NodeId) -> Vec<Option<usize>> {
        let mut in_links: Vec<Vec<NodeId>> = vec![Vec::new(); self.node_count()];
        for l in &self.links {
            in_links[l.to.0].push(l.from);
        }
        let mut dist = vec![None; self.node_count()];
        dist[destination.0] = Some(0);
        let mut queue = VecDeque::from([destination]);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v.0].unwrap();
            for &u in &in_links[v.0] {
                if dist[u.0].is_none() {
                    dist[u.0] = Some(dv + 1);
                    queue.push_back(u);
                }
            }
        }
        dist
    }
}

/// `rows x cols` torus with wrap-around links in both dimensions.
///
/// Node `(r, c)` has index `r * cols + c`. Each node links to its right and
/// lower neighbour, so there are always `2 * rows * cols` bidirectional links;
/// a dimension of size 2 therefore yields parallel links.
pub fn build_torus(rows: usize, cols: usize, defaults: LinkDefaults) -> Result<Topology, TopologyError> {
    if rows < 2 || cols < 2 {
        return Err(TopologyError::TorusTooSmall { rows, cols });
    }
    let mut topo = Topology::with_nodes(format!("torus{rows}x{cols}"), rows * cols);
    let idx = |r: usize, c: usize| NodeId(r * cols + c);
    for r in 0..rows {
        for c in 0..cols {
            topo.add_bidirectional(
                idx(r, c),
                idx(r, (c + 1) % cols),
                defaults.wavelengths,
                defaults.control_wavelengths,
                defaults.bit_rate,
                defaults.propagation_delay,
            )?;
            topo.add_bidirectional(
                idx(r, c),
                idx((r + 1) % rows, c),
                defaults.wavelengths,
                defaults.control_wavelengths,
                defaults.bit_rate,
                defaults.propagation_delay,
            )?;
        }
    }
    Ok(topo)
}

/// The 14-node, 21-link NSFNET shipped in `data/nsfnet.topo`.
pub fn build_nsfnet(defaults: LinkDefaults) -> Topology {
    let mut topo = parse_topology(NSFNET_DATA, defaults).expect("bundled NSFNET data is valid");
    topo.name = "nsfnet".into();
    topo
}

/// Builds a topology from a list of bidirectional links on `nodes` nodes.
pub fn from_edges(
    name: &str,
    nodes: usize,
    edges: &[(usize, usize)],
    defaults: LinkDefaults,
) -> Result<Topology, TopologyError> {
    let mut topo = Topology::with_nodes(name, nodes);
    for &(a, b) in edges {
        if a >= nodes || b >= nodes {
            return Err(TopologyError::Parse {
                line: 0,
                message: format!("edge {a}-{b} references a node outside 0..{nodes}"),
            });
        }
        topo.add_bidirectional(
            NodeId(a),
            NodeId(b),
            defaults.wavelengths,
            defaults.control_wavelengths,
            defaults.bit_rate,
            defaults.propagation_delay,
        )?;
    }
    Ok(topo)
}

pub fn load_topology_file(path: &Path, defaults: LinkDefaults) -> Result<Topology, TopologyError> {
    let text = std::fs::read_to_string(path).map_err(|e| TopologyError::Io(format!("{}: {e}", path.display())))?;
    let mut topo = parse_topology(&text, defaults)?;
    if let Some(stem) = path.file_stem() {
        topo.name = stem.to_string_lossy().into_owned();
    }
    Ok(topo)
}

/// Parses the line-oriented topology format:
///
/// ```text
/// node <id> [name]
/// link <a> <b> [delay_ps] [W] [CW]
/// ```
///
/// `#` starts a comment. Node ids must be dense; the node count is one more
/// than the largest id mentioned.
pub fn parse_topology(text: &str, defaults: LinkDefaults) -> Result<Topology, TopologyError> {
    struct LinkRecord {
        a: usize,
        b: usize,
        delay: SimTime,
        wavelengths: u32,
        control: u32,
    }
    let mut names: Vec<(usize, String)> = Vec::new();
    let mut records = Vec::new();
    let mut max_id: Option<usize> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let err = |message: String| TopologyError::Parse { line: line_no, message };
        let num = |s: &str, what: &str| -> Result<u64, TopologyError> {
            s.parse::<u64>()
                .map_err(|_| err(format!("{what} must be a non-negative integer, got `{s}`")))
        };
        match fields[0] {
            "node" => {
                if fields.len() < 2 || fields.len() > 3 {
                    return Err(err("expected `node <id> [name]`".into()));
                }
                let id = num(fields[1], "node id")? as usize;
                max_id = Some(max_id.map_or(id, |m| m.max(id)));
                if let Some(name) = fields.get(2) {
                    names.push((id, name.to_string()));
                }
            }
            "link" => {
                if fields.len() < 3 || fields.len() > 6 {
                    return Err(err("expected `link <a> <b> [delay_ps] [W] [CW]`".into()));
                }
                let a = num(fields[1], "node id")? as usize;
                let b = num(fields[2], "node id")? as usize;
                if a == b {
                    return Err(err(format!("self-loop on node {a}")));
                }
                let delay = match fields.get(3) {
                    Some(s) => SimTime(num(s, "delay_ps")?),
                    None => defaults.propagation_delay,
                };
                let wavelengths = match fields.get(4) {
                    Some(s) => num(s, "W")? as u32,
                    None => defaults.wavelengths,
                };
                let control = match fields.get(5) {
                    Some(s) => num(s, "CW")? as u32,
                    None => defaults.control_wavelengths,
                };
                max_id = Some(max_id.map_or(a.max(b), |m| m.max(a).max(b)));
                records.push(LinkRecord {
                    a,
                    b,
                    delay,
                    wavelengths,
                    control,
                });
            }
            other => return Err(err(format!("unknown record `{other}`"))),
        }
    }

    let nodes = max_id.map_or(0, |m| m + 1);
    if nodes < 2 {
        return Err(TopologyError::TooSmall);
    }
    let mut topo = Topology::with_nodes("custom", nodes);
    for (id, name) in names {
        topo.node_names[id] = Some(name);
    }
    for r in records {
        topo.add_bidirectional(
            NodeId(r.a),
            NodeId(r.b),
            r.wavelengths,
            r.control,
            defaults.bit_rate,
            r.delay,
        )?;
    }
    Ok(topo)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Route {
    pub source: NodeId,
    pub destination: NodeId,
    /// Nodes visited, source first, destination last.
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
}

impl Route {
    pub fn hop_count(&self) -> usize {
        self.links.len()
    }

    pub fn propagation(&self, topology: &Topology) -> SimTime {
        self.links
            .iter()
            .fold(SimTime::ZERO, |acc, &l| acc + topology.link(l).propagation_delay)
    }
}

/// One route per ordered node pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteTable {
    nodes: usize,
    routes: Vec<Option<Route>>,
}

impl RouteTable {
    pub fn get(&self, source: NodeId, destination: NodeId) -> Option<&Route> {
        self.routes[source.0 * self.nodes + destination.0].as_ref()
    }

    pub fn route(&self, source: NodeId, destination: NodeId) -> &Route {
        self.get(source, destination)
            .unwrap_or_else(|| panic!("no route {source} -> {destination}"))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Route> {
        self.routes.iter().flatten()
    }

    pub fn max_hops(&self) -> usize {
        self.iter().map(Route::hop_count).max().unwrap_or(0)
    }

    pub fn mean_hops(&self) -> f64 {
        let (sum, n) = self
            .iter()
            .fold((0usize, 0usize), |(s, n), r| (s + r.hop_count(), n + 1));
        sum as f64 / n.max(1) as f64
    }
}

/// How ties between equal-length paths are broken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RoutingPolicy {
    /// At each step take the lowest-numbered neighbour one hop closer to the
    /// destination (lowest link id among parallel links).
    LowestNextHop,
    /// Among all shortest paths take the one crossing the least-used links so
    /// far, ties by lowest next hop; then reroute every pair a few times
    /// against the final usage.
    #[default]
    Balanced,
}

impl std::str::FromStr for RoutingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "balanced" => Ok(RoutingPolicy::Balanced),
            "lowest-next-hop" => Ok(RoutingPolicy::LowestNextHop),
            other => Err(format!(
                "unknown routing policy `{other}` (expected balanced or lowest-next-hop)"
            )),
        }
    }
}

impl fmt::Display for RoutingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoutingPolicy::Balanced => "balanced",
            RoutingPolicy::LowestNextHop => "lowest-next-hop",
        })
    }
}

const REROUTE_PASSES: usize = 4;

/// Hop-count shortest paths for every ordered pair, with balanced tie-breaking.
pub fn shortest_routes(topology: &Topology) -> Result<RouteTable, TopologyError> {
    shortest_routes_with(topology, RoutingPolicy::Balanced)
}

pub fn shortest_routes_with(topology: &Topology, policy: RoutingPolicy) -> Result<RouteTable, TopologyError> {
    let n = topology.node_count();
    if n < 2 {
        return Err(TopologyError::TooSmall);
    }
    let dists: Vec<Vec<Option<usize>>> = topology.nodes().map(|d| topology.distances_to(d)).collect();
    for d in topology.nodes() {
        for s in topology.nodes() {
            if dists[d.0][s.0].is_none() {
                return Err(TopologyError::Unreachable { from: s, to: d });
            }
        }
    }
    let pairs: Vec<(NodeId, NodeId)> = topology
        .nodes()
        .flat_map(|d| topology.nodes().filter(move |&s| s != d).map(move |s| (s, d)))
        .collect();

    let mut routes: Vec<Option<Route>> = vec![None; n * n];
    let mut usage = vec![0u64; topology.directed_link_count()];
    let passes = match policy {
        RoutingPolicy::LowestNextHop => 1,
        RoutingPolicy::Balanced => 1 + REROUTE_PASSES,
    };
    for _ in 0..passes {
        for &(s, d) in &pairs {
            let slot = &mut routes[s.0 * n + d.0];
            if let Some(old) = slot.take() {
                for l in &old.links {
                    usage[l.0] -= 1;
                }
            }
            let costs: &[u64] = match policy {
                RoutingPolicy::LowestNextHop => &[],
                RoutingPolicy::Balanced => &usage,
            };
            let route = cheapest_shortest_path(topology, &dists[d.0], costs, s, d);
            for l in &route.links {
                usage[l.0] += 1;
            }
            *slot = Some(route);
        }
    }
    Ok(RouteTable { nodes: n, routes })
}

/// Minimum-cost path among the shortest `s -> d` paths; an empty `costs`
/// slice makes every link free, leaving only the lowest-next-hop tie-break.
fn cheapest_shortest_path(topology: &Topology, dist: &[Option<usize>], costs: &[u64], s: NodeId, d: NodeId) -> Route {
    let ds = dist[s.0].expect("checked reachable");
    let mut order: Vec<NodeId> = topology
        .nodes()
        .filter(|v| dist[v.0].is_some_and(|x| x <= ds))
        .collect();
    order.sort_by_key(|v| dist[v.0]);
    let mut best: Vec<Option<(u64, NodeId, LinkId)>> = vec![None; topology.node_count()];
    let mut cost_to_d = vec![u64::MAX; topology.node_count()];
    cost_to_d[d.0] = 0;
    for &u in order.iter().skip(1) {
        let du = dist[u.0].unwrap();
        for &l in topology.out_links(u) {
            let v = topology.link(l).to;
            if dist[v.0] != Some(du - 1) || cost_to_d[v.0] == u64::MAX {
                continue;
            }
            let c = cost_to_d[v.0] + costs.get(l.0).copied().unwrap_or(0);
            let cand = (c, v, l);
            if best[u.0].is_none_or(|b| cand < b) {
                best[u.0] = Some(cand);
            }
        }
        if let Some((c, _, _)) = best[u.0] {
            cost_to_d[u.0] = c;
        }
    }
    let mut nodes = vec![s];
    let mut links = Vec::with_capacity(ds);
    let mut u = s;
    while u != d {
        let (_, v, l) = best[u.0].expect("BFS distance implies a closer neighbour");
        links.push(l);
        nodes.push(v);
        u = v;
    }
    Route {
        source: s,
        destination: d,
        nodes,
        links,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_6x6_counts() {
        let t = build_torus(6, 6, LinkDefaults::default()).unwrap();
        assert_eq!(t.node_count(), 36);
        assert_eq!(t.bidirectional_link_count(), 72);
        assert_eq!(t.directed_link_count(), 144);
        for n in t.nodes() {
            assert_eq!(t.out_degree(n), 4);
            assert_eq!(t.in_degree(n), 4);
        }
    }

    #[test]
    fn torus_2x2_keeps_parallel_links() {
        let t = build_torus(2, 2, LinkDefaults::default()).unwrap();
        assert_eq!(t.node_count(), 4);
        assert_eq!(t.bidirectional_link_count(), 8);
        // node 0 reaches node 1 both directly and via wrap-around
        let to_one = t
            .out_links(NodeId(0))
            .iter()
            .filter(|&&l| t.link(l).to == NodeId(1))
            .count();
        assert_eq!(to_one, 2);
    }

    #[test]
    fn torus_rejects_small_dimensions() {
        assert_eq!(
            build_torus(1, 5, LinkDefaults::default()).unwrap_err(),
            TopologyError::TorusTooSmall { rows: 1, cols: 5 }
        );
    }

    #[test]
    fn nsfnet_counts() {
        let t = build_nsfnet(LinkDefaults::default());
        assert_eq!(t.node_count(), 14);
        assert_eq!(t.directed_link_count(), 42);
        assert!(t.is_connected());
        let degree_sum: usize = t.nodes().map(|n| t.out_degree(n)).sum();
        assert_eq!(degree_sum, 42);
        assert_eq!(t.node_name(NodeId(0)), Some("WA"));
    }

    #[test]
    fn torus_route_uses_wraparound() {
        let t = build_torus(6, 6, LinkDefaults::default()).unwrap();
        let rt = shortest_routes(&t).unwrap();
        // (0,0) -> (2,5)
        let r = rt.route(NodeId(0), NodeId(2 * 6 + 5));
        assert_eq!(r.hop_count(), 3);
        assert_eq!(r.nodes.first(), Some(&NodeId(0)));
        assert_eq!(r.nodes.last(), Some(&NodeId(17)));
    }

    #[test]
    fn parse_overrides_and_errors() {
        let t = parse_topology(
            "node 0 a\nnode 1 b\nlink 0 1 5000 8 2 # comment\nlink 1 2\n",
            LinkDefaults::default(),
        )
        .unwrap();
        assert_eq!(t.node_count(), 3);
        assert_eq!(t.link(LinkId(0)).propagation_delay, SimTime(5000));
        assert_eq!(t.link(LinkId(0)).wavelength_count, 8);
        assert_eq!(t.link(LinkId(1)).control_wavelengths, 2);
        assert_eq!(t.link(LinkId(2)).wavelength_count, 32);

        let e = parse_topology("link 0 1\nlonk 1 2\n", LinkDefaults::default()).unwrap_err();
        assert!(matches!(e, TopologyError::Parse { line: 2, .. }));
        let e = parse_topology("link 0 1 10 4 4\n", LinkDefaults::default()).unwrap_err();
        assert!(matches!(e, TopologyError::Wavelengths { .. }));
    }

    #[test]
    fn unreachable_pair_is_an_error() {
        let t = from_edges("split", 4, &[(0, 1), (2, 3)], LinkDefaults::default()).unwrap();
        assert!(matches!(shortest_routes(&t), Err(TopologyError::Unreachable { .. })));
    }
}
