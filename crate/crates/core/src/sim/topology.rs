//! Network layout: named hosts and switches joined by links. Switch ports
//! are numbered from 1 in link insertion order, and paths are shortest
//! routes found by breadth-first search with deterministic tie-breaking.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Host,
    Switch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub hosts: Vec<String>,
    pub switches: Vec<String>,
    pub links: Vec<LinkSpec>,
}

impl TopologySpec {
    /// Three hosts behind two daisy-chained switches: the client and the
    /// attacker share the edge switch, the server sits behind the second.
    pub fn default_two_switch() -> Self {
        TopologySpec {
            hosts: vec!["client".into(), "attacker".into(), "server".into()],
            switches: vec!["s1".into(), "s2".into()],
            links: vec![
                LinkSpec { a: "client".into(), b: "s1".into() },
                LinkSpec { a: "attacker".into(), b: "s1".into() },
                LinkSpec { a: "s1".into(), b: "s2".into() },
                LinkSpec { a: "s2".into(), b: "server".into() },
            ],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Topology {
    kinds: BTreeMap<String, NodeKind>,
    /// Neighbors of every node, in link insertion order.
    adjacency: BTreeMap<String, Vec<String>>,
    /// For each switch: port number → neighbor, numbered from 1.
    ports: BTreeMap<String, BTreeMap<u32, String>>,
}

/// Validates a layout: ids must be unique, links must join two known
/// distinct nodes at most once, and every host needs at least one link.
pub fn build_topology(spec: &TopologySpec) -> Result<Topology> {
    let mut kinds: BTreeMap<String, NodeKind> = BTreeMap::new();
    for h in &spec.hosts {
        if kinds.insert(h.clone(), NodeKind::Host).is_some() {
            return Err(Error::Topology(format!("duplicate node id {h:?}")));
        }
    }
    for s in &spec.switches {
        if kinds.insert(s.clone(), NodeKind::Switch).is_some() {
            return Err(Error::Topology(format!("duplicate node id {s:?}")));
        }
    }
    if kinds.is_empty() {
        return Err(Error::Topology("no nodes declared".into()));
    }

    let mut adjacency: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for link in &spec.links {
        for end in [&link.a, &link.b] {
            if !kinds.contains_key(end) {
                return Err(Error::Topology(format!("link references unknown node {end:?}")));
            }
        }
        if link.a == link.b {
            return Err(Error::Topology(format!("link from {:?} to itself", link.a)));
        }
        if kinds[&link.a] == NodeKind::Host && kinds[&link.b] == NodeKind::Host {
            return Err(Error::Topology(format!(
                "hosts {:?} and {:?} cannot be linked directly",
                link.a, link.b
            )));
        }
        let a_neighbors = adjacency.entry(link.a.clone()).or_default();
        if a_neighbors.contains(&link.b) {
            return Err(Error::Topology(format!(
                "duplicate link between {:?} and {:?}",
                link.a, link.b
            )));
        }
        a_neighbors.push(link.b.clone());
        adjacency.entry(link.b.clone()).or_default().push(link.a.clone());
    }

    for (id, kind) in &kinds {
        if *kind == NodeKind::Host && adjacency.get(id).is_none_or(|n| n.is_empty()) {
            return Err(Error::Topology(format!("host {id:?} has no link")));
        }
    }

    let mut ports: BTreeMap<String, BTreeMap<u32, String>> = BTreeMap::new();
    for (id, kind) in &kinds {
        if *kind == NodeKind::Switch {
            let map: BTreeMap<u32, String> = adjacency
                .get(id)
                .map(|neighbors| {
                    neighbors
                        .iter()
                        .enumerate()
                        .map(|(i, n)| (i as u32 + 1, n.clone()))
                        .collect()
                })
                .unwrap_or_default();
            ports.insert(id.clone(), map);
        }
    }

    Ok(Topology { kinds, adjacency, ports })
}

impl Topology {
    pub fn kind(&self, id: &str) -> Option<NodeKind> {
        self.kinds.get(id).copied()
    }

    pub fn is_host(&self, id: &str) -> bool {
        self.kind(id) == Some(NodeKind::Host)
    }

    pub fn is_switch(&self, id: &str) -> bool {
        self.kind(id) == Some(NodeKind::Switch)
    }

    pub fn switch_ids(&self) -> Vec<String> {
        self.ports.keys().cloned().collect()
    }

    pub fn neighbor_on(&self, switch: &str, port: u32) -> Option<&str> {
        self.ports.get(switch)?.get(&port).map(String::as_str)
    }

    pub fn port_to(&self, switch: &str, neighbor: &str) -> Option<u32> {
        self.ports
            .get(switch)?
            .iter()
            .find(|(_, n)| n.as_str() == neighbor)
            .map(|(p, _)| *p)
    }

    /// The switch a host hands its traffic to: its first-linked switch.
    pub fn ingress_switch(&self, host: &str) -> Result<&str> {
        if !self.is_host(host) {
            return Err(Error::Topology(format!("{host:?} is not a host")));
        }
        self.adjacency
            .get(host)
            .and_then(|ns| ns.iter().find(|n| self.is_switch(n)))
            .map(String::as_str)
            .ok_or_else(|| Error::Topology(format!("host {host:?} has no switch link")))
    }

    /// Shortest host-to-host route `[src, switches.., dst]`. Intermediate
    /// nodes are always switches. Breadth-first search expands neighbors in
    /// link insertion order, so equal-length routes resolve identically on
    /// every run.
    pub fn path(&self, src: &str, dst: &str) -> Result<Vec<String>> {
        if !self.is_host(src) || !self.is_host(dst) {
            return Err(Error::Topology(format!(
                "path endpoints must be hosts, got {src:?} and {dst:?}"
            )));
        }
        if src == dst {
            return Err(Error::Topology(format!("{src:?} cannot send to itself")));
        }
        let mut predecessor: BTreeMap<&str, &str> = BTreeMap::new();
        let mut queue: VecDeque<&str> = VecDeque::new();
        queue.push_back(src);
        'search: while let Some(node) = queue.pop_front() {
            for next in self.adjacency.get(node).into_iter().flatten() {
                if next == src || predecessor.contains_key(next.as_str()) {
                    continue;
                }
                predecessor.insert(next, node);
                if next == dst {
                    break 'search;
                }
                // Only switches relay traffic.
                if self.is_switch(next) {
                    queue.push_back(next);
                }
            }
        }
        if !predecessor.contains_key(dst) {
            return Err(Error::Topology(format!("no route from {src:?} to {dst:?}")));
        }
        let mut route = vec![dst.to_string()];
        let mut cursor = dst;
        while cursor != src {
            cursor = predecessor[cursor];
            route.push(cursor.to_string());
        }
        route.reverse();
        Ok(route)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(hosts: &[&str], switches: &[&str], links: &[(&str, &str)]) -> TopologySpec {
        TopologySpec {
            hosts: hosts.iter().map(|s| s.to_string()).collect(),
            switches: switches.iter().map(|s| s.to_string()).collect(),
            links: links
                .iter()
                .map(|(a, b)| LinkSpec { a: a.to_string(), b: b.to_string() })
                .collect(),
        }
    }

    #[test]
    fn default_layout_builds_with_expected_ports() {
        let topo = build_topology(&TopologySpec::default_two_switch()).unwrap();
        assert_eq!(topo.switch_ids(), vec!["s1", "s2"]);
        // s1's links arrive in order client, attacker, s2.
        assert_eq!(topo.neighbor_on("s1", 1), Some("client"));
        assert_eq!(topo.neighbor_on("s1", 2), Some("attacker"));
        assert_eq!(topo.neighbor_on("s1", 3), Some("s2"));
        assert_eq!(topo.neighbor_on("s2", 1), Some("s1"));
        assert_eq!(topo.neighbor_on("s2", 2), Some("server"));
        assert_eq!(topo.port_to("s2", "server"), Some(2));
        assert_eq!(topo.ingress_switch("attacker").unwrap(), "s1");
    }

    #[test]
    fn single_switch_layout_is_valid() {
        let topo = build_topology(&spec(
            &["a", "b"],
            &["sw"],
            &[("a", "sw"), ("b", "sw")],
        ))
        .unwrap();
        assert_eq!(topo.path("a", "b").unwrap(), vec!["a", "sw", "b"]);
    }

    #[test]
    fn unlinked_host_rejected() {
        let err = build_topology(&spec(&["a", "b"], &["sw"], &[("a", "sw")])).unwrap_err();
        assert!(err.to_string().contains("no link"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = build_topology(&spec(&["a", "a"], &["sw"], &[("a", "sw")])).unwrap_err();
        assert!(err.to_string().contains("duplicate node id"));
        let err =
            build_topology(&spec(&["x"], &["x"], &[("x", "x")])).unwrap_err();
        assert!(err.to_string().contains("duplicate node id"));
    }

    #[test]
    fn bad_links_rejected() {
        assert!(build_topology(&spec(&["a"], &["sw"], &[("a", "zz")])).is_err());
        assert!(build_topology(&spec(&["a", "b"], &[], &[("a", "b")])).is_err());
        assert!(build_topology(&spec(
            &["a", "b"],
            &["sw"],
            &[("a", "sw"), ("a", "sw"), ("b", "sw")],
        ))
        .is_err());
    }

    #[test]
    fn default_path_crosses_both_switches() {
        let topo = build_topology(&TopologySpec::default_two_switch()).unwrap();
        assert_eq!(topo.path("client", "server").unwrap(), vec!["client", "s1", "s2", "server"]);
        assert_eq!(topo.path("attacker", "server").unwrap(), vec![
            "attacker", "s1", "s2", "server"
        ]);
        assert_eq!(topo.path("server", "client").unwrap(), vec!["server", "s2", "s1", "client"]);
    }

    #[test]
    fn missing_route_is_an_error() {
        // Two islands: a-sw1, b-sw2, no switch interconnect.
        let topo = build_topology(&spec(
            &["a", "b"],
            &["sw1", "sw2"],
            &[("a", "sw1"), ("b", "sw2")],
        ))
        .unwrap();
        assert!(topo.path("a", "b").is_err());
    }

    #[test]
    fn self_delivery_rejected() {
        let topo = build_topology(&TopologySpec::default_two_switch()).unwrap();
        assert!(topo.path("client", "client").is_err());
    }
}
