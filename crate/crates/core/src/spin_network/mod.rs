//! Labeled graphs with spins on links, their cuts into sub-networks and the
//! gluing map back.

mod cut;
mod random;
mod text;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recoupling::triangle_ok;
use crate::spin::Spin;

pub use cut::{extract_sub, union, Glued, Provenance, SubSpinNetwork, ZeroReason};
pub use random::{random_network, NetworkTemplate, TemplateLink, RESTARTS, RETRIES_PER_NODE};
pub use text::{parse_network, write_network};

pub type NodeId = usize;
pub type LinkId = usize;

/// One end of a link: attached to a node or left dangling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum End {
    Node(NodeId),
    Dangling,
}

impl End {
    pub fn node(self) -> Option<NodeId> {
        match self {
            End::Node(n) => Some(n),
            End::Dangling => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    /// Valence other than three must be declared.
    #[serde(default)]
    pub valence: Option<usize>,
    #[serde(default)]
    pub intertwiner: Option<u32>,
}

impl Node {
    pub fn trivalent(id: NodeId) -> Self {
        Node {
            id,
            valence: None,
            intertwiner: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub source: End,
    pub target: End,
    pub spin: Spin,
}

impl Link {
    pub fn new(id: LinkId, source: NodeId, target: NodeId, spin: Spin) -> Self {
        Link {
            id,
            source: End::Node(source),
            target: End::Node(target),
            spin,
        }
    }

    pub fn dangling(id: LinkId, node: NodeId, spin: Spin) -> Self {
        Link {
            id,
            source: End::Node(node),
            target: End::Dangling,
            spin,
        }
    }

    pub fn is_dangling(&self) -> bool {
        self.source == End::Dangling || self.target == End::Dangling
    }

    pub fn ends(&self) -> impl Iterator<Item = NodeId> {
        self.source.node().into_iter().chain(self.target.node())
    }
}

/// A graph whose links carry spins. Structure is checked on construction;
/// node admissibility is reported by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork", into = "RawNetwork")]
pub struct SpinNetwork {
    nodes: BTreeMap<NodeId, Node>,
    links: BTreeMap<LinkId, Link>,
}

#[derive(Serialize, Deserialize)]
struct RawNetwork {
    nodes: Vec<Node>,
    links: Vec<Link>,
}

impl TryFrom<RawNetwork> for SpinNetwork {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        SpinNetwork::new(raw.nodes, raw.links)
    }
}

impl From<SpinNetwork> for RawNetwork {
    fn from(net: SpinNetwork) -> Self {
        RawNetwork {
            nodes: net.nodes.into_values().collect(),
            links: net.links.into_values().collect(),
        }
    }
}

impl SpinNetwork {
    pub fn new(nodes: Vec<Node>, links: Vec<Link>) -> Result<Self> {
        let mut node_map = BTreeMap::new();
        for n in nodes {
            if node_map.insert(n.id, n.clone()).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate node id {}", n.id)));
            }
        }
        let mut link_map = BTreeMap::new();
        for l in links {
            if l.source == End::Dangling && l.target == End::Dangling {
                return Err(Error::InvalidNetwork(format!("link {} is attached to no node", l.id)));
            }
            if let Some(missing) = l.ends().find(|n| !node_map.contains_key(n)) {
                return Err(Error::InvalidNetwork(format!(
                    "link {} ends on unknown node {missing}",
                    l.id
                )));
            }
            if link_map.insert(l.id, l.clone()).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate link id {}", l.id)));
            }
        }
        let net = SpinNetwork {
            nodes: node_map,
            links: link_map,
        };
        for node in net.nodes.values() {
            let valence = net.incident(node.id).len();
            let declared = node.valence.unwrap_or(3);
            if valence != declared {
                return Err(Error::InvalidNetwork(format!(
                    "node {} has {valence} link ends but valence {declared}",
                    node.id
                )));
            }
        }
        Ok(net)
    }

    pub fn empty() -> Self {
        SpinNetwork::default()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.values()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn link(&self, id: LinkId) -> Option<&Link> {
        self.links.get(&id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Ids of links with an end on `node`; a loop appears twice.
    pub fn incident(&self, node: NodeId) -> Vec<LinkId> {
        let mut out = Vec::new();
        for l in self.links.values() {
            for end in [l.source, l.target] {
                if end == End::Node(node) {
                    out.push(l.id);
                }
            }
        }
        out
    }

    /// Spins meeting at `node`, one per link end.
    pub fn node_spins(&self, node: NodeId) -> Vec<Spin> {
        self.incident(node).iter().map(|l| self.links[l].spin).collect()
    }

    pub fn dangling_links(&self) -> impl Iterator<Item = &Link> {
        self.links.values().filter(|l| l.is_dangling())
    }

    /// Copy with one link relabeled.
    pub fn with_spin(&self, link: LinkId, spin: Spin) -> Result<Self> {
        let mut out = self.clone();
        out.links
            .get_mut(&link)
            .ok_or_else(|| Error::InvalidNetwork(format!("no link {link}")))?
            .spin = spin;
        Ok(out)
    }

    /// Connected components of the node set, each sorted.
    pub fn components(&self, subset: &BTreeSet<NodeId>) -> Vec<Vec<NodeId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in subset {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(n) = stack.pop() {
                for l in self.incident(n) {
                    for m in self.links[&l].ends() {
                        if subset.contains(&m) && seen.insert(m) {
                            comp.push(m);
                            stack.push(m);
                        }
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub(crate) fn from_parts(nodes: BTreeMap<NodeId, Node>, links: BTreeMap<LinkId, Link>) -> Result<Self> {
        SpinNetwork::new(nodes.into_values().collect(), links.into_values().collect())
    }

    pub(crate) fn parts(&self) -> (&BTreeMap<NodeId, Node>, &BTreeMap<LinkId, Link>) {
        (&self.nodes, &self.links)
    }
}

/// A node whose incident spins are not admissible.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NodeDiagnostic {
    pub node: NodeId,
    pub spins: Vec<Spin>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub ok: bool,
    pub violations: Vec<NodeDiagnostic>,
}

/// Checks the triangle rule at every trivalent node. Nodes of declared
/// higher valence carry an opaque intertwiner and are not checked.
pub fn validate(net: &SpinNetwork) -> Validation {
    let violations: Vec<NodeDiagnostic> = net.nodes().filter_map(|n| node_violation(net, n.id)).collect();
    Validation {
        ok: violations.is_empty(),
        violations,
    }
}

pub(crate) fn node_violation(net: &SpinNetwork, node: NodeId) -> Option<NodeDiagnostic> {
    let spins = net.node_spins(node);
    if spins.len() != 3 || triangle_ok(spins[0], spins[1], spins[2]) {
        return None;
    }
    Some(NodeDiagnostic { node, spins })
}

/// Two trivalent nodes joined by three parallel links.
pub fn theta(spins: [Spin; 3]) -> SpinNetwork {
    let links = spins.iter().enumerate().map(|(k, &j)| Link::new(k, 0, 1, j)).collect();
    SpinNetwork::new(vec![Node::trivalent(0), Node::trivalent(1)], links).expect("theta graph is well formed")
}
