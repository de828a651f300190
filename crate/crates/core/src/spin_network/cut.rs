use std::collections::{BTreeMap, BTreeSet};
use std::hash::{DefaultHasher, Hash, Hasher};

use serde::Serialize;

use super::{node_violation, End, Link, LinkId, NodeId, SpinNetwork};
use crate::error::{Error, Result};
use crate::spin::Spin;

/// Where a sub-network was cut from: a fingerprint of the parent and the
/// ids of the links that crossed the cut.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub parent: u64,
    pub crossing: Vec<LinkId>,
}

/// A portion of a spin network whose cut links are left dangling.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubSpinNetwork {
    pub network: SpinNetwork,
    pub provenance: Option<Provenance>,
}

impl SubSpinNetwork {
    /// Wraps a standalone network; it must be connected.
    pub fn new(network: SpinNetwork) -> Result<Self> {
        let all: BTreeSet<NodeId> = network.nodes().map(|n| n.id).collect();
        let components = network.components(&all);
        if components.len() > 1 {
            return Err(Error::DisconnectedSubset { components });
        }
        Ok(SubSpinNetwork {
            network,
            provenance: None,
        })
    }

    /// Dangling ends as `(link, node, spin)`.
    pub fn boundary(&self) -> Vec<(LinkId, NodeId, Spin)> {
        self.network
            .dangling_links()
            .map(|l| (l.id, l.ends().next().expect("dangling links keep one node"), l.spin))
            .collect()
    }
}

/// Why a gluing contributes with weight zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ZeroReason {
    SpinMismatch { a: LinkId, b: LinkId, spins: (Spin, Spin) },
    Inadmissible { node: NodeId, spins: Vec<Spin> },
}

/// Result of the union map: a glued network or the zero weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Glued {
    Network(SpinNetwork),
    Zero(ZeroReason),
}

impl Glued {
    pub fn is_zero(&self) -> bool {
        matches!(self, Glued::Zero(_))
    }

    pub fn network(&self) -> Option<&SpinNetwork> {
        match self {
            Glued::Network(n) => Some(n),
            Glued::Zero(_) => None,
        }
    }
}

fn fingerprint(net: &SpinNetwork) -> u64 {
    let mut h = DefaultHasher::new();
    let (nodes, links) = net.parts();
    for n in nodes.values() {
        (n.id, n.valence, n.intertwiner).hash(&mut h);
    }
    for l in links.values() {
        (l.id, l.source, l.target, l.spin).hash(&mut h);
    }
    h.finish()
}

/// Cuts `net` into the part spanned by `subset` and its complement. Links
/// crossing the cut dangle on both sides with the same id and spin.
pub fn extract_sub(net: &SpinNetwork, subset: &[NodeId]) -> Result<(SubSpinNetwork, SubSpinNetwork)> {
    let inside: BTreeSet<NodeId> = subset.iter().copied().collect();
    if inside.is_empty() {
        return Err(Error::InvalidNetwork("empty node subset".into()));
    }
    if let Some(&missing) = inside.iter().find(|&&n| net.node(n).is_none()) {
        return Err(Error::InvalidNetwork(format!("no node {missing}")));
    }
    let components = net.components(&inside);
    if components.len() > 1 {
        return Err(Error::DisconnectedSubset { components });
    }

    let (nodes, links) = net.parts();
    let mut a_nodes = BTreeMap::new();
    let mut b_nodes = BTreeMap::new();
    for (id, n) in nodes {
        if inside.contains(id) {
            a_nodes.insert(*id, n.clone());
        } else {
            b_nodes.insert(*id, n.clone());
        }
    }
    let side = |e: End| e.node().map(|n| inside.contains(&n));
    let mut a_links = BTreeMap::new();
    let mut b_links = BTreeMap::new();
    let mut crossing = Vec::new();
    for (id, l) in links {
        let ends: Vec<bool> = [l.source, l.target].into_iter().filter_map(side).collect();
        if ends.iter().all(|&x| x) {
            a_links.insert(*id, l.clone());
        } else if ends.iter().all(|&x| !x) {
            b_links.insert(*id, l.clone());
        } else {
            crossing.push(*id);
            let cut = |keep: bool| {
                let f = |e: End| if side(e) == Some(keep) { e } else { End::Dangling };
                Link {
                    id: *id,
                    source: f(l.source),
                    target: f(l.target),
                    spin: l.spin,
                }
            };
            a_links.insert(*id, cut(true));
            b_links.insert(*id, cut(false));
        }
    }
    let provenance = Provenance {
        parent: fingerprint(net),
        crossing,
    };
    Ok((
        SubSpinNetwork {
            network: SpinNetwork::from_parts(a_nodes, a_links)?,
            provenance: Some(provenance.clone()),
        },
        SubSpinNetwork {
            network: SpinNetwork::from_parts(b_nodes, b_links)?,
            provenance: Some(provenance),
        },
    ))
}

/// Glues two sub-networks along paired dangling links. Pairs come from
/// `pairing` when given, else from a shared provenance. Mismatched spins or
/// an inadmissible reattached node give [`Glued::Zero`].
pub fn union(a: &SubSpinNetwork, b: &SubSpinNetwork, pairing: Option<&[(LinkId, LinkId)]>) -> Result<Glued> {
    let shared = match (&a.provenance, &b.provenance) {
        (Some(pa), Some(pb)) if pa == pb => Some(pa),
        _ => None,
    };
    let (a_nodes, a_links) = a.network.parts();
    let (b_nodes_raw, b_links_raw) = b.network.parts();

    let (pairs, b_nodes, b_links): (Vec<(LinkId, LinkId)>, BTreeMap<_, _>, BTreeMap<_, _>) = match (pairing, shared) {
        (None, Some(p)) => {
            if let Some(&n) = b_nodes_raw.keys().find(|n| a_nodes.contains_key(n)) {
                return Err(Error::InvalidNetwork(format!("node {n} appears on both sides")));
            }
            let pairs = p.crossing.iter().map(|&l| (l, l)).collect();
            (pairs, b_nodes_raw.clone(), b_links_raw.clone())
        }
        (Some(explicit), _) => {
            let (nodes, links) = shift(a, b, explicit);
            let pairs = explicit.iter().map(|&(x, _)| (x, x)).collect();
            (pairs, nodes, links)
        }
        (None, None) => {
            if a.network.dangling_links().next().is_some() && b.network.dangling_links().next().is_some() {
                return Err(Error::AmbiguousPairing(
                    "sub-networks share no provenance and no pairing was given".into(),
                ));
            }
            let (nodes, links) = shift(a, b, &[]);
            (Vec::new(), nodes, links)
        }
    };

    let mut nodes = a_nodes.clone();
    nodes.extend(b_nodes);
    let mut links = a_links.clone();
    let mut reattached = Vec::new();
    let mut used = BTreeSet::new();
    for &(la_id, lb_id) in &pairs {
        let la = a_links.get(&la_id).filter(|l| l.is_dangling());
        let lb = b_links.get(&lb_id).filter(|l| l.is_dangling());
        let (la, lb) = match (la, lb) {
            (Some(x), Some(y)) if used.insert(la_id) => (x, y),
            _ => {
                return Err(Error::AmbiguousPairing(format!(
                    "link {la_id} does not pair two dangling ends"
                )))
            }
        };
        if la.spin != lb.spin {
            return Ok(Glued::Zero(ZeroReason::SpinMismatch {
                a: la_id,
                b: lb_id,
                spins: (la.spin, lb.spin),
            }));
        }
        let na = la.ends().next().expect("dangling links keep one node");
        let nb = lb.ends().next().expect("dangling links keep one node");
        let (source, target) = if la.source == End::Dangling { (nb, na) } else { (na, nb) };
        links.insert(la_id, Link::new(la_id, source, target, la.spin));
        reattached.extend([na, nb]);
    }
    for (id, l) in b_links {
        if !used.contains(&id) && links.insert(id, l).is_some() {
            return Err(Error::InvalidNetwork(format!("link {id} appears on both sides")));
        }
    }
    let glued = SpinNetwork::from_parts(nodes, links)?;
    reattached.sort_unstable();
    reattached.dedup();
    for node in reattached {
        if let Some(v) = node_violation(&glued, node) {
            return Ok(Glued::Zero(ZeroReason::Inadmissible { node, spins: v.spins }));
        }
    }
    Ok(Glued::Network(glued))
}

/// Renumbers `b` past the ids of `a`; paired links take the id of their
/// partner in `a`.
fn shift(
    a: &SubSpinNetwork,
    b: &SubSpinNetwork,
    pairs: &[(LinkId, LinkId)],
) -> (BTreeMap<NodeId, super::Node>, BTreeMap<LinkId, Link>) {
    let (a_nodes, a_links) = a.network.parts();
    let node_off = a_nodes.keys().next_back().map_or(0, |k| k + 1);
    let link_off = a_links.keys().next_back().map_or(0, |k| k + 1);
    let partner: BTreeMap<LinkId, LinkId> = pairs.iter().map(|&(x, y)| (y, x)).collect();
    let (b_nodes, b_links) = b.network.parts();
    let nodes = b_nodes
        .values()
        .map(|n| {
            let mut n = n.clone();
            n.id += node_off;
            (n.id, n)
        })
        .collect();
    let move_end = |e: End| match e {
        End::Node(n) => End::Node(n + node_off),
        End::Dangling => End::Dangling,
    };
    let links = b_links
        .values()
        .map(|l| {
            let id = partner.get(&l.id).copied().unwrap_or(l.id + link_off);
            let moved = Link {
                id,
                source: move_end(l.source),
                target: move_end(l.target),
                spin: l.spin,
            };
            (id, moved)
        })
        .collect();
    (nodes, links)
}

#[cfg(test)]
mod tests {
    use super::super::{theta, Node};
    use super::*;

    fn s(t: u32) -> Spin {
        Spin::from_twice(t)
    }

    #[test]
    fn full_subset_leaves_empty_complement() {
        let net = theta([s(2), s(2), s(2)]);
        let (a, b) = extract_sub(&net, &[0, 1]).unwrap();
        assert_eq!(a.network, net);
        assert!(b.network.is_empty());
    }

    #[test]
    fn one_node_of_theta() {
        let net = theta([s(1), s(2), s(3)]);
        let (a, b) = extract_sub(&net, &[0]).unwrap();
        let ba: Vec<_> = a.boundary().iter().map(|x| (x.0, x.2)).collect();
        let bb: Vec<_> = b.boundary().iter().map(|x| (x.0, x.2)).collect();
        assert_eq!(ba.len(), 3);
        assert_eq!(ba, bb);
        assert_eq!(union(&a, &b, None).unwrap(), Glued::Network(net));
    }

    #[test]
    fn mismatched_spins_are_zero() {
        let half_one = SpinNetwork::new(
            vec![Node::trivalent(0)],
            vec![
                Link::dangling(0, 0, s(1)),
                Link::dangling(1, 0, s(2)),
                Link::dangling(2, 0, s(1)),
            ],
        )
        .unwrap();
        let half_three_halves = SpinNetwork::new(
            vec![Node::trivalent(0)],
            vec![
                Link::dangling(0, 0, s(1)),
                Link::dangling(1, 0, s(3)),
                Link::dangling(2, 0, s(2)),
            ],
        )
        .unwrap();
        let a = SubSpinNetwork::new(half_one).unwrap();
        let b = SubSpinNetwork::new(half_three_halves).unwrap();
        assert!(matches!(union(&a, &b, None), Err(Error::AmbiguousPairing(_))));
        let glued = union(&a, &b, Some(&[(0, 0), (1, 1)])).unwrap();
        assert!(matches!(glued, Glued::Zero(ZeroReason::SpinMismatch { a: 1, .. })));
    }

    #[test]
    fn inadmissible_reattached_node_is_zero() {
        let bad = SpinNetwork::new(
            vec![Node::trivalent(0)],
            vec![
                Link::dangling(0, 0, s(1)),
                Link::dangling(1, 0, s(1)),
                Link::dangling(2, 0, s(1)),
            ],
        )
        .unwrap();
        let good = SpinNetwork::new(
            vec![Node::trivalent(0)],
            vec![
                Link::dangling(0, 0, s(1)),
                Link::dangling(1, 0, s(1)),
                Link::dangling(2, 0, s(2)),
            ],
        )
        .unwrap();
        let a = SubSpinNetwork::new(bad).unwrap();
        let b = SubSpinNetwork::new(good).unwrap();
        let glued = union(&a, &b, Some(&[(0, 0), (1, 1)])).unwrap();
        assert!(matches!(glued, Glued::Zero(ZeroReason::Inadmissible { .. })));
    }

    #[test]
    fn disconnected_subset_names_components() {
        let links = vec![
            Link::new(0, 0, 1, s(2)),
            Link::new(1, 1, 2, s(2)),
            Link::new(2, 2, 0, s(2)),
            Link::dangling(3, 0, s(2)),
            Link::dangling(4, 1, s(2)),
            Link::dangling(5, 2, s(2)),
        ];
        let triangle = SpinNetwork::new((0..3).map(Node::trivalent).collect(), links).unwrap();
        let (a, _) = extract_sub(&triangle, &[0, 1]).unwrap();
        match extract_sub(&a.network, &[0, 1]) {
            Ok(_) => {}
            Err(e) => panic!("{e}"),
        }
        let (ring, _) = extract_sub(&triangle, &[1]).unwrap();
        assert_eq!(ring.boundary().len(), 3);
        let lone = SpinNetwork::new(
            (0..2).map(Node::trivalent).collect(),
            (0..6).map(|k| Link::dangling(k, k / 3, s(2))).collect(),
        )
        .unwrap();
        match extract_sub(&lone, &[0, 1]) {
            Err(Error::DisconnectedSubset { components }) => assert_eq!(components, vec![vec![0], vec![1]]),
            other => panic!("{other:?}"),
        }
    }
}
