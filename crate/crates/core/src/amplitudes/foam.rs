use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin_network::{Link, LinkId, Node, SpinNetwork};

/// How tetrahedra may be glued along shared triangles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gluing {
    /// Each tetrahedron meets the earlier ones in at most one triangle.
    #[default]
    OneByOne,
    /// Any number of shared triangles, as long as no point is enclosed.
    Free,
}

/// A 2-complex dual to a set of tetrahedra. Vertices are tetrahedra, edges
/// are shared triangles and faces are the segments of the triangulation.
///
/// A vertex `(P, Q, R, S)` exposes its faces in the slot order
/// `[PQ, QR, RP, RS, PS, QS]` of the 6j symbol `{PQ QR RP; RS PS QS}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Foam2Complex {
    tets: Vec<[usize; 4]>,
    faces: Vec<[usize; 2]>,
    slots: Vec<[usize; 6]>,
    glued: Vec<(usize, usize, [usize; 3])>,
    boundary_triangles: Vec<[usize; 3]>,
    boundary_faces: Vec<usize>,
    internal_faces: Vec<usize>,
}

fn segment(a: usize, b: usize) -> [usize; 2] {
    [a.min(b), a.max(b)]
}

fn triangle(mut t: [usize; 3]) -> [usize; 3] {
    t.sort_unstable();
    t
}

pub(crate) fn tet_segments(t: [usize; 4]) -> [[usize; 2]; 6] {
    let [p, q, r, s] = t;
    [
        segment(p, q),
        segment(q, r),
        segment(r, p),
        segment(r, s),
        segment(p, s),
        segment(q, s),
    ]
}

fn tet_triangles(t: [usize; 4]) -> [[usize; 3]; 4] {
    let [p, q, r, s] = t;
    [
        triangle([p, q, r]),
        triangle([p, q, s]),
        triangle([q, r, s]),
        triangle([p, r, s]),
    ]
}

impl Foam2Complex {
    pub fn from_tetrahedra(tets: &[[usize; 4]], gluing: Gluing) -> Result<Self> {
        if tets.is_empty() {
            return Err(Error::InvalidFoam("no vertices".into()));
        }
        let mut owners: BTreeMap<[usize; 3], Vec<usize>> = BTreeMap::new();
        for (v, &t) in tets.iter().enumerate() {
            let distinct: BTreeSet<usize> = t.iter().copied().collect();
            if distinct.len() != 4 {
                return Err(Error::InvalidFoam(format!("tetrahedron {t:?} repeats a point")));
            }
            let mut shared = 0;
            for tri in tet_triangles(t) {
                let own = owners.entry(tri).or_default();
                if !own.is_empty() {
                    shared += 1;
                }
                own.push(v);
                if own.len() > 2 {
                    return Err(Error::InvalidFoam(format!(
                        "triangle {tri:?} bounds more than two vertices"
                    )));
                }
            }
            if gluing == Gluing::OneByOne && shared > 1 {
                return Err(Error::InvalidFoam(format!(
                    "vertex {v} is glued along {shared} edges; at most one is allowed"
                )));
            }
        }

        let faces: Vec<[usize; 2]> = tets
            .iter()
            .flat_map(|&t| tet_segments(t))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: BTreeMap<[usize; 2], usize> = faces.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let slots = tets.iter().map(|&t| tet_segments(t).map(|s| index[&s])).collect();

        let mut glued = Vec::new();
        let mut boundary_triangles = Vec::new();
        for (tri, own) in &owners {
            match own.as_slice() {
                [a, b] => glued.push((*a, *b, *tri)),
                _ => boundary_triangles.push(*tri),
            }
        }
        let on_boundary: BTreeSet<usize> = boundary_triangles
            .iter()
            .flat_map(|&[a, b, c]| [segment(a, b), segment(b, c), segment(a, c)])
            .map(|s| index[&s])
            .collect();
        let boundary_faces: Vec<usize> = on_boundary.iter().copied().collect();
        let internal_faces: Vec<usize> = (0..faces.len()).filter(|f| !on_boundary.contains(f)).collect();

        let points: BTreeSet<usize> = tets.iter().flatten().copied().collect();
        for p in points {
            let touches_boundary = boundary_faces.iter().any(|&f| faces[f].contains(&p));
            if !touches_boundary {
                return Err(Error::InvalidFoam(format!("point {p} is enclosed (bubble)")));
            }
        }

        Ok(Foam2Complex {
            tets: tets.to_vec(),
            faces,
            slots,
            glued,
            boundary_triangles,
            boundary_faces,
            internal_faces,
        })
    }

    /// `count` tetrahedra `(k, k+1, k+2, k+3)`, each glued to the previous
    /// one along a single triangle.
    pub fn chain(count: usize) -> Result<Self> {
        let tets: Vec<[usize; 4]> = (0..count).map(|k| [k, k + 1, k + 2, k + 3]).collect();
        Foam2Complex::from_tetrahedra(&tets, Gluing::OneByOne)
    }

    /// `count` tetrahedra sharing no point.
    pub fn disconnected(count: usize) -> Result<Self> {
        let tets: Vec<[usize; 4]> = (0..count).map(|k| [4 * k, 4 * k + 1, 4 * k + 2, 4 * k + 3]).collect();
        Foam2Complex::from_tetrahedra(&tets, Gluing::OneByOne)
    }

    pub fn vertex_count(&self) -> usize {
        self.tets.len()
    }

    pub fn tetrahedra(&self) -> &[[usize; 4]] {
        &self.tets
    }

    /// Segment `[a, b]` (`a < b`) dual to each face.
    pub fn faces(&self) -> &[[usize; 2]] {
        &self.faces
    }

    /// Face id of the segment between two points.
    pub fn face(&self, a: usize, b: usize) -> Option<usize> {
        self.faces.iter().position(|&s| s == segment(a, b))
    }

    pub fn slots(&self, vertex: usize) -> [usize; 6] {
        self.slots[vertex]
    }

    /// Shared triangles as `(vertex, vertex, triangle)`.
    pub fn edges(&self) -> &[(usize, usize, [usize; 3])] {
        &self.glued
    }

    pub fn boundary_triangles(&self) -> &[[usize; 3]] {
        &self.boundary_triangles
    }

    /// Faces touching the boundary; their ids are the link ids of
    /// [`Foam2Complex::boundary_network`].
    pub fn boundary_faces(&self) -> &[usize] {
        &self.boundary_faces
    }

    pub fn internal_faces(&self) -> &[usize] {
        &self.internal_faces
    }

    /// Boundary graph: one trivalent node per boundary triangle, one link
    /// per boundary face, all spins set to `spin`.
    pub fn boundary_network(&self, spin: crate::Spin) -> Result<SpinNetwork> {
        let nodes = (0..self.boundary_triangles.len()).map(Node::trivalent).collect();
        let mut links = Vec::new();
        for &f in &self.boundary_faces {
            let [a, b] = self.faces[f];
            let ends: Vec<usize> = self
                .boundary_triangles
                .iter()
                .enumerate()
                .filter(|(_, t)| t.contains(&a) && t.contains(&b))
                .map(|(k, _)| k)
                .collect();
            if ends.len() != 2 {
                return Err(Error::InvalidFoam(format!(
                    "boundary face {f} meets {} triangles",
                    ends.len()
                )));
            }
            links.push(Link::new(f as LinkId, ends[0], ends[1], spin));
        }
        SpinNetwork::new(nodes, links)
    }

    /// Boundary-network node of a boundary triangle.
    pub fn triangle_node(&self, tri: [usize; 3]) -> Option<usize> {
        let tri = triangle(tri);
        self.boundary_triangles.iter().position(|&t| t == tri)
    }

    /// The three face ids around a triangle.
    pub fn triangle_faces(&self, tri: [usize; 3]) -> Option<[usize; 3]> {
        let [a, b, c] = triangle(tri);
        Some([self.face(a, b)?, self.face(b, c)?, self.face(a, c)?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_network::validate;

    #[test]
    fn single_tetrahedron() {
        let f = Foam2Complex::from_tetrahedra(&[[0, 1, 2, 3]], Gluing::OneByOne).unwrap();
        assert_eq!(f.faces().len(), 6);
        assert_eq!(f.boundary_faces().len(), 6);
        assert!(f.internal_faces().is_empty());
        assert_eq!(f.boundary_triangles().len(), 4);
        let net = f.boundary_network(crate::Spin::ONE).unwrap();
        assert_eq!(net.node_count(), 4);
        assert!(validate(&net).ok);
    }

    #[test]
    fn chain_has_no_internal_faces() {
        for v in 2..=4 {
            let f = Foam2Complex::chain(v).unwrap();
            assert!(f.internal_faces().is_empty());
            assert_eq!(f.edges().len(), v - 1);
            assert_eq!(f.boundary_triangles().len(), 2 * v + 2);
        }
    }

    #[test]
    fn ring_around_a_segment_has_an_internal_face() {
        let tets = [[0, 1, 2, 3], [0, 1, 3, 4], [0, 1, 4, 2]];
        assert!(Foam2Complex::from_tetrahedra(&tets, Gluing::OneByOne).is_err());
        let f = Foam2Complex::from_tetrahedra(&tets, Gluing::Free).unwrap();
        assert_eq!(f.internal_faces(), &[f.face(0, 1).unwrap()]);
        assert!(f.boundary_network(crate::Spin::ONE).is_ok());
    }

    #[test]
    fn enclosed_point_is_a_bubble() {
        let tets = [[0, 1, 2, 4], [0, 1, 3, 4], [0, 2, 3, 4], [1, 2, 3, 4]];
        assert!(matches!(
            Foam2Complex::from_tetrahedra(&tets, Gluing::Free),
            Err(Error::InvalidFoam(_))
        ));
    }
}
