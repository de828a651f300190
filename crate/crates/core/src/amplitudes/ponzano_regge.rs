use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;

use super::boundary::BoundaryState;
use super::foam::Foam2Complex;
use crate::error::{Error, Result};
use crate::recoupling::{self, triangle_ok, TRIADS};
use crate::spin::Spin;

/// `e^{iπ·twice/2}`.
pub(crate) fn half_phase(twice: u32) -> Complex64 {
    match twice % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Vertex amplitude `(−1)^{Σ j} {j1 j2 j3; j4 j5 j6}`. The sign is a
/// complex unit because `Σ j` may be a half-integer.
pub fn pr_vertex(js: [Spin; 6]) -> Result<Complex64> {
    let s = recoupling::wigner6j(js)?;
    if s == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let twice: u32 = js.iter().map(|j| j.twice()).sum();
    Ok(half_phase(twice) * s)
}

/// Face weight `(−1)^j (2j+1)` of an internal face.
pub fn face_weight(j: Spin) -> Complex64 {
    half_phase(j.twice()) * j.dim() as f64
}

struct Plan<'a> {
    foam: &'a Foam2Complex,
    order: Vec<usize>,
    checks: Vec<Vec<[usize; 3]>>,
    vertices: Vec<Vec<usize>>,
}

impl<'a> Plan<'a> {
    fn new(foam: &'a Foam2Complex) -> Self {
        let order: Vec<usize> = foam
            .boundary_faces()
            .iter()
            .chain(foam.internal_faces())
            .copied()
            .collect();
        let mut pos = vec![0; foam.faces().len()];
        for (p, &f) in order.iter().enumerate() {
            pos[f] = p;
        }
        let mut checks = vec![Vec::new(); order.len()];
        let mut vertices = vec![Vec::new(); order.len()];
        for v in 0..foam.vertex_count() {
            let slots = foam.slots(v);
            for t in TRIADS {
                let faces = t.map(|k| slots[k]);
                let at = faces.iter().map(|&f| pos[f]).max().expect("three faces");
                checks[at].push(faces);
            }
            let at = slots.iter().map(|&f| pos[f]).max().expect("six faces");
            vertices[at].push(v);
        }
        Plan {
            foam,
            order,
            checks,
            vertices,
        }
    }
}

struct Walker<'a> {
    plan: &'a Plan<'a>,
    options: Vec<Vec<(Spin, Complex64)>>,
    assign: Vec<Spin>,
    memo: HashMap<[u32; 6], Complex64>,
}

impl Walker<'_> {
    fn vertex(&mut self, v: usize) -> Result<Complex64> {
        let js = self.plan.foam.slots(v).map(|f| self.assign[f]);
        let key = js.map(Spin::twice);
        if let Some(&a) = self.memo.get(&key) {
            return Ok(a);
        }
        let a = pr_vertex(js)?;
        self.memo.insert(key, a);
        Ok(a)
    }

    fn walk(&mut self, pos: usize, acc: Complex64) -> Result<Complex64> {
        if pos == self.plan.order.len() {
            return Ok(acc);
        }
        let face = self.plan.order[pos];
        let mut total = Complex64::new(0.0, 0.0);
        for k in 0..self.options[pos].len() {
            let (j, w) = self.options[pos][k];
            self.assign[face] = j;
            let ok = self.plan.checks[pos]
                .iter()
                .all(|t| triangle_ok(self.assign[t[0]], self.assign[t[1]], self.assign[t[2]]));
            if !ok {
                continue;
            }
            let mut factor = acc * w;
            for idx in 0..self.plan.vertices[pos].len() {
                let v = self.plan.vertices[pos][idx];
                factor *= self.vertex(v)?;
                if factor == Complex64::new(0.0, 0.0) {
                    break;
                }
            }
            if factor != Complex64::new(0.0, 0.0) {
                total += self.walk(pos + 1, factor)?;
            }
        }
        Ok(total)
    }
}

/// Ponzano–Regge amplitude of `foam` with the given boundary state: the sum
/// over internal-face spins up to `j_max` of face weights times vertex
/// amplitudes, weighted by the boundary state. Normalization is 1.
/// Summation runs in ascending spin order, face by face.
pub fn pr_transition(foam: &Foam2Complex, boundary: &BoundaryState, j_max: Spin) -> Result<Complex64> {
    let boundary_faces: BTreeSet<usize> = foam.boundary_faces().iter().copied().collect();
    let covered: BTreeSet<usize> = boundary.covered().into_iter().collect();
    let uncovered: Vec<usize> = boundary_faces.difference(&covered).copied().collect();
    if !uncovered.is_empty() {
        return Err(Error::UncoveredFaces(uncovered));
    }
    if let Some(extra) = covered.difference(&boundary_faces).next() {
        return Err(Error::InvalidFoam(format!("link {extra} is not a boundary face")));
    }
    let plan = Plan::new(foam);
    let internal: Vec<(Spin, Complex64)> = Spin::range_to(j_max).map(|j| (j, face_weight(j))).collect();
    let n_boundary = foam.boundary_faces().len();
    let mut walker = Walker {
        plan: &plan,
        options: Vec::new(),
        assign: vec![Spin::ZERO; foam.faces().len()],
        memo: HashMap::new(),
    };
    let internal_options = |w: &mut Walker| {
        for _ in n_boundary..plan.order.len() {
            w.options.push(internal.clone());
        }
    };
    match boundary {
        BoundaryState::Product(map) => {
            for &f in &plan.order[..n_boundary] {
                walker.options.push(map[&f].options(j_max)?);
            }
            internal_options(&mut walker);
            walker.walk(0, Complex64::new(1.0, 0.0))
        }
        BoundaryState::Superposition(terms) => {
            let mut total = Complex64::new(0.0, 0.0);
            for (weight, assignment) in terms {
                if weight.norm() == 0.0 {
                    continue;
                }
                walker.options.clear();
                for &f in &plan.order[..n_boundary] {
                    walker.options.push(vec![(assignment[&f], Complex64::new(1.0, 0.0))]);
                }
                internal_options(&mut walker);
                total += walker.walk(0, *weight)?;
            }
            Ok(total)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::foam::Gluing;
    use super::*;
    use std::collections::BTreeMap;

    fn s(t: u32) -> Spin {
        Spin::from_twice(t)
    }

    #[test]
    fn vertex_examples() {
        let ones = [Spin::ONE; 6];
        let v = pr_vertex(ones).unwrap();
        assert_eq!(v, Complex64::new(recoupling::wigner6j(ones).unwrap(), 0.0));
        assert_eq!(pr_vertex([Spin::ZERO; 6]).unwrap(), Complex64::new(1.0, 0.0));
        let bad = [s(2), s(2), s(6), s(2), s(2), s(2)];
        assert_eq!(pr_vertex(bad).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn half_integer_spin_sum_gives_imaginary_phase() {
        let js = [s(1), s(1), s(0), s(0), s(0), s(1)];
        let v = pr_vertex(js).unwrap();
        assert!(v.re.abs() < 1e-15 && v.im != 0.0);
    }

    #[test]
    fn single_vertex_is_its_vertex_amplitude() {
        let foam = Foam2Complex::from_tetrahedra(&[[0, 1, 2, 3]], Gluing::OneByOne).unwrap();
        let slots = foam.slots(0);
        let js = [s(2), s(2), s(2), s(3), s(1), s(3)];
        let b = BoundaryState::pinned((0..6).map(|k| (slots[k], js[k])));
        assert_eq!(
            pr_transition(&foam, &b, Spin::integer(2)).unwrap(),
            pr_vertex(js).unwrap()
        );
    }

    #[test]
    fn missing_faces_are_listed() {
        let foam = Foam2Complex::from_tetrahedra(&[[0, 1, 2, 3]], Gluing::OneByOne).unwrap();
        let b = BoundaryState::pinned([(0, Spin::ONE), (1, Spin::ONE)]);
        match pr_transition(&foam, &b, Spin::ONE) {
            Err(Error::UncoveredFaces(f)) => assert_eq!(f, vec![2, 3, 4, 5]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inadmissible_superposition_term_is_zero() {
        let foam = Foam2Complex::from_tetrahedra(&[[0, 1, 2, 3]], Gluing::OneByOne).unwrap();
        let assignment: BTreeMap<usize, Spin> = (0..6).map(|f| (f, Spin::HALF)).collect();
        let b = BoundaryState::Superposition(vec![(Complex64::new(1.0, 0.0), assignment)]);
        assert_eq!(pr_transition(&foam, &b, Spin::ONE).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn internal_face_sum_saturates_in_j_max() {
        let tets = [[0, 1, 2, 3], [0, 1, 3, 4], [0, 1, 4, 2]];
        let foam = Foam2Complex::from_tetrahedra(&tets, Gluing::Free).unwrap();
        let b = BoundaryState::pinned(foam.boundary_faces().iter().map(|&f| (f, Spin::ONE)));
        let lo = pr_transition(&foam, &b, Spin::integer(2)).unwrap();
        let hi = pr_transition(&foam, &b, Spin::integer(3)).unwrap();
        assert!(lo.norm() > 0.0);
        assert!((lo - hi).norm() <= 1e-12 * lo.norm());
    }
}
