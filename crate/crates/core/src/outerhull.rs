//! Outer face initialization, edge fans and the chamber walk.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chambers::{all_chambers, orders_facing_away, ChamberError};
use crate::complex::{ComplexError, EdgeId, EmbeddedComplex, FaceId, VertexId};
use crate::geom::{Mat3, Point3, Tolerance, Vector3};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error("edge {0:?} has fewer than two faces")]
    OpenBoundary([VertexId; 2]),
    #[error("face {0} is degenerate")]
    DegenerateFace(FaceId),
    #[error("maximal x-coordinate stays tied after {0} random rotations")]
    UnresolvedTie(usize),
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

/// Which side of a face: along (`Pos`) or against (`Neg`) the normal
/// `(b - a) x (c - a)` of its sorted vertex triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Pos,
    Neg,
}

impl Side {
    pub fn sign<T: Scalar>(self) -> T {
        match self {
            Side::Pos => T::one(),
            Side::Neg => -T::one(),
        }
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Pos => Side::Neg,
            Side::Neg => Side::Pos,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::Pos => 0,
            Side::Neg => 1,
        }
    }

    /// Side whose normal has a non-negative dot product with `n`.
    pub fn facing<T: Scalar>(canonical: Vector3<T>, n: Vector3<T>) -> Side {
        if canonical.dot(n) >= T::zero() {
            Side::Pos
        } else {
            Side::Neg
        }
    }
}

/// An oriented face side.
pub type FaceSide = (FaceId, Side);

/// Face on the outer hull together with its outward unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartPair<T> {
    pub face: FaceId,
    pub normal: Vector3<T>,
    pub side: Side,
    pub vertex: VertexId,
    pub edge: EdgeId,
}

/// Unit normal of the sorted triple of face `f`.
pub fn unit_normal<T: Scalar>(x: &EmbeddedComplex<T>, f: FaceId) -> Result<Vector3<T>, HullError> {
    x.face_normal_raw(f).normalized().ok_or(HullError::DegenerateFace(f))
}

fn select_start<T: Scalar>(x: &EmbeddedComplex<T>, coords: &[Point3<T>], tol: &Tolerance<T>) -> Option<(VertexId, EdgeId, FaceId)> {
    let c = &x.complex;
    let mut v = 0;
    for (i, p) in coords.iter().enumerate() {
        if p.x > coords[v].x {
            v = i;
        }
    }
    let ties = coords.iter().filter(|p| p.x >= coords[v].x - tol.eps_point).count();
    if ties > 1 {
        return None;
    }
    let rel = T::lit(1e-12);
    let mut best_e: Option<(T, EdgeId)> = None;
    for &e in c.vertex_edges(v) {
        let [a, b] = c.edge(e);
        let d = coords[a] - coords[b];
        let r = d.x.abs() / d.norm();
        if best_e.is_none_or(|(br, _)| r < br - rel) {
            best_e = Some((r, e));
        }
    }
    let e = best_e?.1;
    let mut best_f: Option<(T, FaceId)> = None;
    for &f in c.edge_faces(e) {
        let t = c.face(f);
        let n = (coords[t[1]] - coords[t[0]]).cross(coords[t[2]] - coords[t[0]]);
        let nx = n.x.abs() / n.norm();
        if best_f.is_none_or(|(bn, _)| nx > bn + rel) {
            best_f = Some((nx, f));
        }
    }
    Some((v, e, best_f?.1))
}

/// Outer face and outward normal: the vertex with maximal x, its edge most
/// orthogonal to the x-axis, and the face on that edge with the largest
/// |n_x|. The normal is negated when its x-component is negative.
///
/// A tie on the maximal x is broken by a seeded random rotation of a
/// coordinate copy; the selection is mapped back to the input frame.
pub fn initial_face<T: Scalar>(x: &EmbeddedComplex<T>, tol: &Tolerance<T>, seed: u64) -> Result<StartPair<T>, HullError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rot = Mat3::identity();
    const ATTEMPTS: usize = 16;
    for _ in 0..ATTEMPTS {
        let coords: Vec<Point3<T>> = x.coords().iter().map(|&p| rot.apply(p)).collect();
        if let Some((vertex, edge, face)) = select_start(x, &coords, tol) {
            let t = x.complex.face(face);
            let mut n = (coords[t[1]] - coords[t[0]])
                .cross(coords[t[2]] - coords[t[0]])
                .normalized()
                .ok_or(HullError::DegenerateFace(face))?;
            if n.x < T::zero() {
                n = -n;
            }
            let normal = rot.transpose().apply(n);
            let side = Side::facing(x.face_normal_raw(face), normal);
            return Ok(StartPair { face, normal, side, vertex, edge });
        }
        rot = random_rotation(&mut rng);
    }
    Err(HullError::UnresolvedTie(ATTEMPTS))
}

/// Uniformly distributed rotation from a random unit quaternion.
pub fn random_rotation<T: Scalar>(rng: &mut ChaCha8Rng) -> Mat3<T> {
    use rand::Rng;
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin(), b * (tau * u3).cos());
    let m = [
        [1. - 2. * (y * y + z * z), 2. * (x * y - z * w), 2. * (x * z + y * w)],
        [2. * (x * y + z * w), 1. - 2. * (x * x + z * z), 2. * (y * z - x * w)],
        [2. * (x * z - y * w), 2. * (y * z + x * w), 1. - 2. * (x * x + y * y)],
    ];
    Mat3::new(m.map(|r| r.map(T::lit)))
}

/// Faces around one edge ordered by angle about the edge axis.
///
/// The axis points from the lower to the higher vertex id. Angles are
/// measured in `[0, 2π)` from the apex direction of the lowest-id face,
/// counter-clockwise when looking down the axis.
#[derive(Debug, Clone)]
pub struct EdgeFan<T> {
    pub edge: EdgeId,
    pub axis: Vector3<T>,
    /// `(face, angle)` with strictly increasing angles.
    pub faces: Vec<(FaceId, T)>,
    /// Unit in-plane direction from the edge towards each face's apex.
    pub dirs: Vec<Vector3<T>>,
}

impl<T: Scalar> EdgeFan<T> {
    pub fn new(x: &EmbeddedComplex<T>, e: EdgeId) -> Result<Self, HullError> {
        let c = &x.complex;
        let [lo, hi] = c.edge(e);
        let (p, q) = (x.point(lo), x.point(hi));
        let axis = (q - p).normalized().ok_or(HullError::OpenBoundary([lo, hi]))?;
        let mut inc: Vec<FaceId> = c.edge_faces(e).to_vec();
        inc.sort_unstable();
        let perp = |f: FaceId| -> Result<Vector3<T>, HullError> {
            let r = x.point(c.apex(f, e)) - p;
            (r - axis * r.dot(axis)).normalized().ok_or(HullError::DegenerateFace(f))
        };
        let xh = perp(inc[0])?;
        let yh = axis.cross(xh);
        let mut items: Vec<(FaceId, T, Vector3<T>)> = Vec::with_capacity(inc.len());
        for &f in &inc {
            let u = perp(f)?;
            let mut a = u.dot(yh).atan2(u.dot(xh));
            if a < T::zero() {
                a = a + T::TAU();
            }
            if f == inc[0] {
                a = T::zero();
            }
            items.push((f, a, u));
        }
        items.sort_by(|s, t| s.1.partial_cmp(&t.1).unwrap_or(std::cmp::Ordering::Equal).then(s.0.cmp(&t.0)));
        Ok(Self {
            edge: e,
            axis,
            faces: items.iter().map(|&(f, a, _)| (f, a)).collect(),
            dirs: items.iter().map(|&(_, _, u)| u).collect(),
        })
    }

    pub fn position(&self, f: FaceId) -> Option<usize> {
        self.faces.iter().position(|&(g, _)| g == f)
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Whether the given side of fan face `i` faces increasing angle.
    pub fn faces_increasing(&self, x: &EmbeddedComplex<T>, i: usize, side: Side) -> bool {
        let n = x.face_normal_raw(self.faces[i].0) * side.sign::<T>();
        n.dot(self.axis.cross(self.dirs[i])) > T::zero()
    }

    /// The face reached by rotating from `from`'s oriented side about the
    /// edge, with the side of that face that looks back at `from`.
    pub fn upward_continuation(&self, x: &EmbeddedComplex<T>, from: FaceId, side: Side) -> FaceSide {
        let i = self.position(from).expect("face belongs to fan");
        let k = self.faces.len();
        let (j, want_increasing) = if self.faces_increasing(x, i, side) {
            ((i + 1) % k, false)
        } else {
            ((i + k - 1) % k, true)
        };
        let g = self.faces[j].0;
        let s = if self.faces_increasing(x, j, Side::Pos) == want_increasing { Side::Pos } else { Side::Neg };
        (g, s)
    }
}

/// Fans of every edge of `x`.
pub fn edge_fans<T: Scalar>(x: &EmbeddedComplex<T>) -> Result<Vec<EdgeFan<T>>, HullError> {
    (0..x.complex.num_edges())
        .map(|e| {
            if x.complex.edge_faces(e).len() < 2 {
                Err(HullError::OpenBoundary(x.complex.edge(e)))
            } else {
                EdgeFan::new(x, e)
            }
        })
        .collect()
}

/// Face sides bounding one chamber, reached from `start` by upward
/// continuation across edges. Sorted by face, then side.
pub fn extract_chamber<T: Scalar>(x: &EmbeddedComplex<T>, fans: &[EdgeFan<T>], start: FaceSide) -> Vec<FaceSide> {
    let mut seen = vec![[false; 2]; x.complex.num_faces()];
    let mut queue = VecDeque::from([start]);
    seen[start.0][start.1.index()] = true;
    let mut out = Vec::new();
    while let Some((f, s)) = queue.pop_front() {
        out.push((f, s));
        for e in x.complex.face_edges(f) {
            let (g, t) = fans[e].upward_continuation(x, f, s);
            if !seen[g][t.index()] {
                seen[g][t.index()] = true;
                queue.push_back((g, t));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Boundary of the unbounded chamber as a complex.
pub fn outer_hull<T: Scalar>(x: &EmbeddedComplex<T>, tol: &Tolerance<T>, seed: u64) -> Result<EmbeddedComplex<T>, ChamberError> {
    Ok(oriented_outer_hull(x, tol, seed)?.0)
}

/// Outer hull with outward cyclic face orders (normals into the unbounded
/// chamber).
pub fn oriented_outer_hull<T: Scalar>(
    x: &EmbeddedComplex<T>,
    tol: &Tolerance<T>,
    seed: u64,
) -> Result<(EmbeddedComplex<T>, Vec<[VertexId; 3]>), ChamberError> {
    let lab = all_chambers(x, tol, seed)?;
    let sides = &lab.chambers[lab.unbounded].sides;
    let mut faces: Vec<FaceId> = sides.iter().map(|&(f, _)| f).collect();
    faces.dedup();
    let (hull, back) = x.restrict_to_faces(&faces)?;
    // Sides look into the unbounded chamber, so flip the "facing away" orders.
    let orders = orders_facing_away(&x.complex, sides, &faces, &back).into_iter().map(|[a, b, c]| [a, c, b]).collect();
    Ok((hull, orders))
}
