//! Orbit machinery for a known orthogonal symmetry group.
//!
//! Matrices are checked once and turned into vertex and face permutations;
//! everything after that works on integers. Intersections are computed for
//! one representative per orbit of unordered face pairs and copied to the
//! rest of the orbit with the witness matrices. Retriangulations are
//! transferred the same way.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::complex::{sorted_triple, EmbeddedComplex, FaceId, VertexId};
use crate::geom::{Mat3, Point3, PointWelder, Tolerance, Vector3};
use crate::intersect::{test_pairs, IntersectError, IntersectionMap, IntersectionSegment};
use crate::retriangulate::{
    conform, face_subdivision, rebuild_complex, triangulate_face, FaceTriangulation, PlanarSubdivision, Rebuilt,
    RetriangulateError,
};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("no group elements given")]
    Empty,
    #[error("element {0} is not orthogonal (defect {1})")]
    NotOrthogonal(usize, f64),
    #[error("element {element} does not map vertex {vertex} onto a vertex")]
    NotInvariant { element: usize, vertex: VertexId },
    #[error("element {element} does not map face {face} onto a face")]
    FaceNotInvariant { element: usize, face: FaceId },
    #[error("not a group: {0}")]
    NotAGroup(String),
    #[error("no triangulation for orbit representative {0}")]
    MissingRep(FaceId),
    #[error(transparent)]
    Intersect(#[from] IntersectError),
    #[error(transparent)]
    Retriangulate(#[from] RetriangulateError),
}

/// A verified finite group of orthogonal matrices leaving a complex
/// invariant, with the permutations it induces.
#[derive(Debug, Clone)]
pub struct SymmetryGroup<T> {
    pub matrices: Vec<Mat3<T>>,
    /// `vperm[g][v]`: image of vertex `v` under element `g`.
    pub vperm: Vec<Vec<VertexId>>,
    /// `fperm[g][f]`: image of face `f` under element `g`.
    pub fperm: Vec<Vec<FaceId>>,
}

impl<T: Scalar> SymmetryGroup<T> {
    pub fn order(&self) -> usize {
        self.matrices.len()
    }
}

/// Vertex permutation induced by `m`, by nearest-image matching.
fn induced_vertex_perm<T: Scalar>(
    coords: &[Point3<T>],
    welder: &PointWelder<T>,
    m: &Mat3<T>,
    element: usize,
) -> Result<Vec<VertexId>, SymmetryError> {
    let mut perm = Vec::with_capacity(coords.len());
    let mut hit = vec![false; coords.len()];
    for (v, &p) in coords.iter().enumerate() {
        let w = welder.find(m.apply(p)).ok_or(SymmetryError::NotInvariant { element, vertex: v })?;
        if hit[w] {
            return Err(SymmetryError::NotInvariant { element, vertex: v });
        }
        hit[w] = true;
        perm.push(w);
    }
    Ok(perm)
}

/// Checks orthogonality, invariance and the group axioms.
pub fn verify_group<T: Scalar>(
    x: &EmbeddedComplex<T>,
    matrices: &[Mat3<T>],
    tol: &Tolerance<T>,
) -> Result<SymmetryGroup<T>, SymmetryError> {
    if matrices.is_empty() {
        return Err(SymmetryError::Empty);
    }
    for (i, m) in matrices.iter().enumerate() {
        let d = m.orthogonality_defect();
        if !(d <= tol.eps_angle) {
            return Err(SymmetryError::NotOrthogonal(i, d.as_f64()));
        }
    }
    let mut welder = PointWelder::new(tol.eps_point);
    for &p in x.coords() {
        welder.push_unchecked(p);
    }
    let vperm: Vec<Vec<VertexId>> = matrices
        .par_iter()
        .enumerate()
        .map(|(i, m)| induced_vertex_perm(x.coords(), &welder, m, i))
        .collect::<Result<_, _>>()?;
    let c = &x.complex;
    let fperm: Vec<Vec<FaceId>> = vperm
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            (0..c.num_faces())
                .map(|f| {
                    let t = c.face(f);
                    c.face_id([p[t[0]], p[t[1]], p[t[2]]]).ok_or(SymmetryError::FaceNotInvariant { element: i, face: f })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let index: HashMap<&[VertexId], usize> = vperm.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
    if index.len() != vperm.len() {
        return Err(SymmetryError::NotAGroup("two elements induce the same permutation".into()));
    }
    let identity: Vec<VertexId> = (0..x.complex.num_vertices()).collect();
    if !index.contains_key(identity.as_slice()) {
        return Err(SymmetryError::NotAGroup("identity missing".into()));
    }
    let missing = (0..vperm.len()).into_par_iter().find_map_any(|i| {
        let mut comp = vec![0; identity.len()];
        for j in 0..vperm.len() {
            for v in 0..comp.len() {
                comp[v] = vperm[i][vperm[j][v]];
            }
            if !index.contains_key(comp.as_slice()) {
                return Some((i, j));
            }
        }
        None
    });
    if let Some((i, j)) = missing {
        return Err(SymmetryError::NotAGroup(format!("product of elements {i} and {j} is not in the set")));
    }
    Ok(SymmetryGroup { matrices: matrices.to_vec(), vperm, fperm })
}

/// Face transversal, witnesses, stabilizers and pair representatives.
#[derive(Debug, Clone)]
pub struct OrbitDecomposition {
    /// Representatives in increasing face order.
    pub face_reps: Vec<FaceId>,
    /// `orbit_of[f] = (rep index, g)` with `g · face_reps[rep] = f`.
    pub orbit_of: Vec<(usize, usize)>,
    /// Stabilizer of each representative, as element indices.
    pub stabilizers: Vec<Vec<usize>>,
    /// For each representative `r`, faces `f'` such that the unordered pairs
    /// `{r, f'}` represent every orbit of face pairs exactly once.
    pub pair_reps: Vec<Vec<FaceId>>,
}

impl OrbitDecomposition {
    pub fn num_orbits(&self) -> usize {
        self.face_reps.len()
    }

    pub fn num_pair_reps(&self) -> usize {
        self.pair_reps.iter().map(Vec::len).sum()
    }

    /// All representative pairs `(r, f')`.
    pub fn pairs(&self) -> Vec<(FaceId, FaceId)> {
        self.face_reps
            .iter()
            .zip(&self.pair_reps)
            .flat_map(|(&r, fs)| fs.iter().map(move |&f| (r, f)))
            .collect()
    }
}

struct PairBits {
    n: usize,
    bits: Vec<u64>,
}

impl PairBits {
    fn new(n: usize) -> Self {
        Self { n, bits: vec![0; (n * n).div_ceil(64)] }
    }

    fn idx(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        a * self.n + b
    }

    fn get(&self, a: usize, b: usize) -> bool {
        let i = self.idx(a, b);
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, a: usize, b: usize) {
        let i = self.idx(a, b);
        self.bits[i / 64] |= 1 << (i % 64);
    }
}

pub fn face_orbits<T: Scalar>(x: &EmbeddedComplex<T>, g: &SymmetryGroup<T>) -> OrbitDecomposition {
    let nf = x.complex.num_faces();
    let mut orbit_of = vec![(usize::MAX, 0); nf];
    let mut face_reps = Vec::new();
    let mut stabilizers = Vec::new();
    for f in 0..nf {
        if orbit_of[f].0 != usize::MAX {
            continue;
        }
        let r = face_reps.len();
        face_reps.push(f);
        let mut stab = Vec::new();
        for (k, p) in g.fperm.iter().enumerate() {
            let img = p[f];
            if orbit_of[img].0 == usize::MAX {
                orbit_of[img] = (r, k);
            }
            if img == f {
                stab.push(k);
            }
        }
        stabilizers.push(stab);
    }
    let mut seen = PairBits::new(nf);
    let mut pair_reps = vec![Vec::new(); face_reps.len()];
    for (ri, &r) in face_reps.iter().enumerate() {
        for f in 0..nf {
            if f == r || seen.get(r, f) {
                continue;
            }
            pair_reps[ri].push(f);
            for p in &g.fperm {
                seen.set(p[r], p[f]);
            }
        }
    }
    OrbitDecomposition { face_reps, orbit_of, stabilizers, pair_reps }
}

/// Orbit count as the average number of fixed points.
pub fn burnside_orbit_count(perms: &[Vec<usize>]) -> usize {
    let fixed: usize = perms.iter().map(|p| p.iter().enumerate().filter(|&(i, &j)| i == j).count()).sum();
    debug_assert_eq!(fixed % perms.len(), 0);
    fixed / perms.len()
}

/// Maps a segment through element `k`.
fn map_segment<T: Scalar>(g: &SymmetryGroup<T>, k: usize, s: &IntersectionSegment<T>) -> IntersectionSegment<T> {
    let m = &g.matrices[k];
    let p = &g.fperm[k];
    IntersectionSegment::new(p[s.face_a], p[s.face_b], m.apply(s.p0), m.apply(s.p1), s.kind)
}

/// Intersections from representative pairs only, copied across orbits.
pub fn symmetric_all_intersections<T: Scalar>(
    x: &EmbeddedComplex<T>,
    g: &SymmetryGroup<T>,
    orbits: &OrbitDecomposition,
    tol: &Tolerance<T>,
) -> Result<IntersectionMap<T>, SymmetryError> {
    let pairs = orbits.pairs();
    let (segs, stats) = test_pairs(x, &pairs, tol)?;
    // Group representative results by pair.
    let mut by_pair: Vec<((FaceId, FaceId), Vec<IntersectionSegment<T>>)> = Vec::new();
    for s in segs {
        let key = (s.face_a, s.face_b);
        match by_pair.last_mut() {
            Some((k, v)) if *k == key => v.push(s),
            _ => by_pair.push((key, vec![s])),
        }
    }
    let mut out = Vec::new();
    let mut done: HashSet<(FaceId, FaceId)> = HashSet::new();
    for ((a, b), list) in &by_pair {
        for k in 0..g.order() {
            let (ga, gb) = (g.fperm[k][*a], g.fperm[k][*b]);
            let key = (ga.min(gb), ga.max(gb));
            if done.insert(key) {
                out.extend(list.iter().map(|s| map_segment(g, k, s)));
            }
        }
    }
    Ok(IntersectionMap::from_segments(x.complex.num_faces(), out, stats))
}

/// Per-face triangulations from representative ones: face `g · r` gets
/// `g` applied to the triangles of `r`.
pub fn transfer_retriangulations<T: Scalar>(
    x: &EmbeddedComplex<T>,
    g: &SymmetryGroup<T>,
    orbits: &OrbitDecomposition,
    rep_tris: &HashMap<FaceId, FaceTriangulation<T>>,
) -> Result<Vec<FaceTriangulation<T>>, SymmetryError> {
    (0..x.complex.num_faces())
        .map(|f| {
            let (ri, k) = orbits.orbit_of[f];
            let r = orbits.face_reps[ri];
            let tris = rep_tris.get(&r).ok_or(SymmetryError::MissingRep(r))?;
            let m = &g.matrices[k];
            Ok(tris.iter().map(|t| t.map(|p| m.apply(p))).collect())
        })
        .collect()
}

/// Retriangulation computing subdivisions for orbit representatives only.
pub fn symmetric_retriangulate<T: Scalar>(
    x: &EmbeddedComplex<T>,
    g: &SymmetryGroup<T>,
    orbits: &OrbitDecomposition,
    map: &IntersectionMap<T>,
    tol: &Tolerance<T>,
    recheck: bool,
) -> Result<Rebuilt<T>, SymmetryError> {
    let reps = &orbits.face_reps;
    let built: Vec<(FaceId, PlanarSubdivision<T>)> = reps
        .par_iter()
        .filter(|&&f| map.face_segments(f).next().is_some())
        .map(|&f| face_subdivision(x, map, f, tol).map(|l| (f, l)))
        .collect::<Result<_, _>>()?;
    let mut subs: Vec<Option<PlanarSubdivision<T>>> = vec![None; x.complex.num_faces()];
    for (f, l) in built {
        subs[f] = Some(l);
    }
    let mut pool: Vec<Point3<T>> = Vec::new();
    for l in subs.iter().flatten() {
        for &p in &l.points {
            for m in &g.matrices {
                pool.push(m.apply(p));
            }
        }
    }
    for s in map.segments() {
        pool.push(s.p0);
        pool.push(s.p1);
    }
    conform(x, &mut subs, reps, &pool, tol)?;
    let rep_tris: HashMap<FaceId, FaceTriangulation<T>> = reps
        .par_iter()
        .map(|&f| {
            let tris = match subs[f].clone() {
                Some(l) => triangulate_face(l)?,
                None => vec![x.face_points(f)],
            };
            Ok((f, tris))
        })
        .collect::<Result<_, RetriangulateError>>()?;
    let tris = transfer_retriangulations(x, g, orbits, &rep_tris)?;
    Ok(rebuild_complex(x, &tris, tol, recheck)?)
}

/// Whether every element maps the vertex set onto itself within `eps_point`.
pub fn vertex_set_invariant<T: Scalar>(x: &EmbeddedComplex<T>, matrices: &[Mat3<T>], tol: &Tolerance<T>) -> bool {
    let mut welder = PointWelder::new(tol.eps_point);
    for &p in x.coords() {
        welder.push_unchecked(p);
    }
    matrices.iter().all(|m| x.coords().iter().all(|&p| welder.find(m.apply(p)).is_some()))
}

/// Whether the face set is invariant, using nearest-image vertex matching.
pub fn complex_invariant<T: Scalar>(x: &EmbeddedComplex<T>, matrices: &[Mat3<T>], tol: &Tolerance<T>) -> bool {
    let mut welder = PointWelder::new(tol.eps_point);
    for &p in x.coords() {
        welder.push_unchecked(p);
    }
    matrices.iter().enumerate().all(|(i, m)| match induced_vertex_perm(x.coords(), &welder, m, i) {
        Ok(p) => x.complex.faces().iter().all(|t| x.complex.face_id(sorted_triple([p[t[0]], p[t[1]], p[t[2]]])).is_some()),
        Err(_) => false,
    })
}

/// Rotations by multiples of 2π/n about `axis`.
pub fn cyclic_group<T: Scalar>(n: usize, axis: Vector3<T>) -> Vec<Mat3<T>> {
    (0..n).map(|k| Mat3::rotation(axis, T::TAU() * T::of_usize(k) / T::of_usize(n))).collect()
}

/// Cyclic group about `axis` extended by the half-turn about `flip`
/// (perpendicular to `axis`); order 2n.
pub fn dihedral_group<T: Scalar>(n: usize, axis: Vector3<T>, flip: Vector3<T>) -> Vec<Mat3<T>> {
    let mut g = cyclic_group(n, axis);
    let h = Mat3::rotation(flip, T::PI());
    let extra: Vec<Mat3<T>> = g.iter().map(|m| m.mul(&h)).collect();
    g.extend(extra);
    g
}

/// Closure of `generators` under multiplication, identity first. Matrices
/// closer than `1e-9` entrywise are identified. Stops at `limit` elements.
pub fn close_group<T: Scalar>(generators: &[Mat3<T>], limit: usize) -> Vec<Mat3<T>> {
    let same = |a: &Mat3<T>, b: &Mat3<T>| a.max_abs_diff(b) <= T::lit(1e-9);
    let mut out = vec![Mat3::identity()];
    let mut frontier = 0;
    while frontier < out.len() && out.len() < limit {
        let m = out[frontier];
        frontier += 1;
        for g in generators {
            let p = g.mul(&m);
            if !out.iter().any(|q| same(q, &p)) {
                out.push(p);
                if out.len() >= limit {
                    break;
                }
            }
        }
    }
    out
}

/// Full symmetry group (order 120) of the icosahedron with vertices
/// `(0, ±1, ±φ)` and cyclic permutations.
pub fn icosahedral_group<T: Scalar>() -> Vec<Mat3<T>> {
    let phi = (T::one() + T::lit(5.0).sqrt()) / T::lit(2.0);
    let axis5 = Point3::new(T::zero(), T::one(), phi);
    let gens = [
        Mat3::rotation(axis5, T::TAU() / T::lit(5.0)),
        Mat3::new([
            [T::zero(), T::one(), T::zero()],
            [T::zero(), T::zero(), T::one()],
            [T::one(), T::zero(), T::zero()],
        ]),
        Mat3::new([
            [-T::one(), T::zero(), T::zero()],
            [T::zero(), -T::one(), T::zero()],
            [T::zero(), T::zero(), -T::one()],
        ]),
    ];
    close_group(&gens, 1000)
}
