//! Partition of all face sides into chambers, with per-chamber invariants
//! and exploded views.
//!
//! The edge walk of [`extract_chamber`] only follows faces connected through
//! edges, so a chamber whose boundary has several components (a box with a
//! floating box inside, two solids touching at a vertex) is found as several
//! shells. Shells that enclose their side with positive volume are outer
//! boundaries of bounded chambers. Every other shell is attached to the
//! chamber its side looks into, found by casting a ray.

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::complex::{euler_characteristic, ComplexError, EmbeddedComplex, FaceId, UnionFind, VertexId};
use crate::geom::{det3, Point3, Tolerance, Vector3};
use crate::outerhull::{edge_fans, extract_chamber, initial_face, FaceSide, HullError, Side};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChamberError {
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("could not resolve the chamber of shell {0}: every ray grazed an edge")]
    AmbiguousRay(usize),
}

#[derive(Debug, Clone)]
pub struct Chamber<T> {
    /// Face sides looking into the chamber, sorted.
    pub sides: Vec<FaceSide>,
    /// Walk shells making up the boundary.
    pub shells: Vec<usize>,
    /// Enclosed volume; `None` for the unbounded chamber.
    pub volume: Option<T>,
    /// Mean of the distinct boundary vertices.
    pub centroid: Point3<T>,
    /// Euler characteristic of the boundary, each face counted once.
    pub euler: i64,
}

impl<T> Chamber<T> {
    pub fn is_bounded(&self) -> bool {
        self.volume.is_some()
    }

    pub fn faces(&self) -> Vec<FaceId> {
        let mut f: Vec<FaceId> = self.sides.iter().map(|s| s.0).collect();
        f.dedup();
        f
    }
}

/// Chamber label of every face side.
#[derive(Debug, Clone)]
pub struct ChamberLabeling<T> {
    /// `label[f][side.index()]`
    pub label: Vec<[usize; 2]>,
    pub chambers: Vec<Chamber<T>>,
    pub unbounded: usize,
    pub num_shells: usize,
}

impl<T: Scalar> ChamberLabeling<T> {
    pub fn chamber_of(&self, s: FaceSide) -> usize {
        self.label[s.0][s.1.index()]
    }

    pub fn bounded(&self) -> impl Iterator<Item = (usize, &Chamber<T>)> {
        self.chambers.iter().enumerate().filter(|(_, c)| c.is_bounded())
    }

    pub fn num_bounded(&self) -> usize {
        self.chambers.len() - 1
    }
}

/// `Σ σ det[a, b, c] / 6` over the sides, with `σ` the side sign.
fn signed_side_volume<T: Scalar>(x: &EmbeddedComplex<T>, sides: &[FaceSide]) -> T {
    sides.iter().fold(T::zero(), |acc, &(f, s)| {
        let [a, b, c] = x.face_points(f);
        acc + det3(a, b, c) * s.sign::<T>()
    }) / T::lit(6.0)
}

/// Volume bounded by face sides that consistently face one region.
pub fn chamber_volume<T: Scalar>(x: &EmbeddedComplex<T>, sides: &[FaceSide]) -> T {
    signed_side_volume(x, sides).abs()
}

enum RayHit {
    Miss,
    Hit(FaceSide),
    Grazing,
}

/// First face hit by the ray `o + t d`, `t > t_min`, ignoring `skip`.
fn cast_ray<T: Scalar>(x: &EmbeddedComplex<T>, o: Point3<T>, d: Vector3<T>, skip: FaceId, t_min: T) -> RayHit {
    let graze = T::lit(1e-7);
    let mut best: Option<(T, FaceSide)> = None;
    let mut grazing_t: Option<T> = None;
    for f in 0..x.complex.num_faces() {
        if f == skip {
            continue;
        }
        let [a, b, c] = x.face_points(f);
        let (e1, e2) = (b - a, c - a);
        let pv = d.cross(e2);
        let det = e1.dot(pv);
        if det.abs() <= T::lit(1e-12) * e1.norm() * e2.norm() {
            continue;
        }
        let inv = T::one() / det;
        let s = o - a;
        let u = s.dot(pv) * inv;
        let qv = s.cross(e1);
        let v = d.dot(qv) * inv;
        let t = e2.dot(qv) * inv;
        if t <= t_min || u < -graze || v < -graze || u + v > T::one() + graze {
            continue;
        }
        if u < graze || v < graze || u + v > T::one() - graze {
            grazing_t = Some(grazing_t.map_or(t, |g| g.min(t)));
            continue;
        }
        if best.is_none_or(|(bt, _)| t < bt) {
            let n = e1.cross(e2);
            let side = if n.dot(d) < T::zero() { Side::Pos } else { Side::Neg };
            best = Some((t, (f, side)));
        }
    }
    match (best, grazing_t) {
        (_, Some(g)) if best.is_none_or(|(bt, _)| g <= bt) => RayHit::Grazing,
        (Some((_, fs)), _) => RayHit::Hit(fs),
        (None, _) => RayHit::Miss,
    }
}

/// Labels every face side of a closed, intersection-free complex.
///
/// Chamber 0 is unbounded; bounded chambers follow in the order their
/// outer shells were discovered. `seed` drives the start-face tie-break and
/// the ray perturbations.
pub fn all_chambers<T: Scalar>(x: &EmbeddedComplex<T>, tol: &Tolerance<T>, seed: u64) -> Result<ChamberLabeling<T>, ChamberError> {
    let nf = x.complex.num_faces();
    let fans = edge_fans(x)?;
    let mut shell_of = vec![[usize::MAX; 2]; nf];
    let mut shells: Vec<Vec<FaceSide>> = Vec::new();
    for f in 0..nf {
        for s in [Side::Pos, Side::Neg] {
            if shell_of[f][s.index()] != usize::MAX {
                continue;
            }
            let sides = extract_chamber(x, &fans, (f, s));
            for &(g, t) in &sides {
                shell_of[g][t.index()] = shells.len();
            }
            shells.push(sides);
        }
    }
    let start = initial_face(x, tol, seed)?;
    let outer_shell = shell_of[start.face][start.side.index()];
    // Volume enclosed with outward normals = -(chamber-facing sum).
    let vols: Vec<T> = shells.par_iter().map(|s| -signed_side_volume(x, s)).collect();

    let ns = shells.len();
    // Node `ns` stands for the unbounded region.
    let mut uf = UnionFind::new(ns + 1);
    uf.union(outer_shell, ns);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let t_min = tol.eps_point;
    for (si, sides) in shells.iter().enumerate() {
        if si == outer_shell || vols[si] > T::zero() {
            continue;
        }
        let mut resolved = false;
        'tries: for attempt in 0..64 {
            let (f, s) = sides[attempt % sides.len()];
            let [a, b, c] = x.face_points(f);
            let w: [f64; 3] = if attempt == 0 {
                [0.31, 0.33, 0.36]
            } else {
                let (u, v) = (rng.gen_range(0.1..0.8), rng.gen_range(0.1..0.8));
                let (u, v) = if u + v > 0.9 { (0.9 - v, 0.9 - u) } else { (u, v) };
                [1.0 - u - v, u, v]
            };
            let o = a * T::lit(w[0]) + b * T::lit(w[1]) + c * T::lit(w[2]);
            let n = x.face_normal_raw(f).normalized().expect("non-degenerate face") * s.sign::<T>();
            let jitter = Point3::new(
                T::lit(rng.gen_range(-0.2..0.2)),
                T::lit(rng.gen_range(-0.2..0.2)),
                T::lit(rng.gen_range(-0.2..0.2)),
            );
            let d = (n + jitter).normalized().unwrap_or(n);
            match cast_ray(x, o, d, f, t_min) {
                RayHit::Miss => {
                    uf.union(si, ns);
                    resolved = true;
                    break 'tries;
                }
                RayHit::Hit(h) => {
                    uf.union(si, shell_of[h.0][h.1.index()]);
                    resolved = true;
                    break 'tries;
                }
                RayHit::Grazing => continue,
            }
        }
        if !resolved {
            return Err(ChamberError::AmbiguousRay(si));
        }
    }

    // Chamber ids: unbounded first, then groups in order of first shell.
    let root_unbounded = uf.find(ns);
    let mut chamber_of_root = std::collections::HashMap::new();
    chamber_of_root.insert(root_unbounded, 0usize);
    let mut members: Vec<Vec<usize>> = vec![Vec::new()];
    for si in 0..ns {
        let r = uf.find(si);
        let id = *chamber_of_root.entry(r).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[id].push(si);
    }
    debug!("{} shells grouped into {} chambers", ns, members.len());

    let mut label = vec![[usize::MAX; 2]; nf];
    for (id, group) in members.iter().enumerate() {
        for &si in group {
            for &(f, s) in &shells[si] {
                label[f][s.index()] = id;
            }
        }
    }
    let chambers: Vec<Chamber<T>> = members
        .par_iter()
        .enumerate()
        .map(|(id, group)| {
            let mut sides: Vec<FaceSide> = group.iter().flat_map(|&si| shells[si].iter().copied()).collect();
            sides.sort_unstable();
            let volume = (id != 0).then(|| group.iter().fold(T::zero(), |acc, &si| acc + vols[si]));
            let mut faces: Vec<FaceId> = sides.iter().map(|s| s.0).collect();
            faces.dedup();
            let (sub, _) = x.restrict_to_faces(&faces)?;
            Ok(Chamber { sides, shells: group.clone(), volume, centroid: sub.centroid(), euler: euler_characteristic(&sub.complex) })
        })
        .collect::<Result<_, ComplexError>>()?;
    Ok(ChamberLabeling { label, chambers, unbounded: 0, num_shells: ns })
}

/// Bounded chamber containing `p`, if any, found by casting rays from `p`.
pub fn chamber_containing<T: Scalar>(x: &EmbeddedComplex<T>, lab: &ChamberLabeling<T>, p: Point3<T>, seed: u64) -> Option<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        let d = Point3::new(
            T::lit(rng.gen_range(-1.0..1.0)),
            T::lit(rng.gen_range(-1.0..1.0)),
            T::lit(rng.gen_range(-1.0..1.0)),
        );
        let Some(d) = d.normalized() else { continue };
        match cast_ray(x, p, d, usize::MAX, T::zero()) {
            RayHit::Miss => return Some(lab.unbounded),
            RayHit::Hit(fs) => return Some(lab.chamber_of(fs)),
            RayHit::Grazing => continue,
        }
    }
    None
}

/// One bounded chamber moved away from the centre.
#[derive(Debug, Clone)]
pub struct ExplodedChamber<T> {
    pub id: usize,
    pub mesh: EmbeddedComplex<T>,
    pub translation: Vector3<T>,
    pub volume: T,
    pub euler: i64,
    /// Cyclic vertex order of each mesh face with the normal pointing out
    /// of the chamber.
    pub orders: Vec<[VertexId; 3]>,
}

/// Face orders of `sides` (restricted to `faces`, renumbered by `back`)
/// whose normals point away from the region the sides look into.
pub fn orders_facing_away(
    x: &crate::complex::SimplicialComplex,
    sides: &[FaceSide],
    faces: &[FaceId],
    back: &[VertexId],
) -> Vec<[VertexId; 3]> {
    let fwd: std::collections::HashMap<VertexId, VertexId> = back.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    faces
        .iter()
        .map(|&f| {
            let s = sides.iter().find(|q| q.0 == f).map(|q| q.1).unwrap_or(Side::Pos);
            let [a, b, c] = x.face(f).map(|v| fwd[&v]);
            match s {
                Side::Pos => [a, c, b],
                Side::Neg => [a, b, c],
            }
        })
        .collect()
}

/// Boundary meshes of the bounded chambers, each translated by
/// `m (y - p)` with `y` the chamber centroid.
pub fn exploded_view<T: Scalar>(
    x: &EmbeddedComplex<T>,
    lab: &ChamberLabeling<T>,
    p: Point3<T>,
    m: T,
) -> Result<Vec<ExplodedChamber<T>>, ComplexError> {
    lab.bounded()
        .map(|(id, c)| {
            let faces = c.faces();
            let (mut mesh, back) = x.restrict_to_faces(&faces)?;
            let orders = orders_facing_away(&x.complex, &c.sides, &faces, &back);
            let translation = (c.centroid - p) * m;
            for q in mesh.embedding.coords.iter_mut() {
                *q += translation;
            }
            Ok(ExplodedChamber { id, mesh, translation, volume: c.volume.expect("bounded"), euler: c.euler, orders })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geom::Aabb;

    fn label(x: &fixtures::Mesh) -> ChamberLabeling<f64> {
        all_chambers(x, &x.default_tolerance(), 0).unwrap()
    }

    fn coverage_ok(x: &fixtures::Mesh, lab: &ChamberLabeling<f64>) {
        let mut count = 0;
        for (id, c) in lab.chambers.iter().enumerate() {
            for &s in &c.sides {
                assert_eq!(lab.chamber_of(s), id);
                count += 1;
            }
        }
        assert_eq!(count, 2 * x.complex.num_faces());
        assert_eq!(lab.chambers.iter().filter(|c| !c.is_bounded()).count(), 1);
    }

    #[test]
    fn tetrahedron_two_chambers() {
        let x = fixtures::tetrahedron();
        let lab = label(&x);
        coverage_ok(&x, &lab);
        assert_eq!(lab.chambers.len(), 2);
        assert!((lab.chambers[1].volume.unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert!((chamber_volume(&x, &lab.chambers[1].sides) - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(lab.chambers[1].euler, 2);
    }

    #[test]
    fn unit_cube_volume() {
        let x = fixtures::unit_cube();
        let lab = label(&x);
        assert!((chamber_volume(&x, &lab.chambers[1].sides) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn diaphragm_three_chambers() {
        let x = fixtures::cube_with_diaphragm();
        let lab = label(&x);
        coverage_ok(&x, &lab);
        assert_eq!(lab.chambers.len(), 3);
        for (_, c) in lab.bounded() {
            assert!((c.volume.unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(c.sides.len(), 12);
        }
    }

    #[test]
    fn nested_cubes_shell_chamber() {
        let x = fixtures::nested_cubes();
        let lab = label(&x);
        coverage_ok(&x, &lab);
        assert_eq!(lab.chambers.len(), 3);
        let mut vols: Vec<f64> = lab.bounded().map(|(_, c)| c.volume.unwrap()).collect();
        vols.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vols[0] - 8.0).abs() < 1e-9 && (vols[1] - 56.0).abs() < 1e-9);
        // The shell chamber is bounded by both cubes.
        let shell = lab.bounded().find(|(_, c)| c.volume.unwrap() > 10.0).unwrap().1;
        assert_eq!(shell.sides.len(), 24);
        assert_eq!(shell.euler, 4);
    }

    #[test]
    fn vertex_touching_tetrahedra_share_unbounded() {
        let x = fixtures::two_tetrahedra_sharing_vertex();
        let lab = label(&x);
        coverage_ok(&x, &lab);
        assert_eq!(lab.chambers.len(), 3);
        assert_eq!(lab.chambers[0].sides.len(), 8);
    }

    #[test]
    fn convex_has_two_chambers() {
        for seed in 0..5 {
            let x = fixtures::random_convex_polytope(15, seed);
            assert_eq!(label(&x).chambers.len(), 2);
        }
    }

    #[test]
    fn exploded_view_linear_in_m() {
        let x = fixtures::cube_with_diaphragm();
        let lab = label(&x);
        let p = x.centroid();
        let v0 = exploded_view(&x, &lab, p, 0.0).unwrap();
        for c in &v0 {
            assert_eq!(c.translation, Point3::zero());
        }
        let v1 = exploded_view(&x, &lab, p, 1.0).unwrap();
        let v2 = exploded_view(&x, &lab, p, 2.0).unwrap();
        for (a, b) in v1.iter().zip(&v2) {
            assert!((a.translation * 2.0).distance(b.translation) < 1e-15);
        }
        // Boxes move apart along z, through the centre.
        let dz: Vec<f64> = v1.iter().map(|c| c.translation.z).collect();
        assert!(dz[0] * dz[1] < 0.0);
        assert!(v1.iter().all(|c| c.translation.x.abs() < 1e-12 && c.translation.y.abs() < 1e-12));
        let v4 = exploded_view(&x, &lab, p, 4.0).unwrap();
        let boxes: Vec<Aabb<f64>> = v4.iter().map(|c| c.mesh.bbox()).collect();
        assert!(!boxes[0].overlaps(&boxes[1]));
    }
}
