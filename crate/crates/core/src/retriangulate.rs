//! Per-face planar repair and global rebuild.
//!
//! Each affected face becomes a [`PlanarSubdivision`]: its corners, the
//! intersection segments recorded for it, and the edges between them. The
//! subdivision is made non-crossing, completed to a triangulation by
//! inserting the shortest admissible edges, and cut into triangles. The
//! triangles of all faces are then welded back into one complex.

use std::cmp::Ordering;
use std::collections::HashMap;

use log::{debug, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::complex::{build_complex, sorted_triple, ComplexError, EmbeddedComplex, Embedding, FaceId, VertexId};
use crate::geom::{orient2d, Aabb, GeomError, PlaneFrame, Point3, PointWelder, Tolerance};
use crate::intersect::{all_intersections, proper_crossing, IntersectError, IntersectionMap};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RetriangulateError {
    #[error("edge deficit is negative ({0}); subdivision is not a disc")]
    NegativeDeficit(i64),
    #[error("candidate edges exhausted with {remaining} edge(s) still missing")]
    Exhausted { remaining: usize },
    #[error("cell with {0} sides after triangulation")]
    NonTriangularCell(usize),
    #[error("face {0} is degenerate")]
    DegenerateFace(FaceId),
    #[error("rebuilt complex still intersects in {} face pair(s), first {:?}; try a larger eps_point", .0.len(), .0.first())]
    StillIntersecting(Vec<(FaceId, FaceId)>),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Intersect(#[from] IntersectError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlanarEdge {
    pub a: usize,
    pub b: usize,
    pub boundary: bool,
}

impl PlanarEdge {
    fn key(&self) -> (usize, usize) {
        (self.a.min(self.b), self.a.max(self.b))
    }
}

/// Vertices and edges inside one planar convex region (normally a face).
///
/// Points keep their 3D coordinates; `uv` holds their coordinates in the
/// region's orthonormal frame, where all predicates are evaluated.
#[derive(Debug, Clone)]
pub struct PlanarSubdivision<T> {
    pub frame: PlaneFrame<T>,
    pub points: Vec<Point3<T>>,
    pub uv: Vec<[T; 2]>,
    pub edges: Vec<PlanarEdge>,
    /// Region outline in `uv`, counter-clockwise.
    pub outline: Vec<[T; 2]>,
    pub eps: T,
}

impl<T: Scalar> PlanarSubdivision<T> {
    /// Subdivision of a triangle: 3 corners and 3 boundary edges.
    pub fn for_triangle(corners: [Point3<T>; 3], tol: &Tolerance<T>) -> Result<Self, GeomError> {
        Self::for_polygon(&corners, tol)
    }

    /// Subdivision of a convex planar polygon given in order.
    pub fn for_polygon(corners: &[Point3<T>], tol: &Tolerance<T>) -> Result<Self, GeomError> {
        assert!(corners.len() >= 3);
        let frame = PlaneFrame::of_triangle(corners[0], corners[1], corners[2], tol)?;
        let uv: Vec<[T; 2]> = corners.iter().map(|&p| frame.project(p)).collect();
        let n = corners.len();
        let edges = (0..n).map(|i| PlanarEdge { a: i, b: (i + 1) % n, boundary: true }).collect();
        let mut outline = uv.clone();
        let mut area = T::zero();
        for i in 0..n {
            area = area + orient2d([T::zero(), T::zero()], uv[i], uv[(i + 1) % n]);
        }
        if area < T::zero() {
            outline.reverse();
        }
        Ok(Self { frame, points: corners.to_vec(), uv, edges, outline, eps: tol.eps_point })
    }

    pub fn push_point(&mut self, p: Point3<T>) -> usize {
        self.points.push(p);
        self.uv.push(self.frame.project(p));
        self.points.len() - 1
    }

    /// Appends a segment as two new points joined by an interior edge.
    pub fn add_segment(&mut self, p: Point3<T>, q: Point3<T>) {
        let a = self.push_point(p);
        let b = self.push_point(q);
        self.edges.push(PlanarEdge { a, b, boundary: false });
    }

    pub fn num_vertices(&self) -> usize {
        self.points.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.boundary).count()
    }

    pub fn num_interior_edges(&self) -> usize {
        self.num_edges() - self.num_boundary_edges()
    }

    /// `V - (E + E') + (2E + E')/3 == 1` with `E` interior and `E'` boundary
    /// edge counts, evaluated on integers.
    pub fn satisfies_disc_criterion(&self) -> bool {
        let v = self.num_vertices() as i64;
        let eb = self.num_boundary_edges() as i64;
        let ei = self.num_interior_edges() as i64;
        (2 * ei + eb) % 3 == 0 && v - (ei + eb) + (2 * ei + eb) / 3 == 1
    }

    fn dist_to_segment_2d(&self, p: [T; 2], a: usize, b: usize) -> (T, T) {
        let (s, t) = (self.uv[a], self.uv[b]);
        let d = [t[0] - s[0], t[1] - s[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let w = [p[0] - s[0], p[1] - s[1]];
        let u = (w[0] * d[0] + w[1] * d[1]) / len2;
        let uc = u.max(T::zero()).min(T::one());
        let c = [s[0] + d[0] * uc - p[0], s[1] + d[1] * uc - p[1]];
        ((c[0] * c[0] + c[1] * c[1]).sqrt(), u)
    }

    /// Whether `p` lies strictly inside the outline, at least `eps` from it.
    fn strictly_inside(&self, p: [T; 2]) -> bool {
        let n = self.outline.len();
        (0..n).all(|k| {
            let (a, b) = (self.outline[k], self.outline[(k + 1) % n]);
            let len = ((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1])).sqrt();
            orient2d(a, b, p) > self.eps * len
        })
    }

    fn find_vertex(&self, p: Point3<T>) -> Option<usize> {
        let mut best: Option<(T, usize)> = None;
        for (i, &q) in self.points.iter().enumerate() {
            let d = q.distance(p);
            if d <= self.eps && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i)
    }
}

/// Merges points within `eps` (first occurrence wins), remaps edges and
/// drops zero-length and duplicate edges. A duplicate keeps the boundary
/// mark if any copy had it.
pub fn clean_data<T: Scalar>(l: PlanarSubdivision<T>) -> PlanarSubdivision<T> {
    let mut welder = PointWelder::new(l.eps);
    let remap: Vec<usize> = l.points.iter().map(|&p| welder.insert(p)).collect();
    let points = welder.into_points();
    let uv = points.iter().map(|&p| l.frame.project(p)).collect();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<PlanarEdge> = Vec::with_capacity(l.edges.len());
    for e in &l.edges {
        let (a, b) = (remap[e.a], remap[e.b]);
        if a == b {
            continue;
        }
        let ne = PlanarEdge { a, b, boundary: e.boundary };
        match seen.get(&ne.key()) {
            Some(&i) => edges[i].boundary |= e.boundary,
            None => {
                seen.insert(ne.key(), edges.len());
                edges.push(ne);
            }
        }
    }
    PlanarSubdivision { points, uv, edges, ..l }
}

/// Splits every edge at the vertices lying in its interior. Returns whether
/// anything changed.
fn split_edges_at_vertices<T: Scalar>(l: &mut PlanarSubdivision<T>) -> bool {
    let mut changed = false;
    let mut out = Vec::with_capacity(l.edges.len());
    for e in &l.edges {
        let len = l.uv[e.a].iter().zip(&l.uv[e.b]).map(|(x, y)| (*y - *x) * (*y - *x)).fold(T::zero(), |s, v| s + v).sqrt();
        let margin = l.eps / len;
        let mut on: Vec<(T, usize)> = (0..l.points.len())
            .filter(|&v| v != e.a && v != e.b)
            .filter_map(|v| {
                let (d, u) = l.dist_to_segment_2d(l.uv[v], e.a, e.b);
                (d <= l.eps && u > margin && u < T::one() - margin).then_some((u, v))
            })
            .collect();
        if on.is_empty() {
            out.push(*e);
            continue;
        }
        changed = true;
        on.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal).then(x.1.cmp(&y.1)));
        let mut prev = e.a;
        for &(_, v) in &on {
            out.push(PlanarEdge { a: prev, b: v, boundary: e.boundary });
            prev = v;
        }
        out.push(PlanarEdge { a: prev, b: e.b, boundary: e.boundary });
    }
    l.edges = out;
    changed
}

const MAX_FIX_ROUNDS: usize = 64;

/// Makes the subdivision a plane graph: vertices lying on edges split them,
/// and every proper crossing of two edges becomes a new shared vertex.
pub fn fix_planar_intersections<T: Scalar>(l: PlanarSubdivision<T>) -> PlanarSubdivision<T> {
    let mut l = clean_data(l);
    for round in 0..MAX_FIX_ROUNDS {
        if split_edges_at_vertices(&mut l) {
            l = clean_data(l);
        }
        let mut crossings = Vec::new();
        for i in 0..l.edges.len() {
            let ei = l.edges[i];
            for ej in &l.edges[i + 1..] {
                if ei.a == ej.a || ei.a == ej.b || ei.b == ej.a || ei.b == ej.b {
                    continue;
                }
                if let Some((t, _)) = proper_crossing(l.uv[ei.a], l.uv[ei.b], l.uv[ej.a], l.uv[ej.b], l.eps) {
                    crossings.push(Point3::lerp(l.points[ei.a], l.points[ei.b], t));
                }
            }
        }
        if crossings.is_empty() {
            return l;
        }
        let mut added = false;
        for p in crossings {
            if l.find_vertex(p).is_none() {
                l.push_point(p);
                added = true;
            }
        }
        if !added && round > 0 {
            warn!("crossing vertices already present but edges still cross; giving up on this face");
            return l;
        }
    }
    warn!("planar fix did not converge in {MAX_FIX_ROUNDS} rounds");
    l
}

/// Interior edges still to insert: `(3V - 2E' - 3) - (E_total - E')`.
pub fn required_inner_edges(v: usize, e_boundary: usize, e_total: usize) -> Result<usize, RetriangulateError> {
    let (v, eb, et) = (v as i64, e_boundary as i64, e_total as i64);
    let d = (3 * v - 2 * eb - 3) - (et - eb);
    if d < 0 {
        Err(RetriangulateError::NegativeDeficit(d))
    } else {
        Ok(d as usize)
    }
}

/// Completes a plane subdivision to a triangulation by inserting the
/// shortest admissible edges until the edge deficit reaches zero.
///
/// A candidate is rejected if it already exists, passes through a vertex,
/// crosses an edge, or has its midpoint outside the open region. Equal
/// lengths are ordered by the endpoints' coordinates so that coincident
/// regions of different faces are triangulated identically.
pub fn triangulate_disc<T: Scalar>(mut l: PlanarSubdivision<T>) -> Result<PlanarSubdivision<T>, RetriangulateError> {
    let mut deficit = required_inner_edges(l.num_vertices(), l.num_boundary_edges(), l.num_edges())?;
    if deficit == 0 {
        return Ok(l);
    }
    let n = l.points.len();
    let mut existing: std::collections::HashSet<(usize, usize)> = l.edges.iter().map(|e| e.key()).collect();
    let mut cands: Vec<(T, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            if !existing.contains(&(i, j)) {
                cands.push((l.points[i].distance(l.points[j]), i, j));
            }
        }
    }
    let lex = |i: usize, j: usize| {
        let (p, q) = (&l.points[i], &l.points[j]);
        if p.lex_cmp(q) == Ordering::Greater {
            (q, p)
        } else {
            (p, q)
        }
    };
    cands.sort_by(|x, y| {
        x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal).then_with(|| {
            let (xa, xb) = lex(x.1, x.2);
            let (ya, yb) = lex(y.1, y.2);
            xa.lex_cmp(ya).then(xb.lex_cmp(yb))
        })
    });
    for (_, i, j) in cands {
        if existing.contains(&(i, j)) {
            continue;
        }
        let (pi, pj) = (l.uv[i], l.uv[j]);
        let mid = [(pi[0] + pj[0]) * T::lit(0.5), (pi[1] + pj[1]) * T::lit(0.5)];
        if !l.strictly_inside(mid) {
            continue;
        }
        let len = l.points[i].distance(l.points[j]);
        let margin = l.eps / len;
        let through_vertex = (0..n).any(|v| {
            v != i && v != j && {
                let (d, u) = l.dist_to_segment_2d(l.uv[v], i, j);
                d <= l.eps && u > margin && u < T::one() - margin
            }
        });
        if through_vertex {
            continue;
        }
        let crosses = l.edges.iter().any(|e| {
            e.a != i && e.a != j && e.b != i && e.b != j && proper_crossing(pi, pj, l.uv[e.a], l.uv[e.b], l.eps).is_some()
        });
        if crosses {
            continue;
        }
        l.edges.push(PlanarEdge { a: i, b: j, boundary: false });
        existing.insert((i, j));
        deficit -= 1;
        if deficit == 0 {
            return Ok(l);
        }
    }
    Err(RetriangulateError::Exhausted { remaining: deficit })
}

/// Bounded cells of a triangulated subdivision as vertex triples,
/// counter-clockwise in the region frame.
pub fn extract_triangles<T: Scalar>(l: &PlanarSubdivision<T>) -> Result<Vec<[usize; 3]>, RetriangulateError> {
    let n = l.points.len();
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &l.edges {
        nbrs[e.a].push(e.b);
        nbrs[e.b].push(e.a);
    }
    let angle = |from: usize, to: usize| {
        let (p, q) = (l.uv[from], l.uv[to]);
        (q[1] - p[1]).atan2(q[0] - p[0])
    };
    for (v, nb) in nbrs.iter_mut().enumerate() {
        nb.sort_by(|&a, &b| angle(v, a).partial_cmp(&angle(v, b)).unwrap_or(Ordering::Equal));
    }
    // Position of each neighbour in the sorted list, for O(1) lookups.
    let pos: Vec<HashMap<usize, usize>> =
        nbrs.iter().map(|nb| nb.iter().enumerate().map(|(i, &w)| (w, i)).collect()).collect();
    let mut used: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    let mut tris = Vec::new();
    for e in &l.edges {
        for (s, t) in [(e.a, e.b), (e.b, e.a)] {
            if used.contains(&(s, t)) {
                continue;
            }
            let mut cycle = vec![s];
            let (mut u, mut v) = (s, t);
            used.insert((u, v));
            loop {
                let k = pos[v][&u];
                let deg = nbrs[v].len();
                let w = nbrs[v][(k + deg - 1) % deg];
                u = v;
                v = w;
                if (u, v) == (s, t) {
                    break;
                }
                cycle.push(u);
                used.insert((u, v));
                if cycle.len() > 2 * l.edges.len() + 2 {
                    return Err(RetriangulateError::NonTriangularCell(cycle.len()));
                }
            }
            let mut area = T::zero();
            for i in 0..cycle.len() {
                area = area + orient2d([T::zero(), T::zero()], l.uv[cycle[i]], l.uv[cycle[(i + 1) % cycle.len()]]);
            }
            if area > T::zero() {
                if cycle.len() != 3 {
                    return Err(RetriangulateError::NonTriangularCell(cycle.len()));
                }
                tris.push([cycle[0], cycle[1], cycle[2]]);
            }
        }
    }
    Ok(tris)
}

/// Triangles of one face as 3D corner triples.
pub type FaceTriangulation<T> = Vec<[Point3<T>; 3]>;

pub fn triangles_3d<T: Scalar>(l: &PlanarSubdivision<T>, tris: &[[usize; 3]]) -> FaceTriangulation<T> {
    tris.iter().map(|t| [l.points[t[0]], l.points[t[1]], l.points[t[2]]]).collect()
}

/// Subdivision of face `f` with all its recorded segments, made planar.
pub fn face_subdivision<T: Scalar>(
    x: &EmbeddedComplex<T>,
    map: &IntersectionMap<T>,
    f: FaceId,
    tol: &Tolerance<T>,
) -> Result<PlanarSubdivision<T>, RetriangulateError> {
    let mut l = PlanarSubdivision::for_triangle(x.face_points(f), tol).map_err(|_| RetriangulateError::DegenerateFace(f))?;
    for s in map.face_segments(f) {
        l.add_segment(s.p0, s.p1);
    }
    Ok(fix_planar_intersections(l))
}

fn point_segment_distance<T: Scalar>(p: Point3<T>, a: Point3<T>, b: Point3<T>) -> (T, T) {
    let d = b - a;
    let u = (p - a).dot(d) / d.norm_squared();
    let q = Point3::lerp(a, b, u.max(T::zero()).min(T::one()));
    (q.distance(p), u)
}

/// Whether `p` lies in the relative interior of one of the edges.
fn lies_on_edge<T: Scalar>(p: Point3<T>, pts: &[Point3<T>], edges: &[(usize, usize)], eps: T) -> bool {
    edges.iter().any(|&(a, b)| {
        let (d, u) = point_segment_distance(p, pts[a], pts[b]);
        let m = eps / pts[a].distance(pts[b]);
        d <= eps && u > m && u < T::one() - m
    })
}

/// Inserts into each face every point of `pool` that lies on one of its
/// edges but is not yet a vertex, so neighbouring faces agree on the
/// vertices along shared edges. Only `faces` are touched; those without a
/// subdivision get one when needed. Returns the number of insertions.
pub fn conform<T: Scalar>(
    x: &EmbeddedComplex<T>,
    subs: &mut [Option<PlanarSubdivision<T>>],
    faces: &[FaceId],
    pool: &[Point3<T>],
    tol: &Tolerance<T>,
) -> Result<usize, RetriangulateError> {
    let e = tol.eps_point;
    let dedup = crate::geom::dedupe_points(pool, tol);
    let mut active = vec![false; subs.len()];
    for &f in faces {
        active[f] = true;
    }
    let results: Vec<Result<usize, RetriangulateError>> = subs
        .par_iter_mut()
        .enumerate()
        .map(|(f, slot)| {
            if !active[f] {
                return Ok(0);
            }
            let corners = x.face_points(f);
            let bb = Aabb::from_points(&corners).expect("three points").expanded(e);
            let mut inserted = 0;
            let mut todo = Vec::new();
            for &p in &dedup {
                if !(p.x >= bb.min.x && p.x <= bb.max.x && p.y >= bb.min.y && p.y <= bb.max.y && p.z >= bb.min.z && p.z <= bb.max.z) {
                    continue;
                }
                let hit = match slot {
                    Some(l) => {
                        let pairs: Vec<(usize, usize)> = l.edges.iter().map(|ed| (ed.a, ed.b)).collect();
                        l.find_vertex(p).is_none() && lies_on_edge(p, &l.points, &pairs, e)
                    }
                    None => lies_on_edge(p, &corners, &[(0, 1), (1, 2), (2, 0)], e),
                };
                if hit {
                    todo.push(p);
                }
            }
            if !todo.is_empty() {
                let mut l = match slot.take() {
                    Some(l) => l,
                    None => PlanarSubdivision::for_triangle(corners, tol).map_err(|_| RetriangulateError::DegenerateFace(f))?,
                };
                for p in todo {
                    l.push_point(p);
                    inserted += 1;
                }
                *slot = Some(fix_planar_intersections(l));
            }
            Ok(inserted)
        })
        .collect();
    let mut total = 0;
    for r in results {
        total += r?;
    }
    Ok(total)
}

/// Planar subdivisions for the given faces (others `None`), conformed
/// against every vertex created anywhere.
pub fn subdivide_faces<T: Scalar>(
    x: &EmbeddedComplex<T>,
    map: &IntersectionMap<T>,
    faces: &[FaceId],
    tol: &Tolerance<T>,
) -> Result<Vec<Option<PlanarSubdivision<T>>>, RetriangulateError> {
    let built: Vec<(FaceId, PlanarSubdivision<T>)> = faces
        .par_iter()
        .map(|&f| face_subdivision(x, map, f, tol).map(|l| (f, l)))
        .collect::<Result<_, _>>()?;
    let mut subs: Vec<Option<PlanarSubdivision<T>>> = vec![None; x.complex.num_faces()];
    for (f, l) in built {
        subs[f] = Some(l);
    }
    let mut pool: Vec<Point3<T>> = subs.iter().flatten().flat_map(|l| l.points.iter().copied()).collect();
    for s in map.segments() {
        pool.push(s.p0);
        pool.push(s.p1);
    }
    let all: Vec<FaceId> = (0..x.complex.num_faces()).collect();
    let n = conform(x, &mut subs, &all, &pool, tol)?;
    if n > 0 {
        debug!("conformity inserted {n} vertex(es)");
    }
    Ok(subs)
}

/// Triangulates a subdivision and returns its triangles in 3D.
pub fn triangulate_face<T: Scalar>(l: PlanarSubdivision<T>) -> Result<FaceTriangulation<T>, RetriangulateError> {
    let l = triangulate_disc(l)?;
    let tris = extract_triangles(&l)?;
    Ok(triangles_3d(&l, &tris))
}

/// A rebuilt complex with the original face each new face came from.
#[derive(Debug, Clone)]
pub struct Rebuilt<T> {
    pub mesh: EmbeddedComplex<T>,
    pub origin: Vec<FaceId>,
    /// Triangles removed because two faces produced the same triple.
    pub cancelled: usize,
}

/// Welds per-face triangle lists into one closed complex.
///
/// `tris[f]` replaces face `f`. Original vertices keep their ids when they
/// survive. Triangles produced twice (coincident overlapping faces) cancel
/// in pairs. With `recheck`, the result must be free of intersections.
pub fn rebuild_complex<T: Scalar>(
    x: &EmbeddedComplex<T>,
    tris: &[FaceTriangulation<T>],
    tol: &Tolerance<T>,
    recheck: bool,
) -> Result<Rebuilt<T>, RetriangulateError> {
    let mut welder = PointWelder::new(tol.eps_point);
    for &p in x.coords() {
        welder.push_unchecked(p);
    }
    let mut count: HashMap<[VertexId; 3], (usize, FaceId, usize)> = HashMap::new();
    let mut order: Vec<[VertexId; 3]> = Vec::new();
    for (f, list) in tris.iter().enumerate() {
        for t in list {
            let ids = t.map(|p| welder.insert(p));
            if ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2] {
                warn!("face {f}: triangle collapsed by welding, dropped");
                continue;
            }
            let s = sorted_triple(ids);
            let entry = count.entry(s).or_insert_with(|| {
                order.push(s);
                (0, f, order.len() - 1)
            });
            entry.0 += 1;
        }
    }
    let mut kept: Vec<([VertexId; 3], FaceId)> = Vec::new();
    let mut cancelled = 0;
    for s in &order {
        let (n, f, _) = count[s];
        cancelled += n - n % 2;
        if n % 2 == 1 {
            kept.push((*s, f));
        }
    }
    let pts = welder.into_points();
    let mut used = vec![false; pts.len()];
    for (t, _) in &kept {
        for &v in t {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; pts.len()];
    let mut coords = Vec::new();
    for (v, &u) in used.iter().enumerate() {
        if u {
            remap[v] = coords.len();
            coords.push(pts[v]);
        }
    }
    let faces: Vec<[VertexId; 3]> = kept.iter().map(|(t, _)| t.map(|v| remap[v])).collect();
    let origin = kept.iter().map(|(_, f)| *f).collect();
    let complex = build_complex(&faces)?;
    let mesh = EmbeddedComplex { complex, embedding: Embedding { coords } };
    if recheck {
        let m = all_intersections(&mesh, tol)?;
        if !m.is_empty() {
            let mut pairs: Vec<(FaceId, FaceId)> = m.segments().iter().map(|s| (s.face_a, s.face_b)).collect();
            pairs.dedup();
            return Err(RetriangulateError::StillIntersecting(pairs));
        }
    }
    Ok(Rebuilt { mesh, origin, cancelled })
}

/// Original triangles for faces without a subdivision, triangulations for
/// the rest.
pub fn triangulate_all<T: Scalar>(
    x: &EmbeddedComplex<T>,
    subs: Vec<Option<PlanarSubdivision<T>>>,
) -> Result<Vec<FaceTriangulation<T>>, RetriangulateError> {
    subs.into_par_iter()
        .enumerate()
        .map(|(f, s)| match s {
            None => Ok(vec![x.face_points(f)]),
            Some(l) => triangulate_face(l),
        })
        .collect()
}

/// Full retriangulation: subdivide every face touched by `map`,
/// triangulate, and rebuild.
pub fn retriangulate<T: Scalar>(
    x: &EmbeddedComplex<T>,
    map: &IntersectionMap<T>,
    tol: &Tolerance<T>,
    recheck: bool,
) -> Result<Rebuilt<T>, RetriangulateError> {
    let subs = subdivide_faces(x, map, &map.affected_faces(), tol)?;
    let tris = triangulate_all(x, subs)?;
    rebuild_complex(x, &tris, tol, recheck)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geom::triangle_area;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type P = Point3<f64>;

    fn p(x: f64, y: f64, z: f64) -> P {
        P::new(x, y, z)
    }

    fn tol() -> Tolerance<f64> {
        Tolerance::new(1e-9, 1e-9, 1e-12)
    }

    fn tri() -> [P; 3] {
        [p(0., 0., 0.), p(4., 0., 0.), p(0., 4., 0.)]
    }

    #[test]
    fn clean_merges_and_dedupes() {
        let mut l = PlanarSubdivision::for_triangle(tri(), &tol()).unwrap();
        l.add_segment(p(1., 1., 0.), p(2., 1., 0.));
        l.add_segment(p(1. + 1e-12, 1., 0.), p(2., 1., 0.));
        let c = clean_data(l);
        assert_eq!(c.num_vertices(), 5);
        assert_eq!(c.num_edges(), 4);
        let again = clean_data(c.clone());
        assert_eq!(again.points, c.points);
        assert_eq!(again.edges, c.edges);
    }

    #[test]
    fn segment_across_two_sides() {
        let mut l = PlanarSubdivision::for_triangle(tri(), &tol()).unwrap();
        // From the x-axis side to the y-axis side.
        l.add_segment(p(1., 0., 0.), p(0., 1., 0.));
        let l = fix_planar_intersections(l);
        assert_eq!(l.num_vertices(), 5);
        assert_eq!(l.num_boundary_edges(), 5);
        assert_eq!(l.num_interior_edges(), 1);
    }

    #[test]
    fn crossing_segments_get_a_vertex() {
        let mut l = PlanarSubdivision::for_triangle(tri(), &tol()).unwrap();
        l.add_segment(p(0.5, 0.5, 0.), p(1.5, 1.5, 0.));
        l.add_segment(p(0.5, 1.5, 0.), p(1.5, 0.5, 0.));
        let l = fix_planar_intersections(l);
        assert_eq!(l.num_vertices(), 8);
        assert_eq!(l.num_interior_edges(), 4);
        assert!(l.points.iter().any(|q| q.distance(p(1., 1., 0.)) < 1e-12));
    }

    #[test]
    fn fix_without_segments_is_clean() {
        let l = fix_planar_intersections(PlanarSubdivision::for_triangle(tri(), &tol()).unwrap());
        assert_eq!((l.num_vertices(), l.num_edges()), (3, 3));
    }

    #[test]
    fn required_edge_examples() {
        assert_eq!(required_inner_edges(3, 3, 3).unwrap(), 0);
        assert_eq!(required_inner_edges(4, 3, 3).unwrap(), 3);
        assert_eq!(required_inner_edges(4, 4, 4).unwrap(), 1);
        assert!(matches!(required_inner_edges(3, 3, 5), Err(RetriangulateError::NegativeDeficit(-2))));
    }

    #[test]
    fn square_gets_shorter_diagonal() {
        let sq = [p(0., 0., 0.), p(2., 0., 0.), p(2.5, 1., 0.), p(0., 1., 0.)];
        let l = triangulate_disc(PlanarSubdivision::for_polygon(&sq, &tol()).unwrap()).unwrap();
        assert_eq!(l.num_interior_edges(), 1);
        let d = l.edges.iter().find(|e| !e.boundary).unwrap();
        let want = if sq[0].distance(sq[2]) < sq[1].distance(sq[3]) { (0, 2) } else { (1, 3) };
        assert_eq!(d.key(), want);
        let tris = extract_triangles(&l).unwrap();
        assert_eq!(tris.len(), 2);
    }

    #[test]
    fn centroid_gets_three_spokes() {
        let mut l = PlanarSubdivision::for_triangle(tri(), &tol()).unwrap();
        l.push_point(p(4. / 3., 4. / 3., 0.));
        let l = triangulate_disc(l).unwrap();
        assert_eq!(l.num_interior_edges(), 3);
        assert!(l.satisfies_disc_criterion());
        let tris = triangles_3d(&l, &extract_triangles(&l).unwrap());
        assert_eq!(tris.len(), 3);
        let total: f64 = tris.iter().map(|t| triangle_area(t[0], t[1], t[2])).sum();
        assert!((total - 8.0).abs() < 1e-12);
    }

    #[test]
    fn bare_triangle_is_itself() {
        let l = triangulate_disc(PlanarSubdivision::for_triangle(tri(), &tol()).unwrap()).unwrap();
        assert_eq!(extract_triangles(&l).unwrap(), vec![[0, 1, 2]]);
    }

    #[test]
    fn star_of_david_inside_face() {
        let s3 = 3f64.sqrt();
        let up = [p(0., 1., 0.), p(-s3 / 2., -0.5, 0.), p(s3 / 2., -0.5, 0.)];
        let face = [p(-4., -3., 0.), p(4., -3., 0.), p(0., 5., 0.)];
        let mut l = PlanarSubdivision::for_triangle(face, &tol()).unwrap();
        for k in 0..3 {
            let (a, b) = (up[k], up[(k + 1) % 3]);
            l.add_segment(a, b);
            l.add_segment(p(a.x, -a.y, 0.), p(b.x, -b.y, 0.));
        }
        let l = fix_planar_intersections(l);
        assert_eq!(l.num_vertices(), 3 + 12);
        let l = triangulate_disc(l).unwrap();
        assert!(l.satisfies_disc_criterion());
        let tris = extract_triangles(&l).unwrap();
        // Euler on the finished plane graph: bounded faces = E - V + 1.
        assert_eq!(tris.len(), l.num_edges() - l.num_vertices() + 1);
        assert_eq!(tris.len(), (2 * l.num_interior_edges() + l.num_boundary_edges()) / 3);
        for t in &tris {
            assert!(orient2d(l.uv[t[0]], l.uv[t[1]], l.uv[t[2]]) > 0.0);
        }
    }

    #[test]
    fn doubled_disc_is_a_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut l = PlanarSubdivision::for_triangle(tri(), &tol()).unwrap();
        for _ in 0..6 {
            let (u, v) = loop {
                let (u, v): (f64, f64) = (rng.gen_range(0.05..0.9), rng.gen_range(0.05..0.9));
                if u + v < 0.95 {
                    break (u, v);
                }
            };
            l.push_point(p(4. * u, 4. * v, 0.));
        }
        let l = triangulate_disc(fix_planar_intersections(l)).unwrap();
        let (v, eb, ei) = (l.num_vertices() as i64, l.num_boundary_edges() as i64, l.num_interior_edges() as i64);
        let f = (2 * ei + eb) / 3;
        // Two copies glued along the boundary.
        assert_eq!((2 * v - eb) - (2 * ei + eb) + 2 * f, 2);
    }

    #[test]
    fn icosahedron_rebuild_is_identity() {
        let x = fixtures::regular_icosahedron();
        let t = x.default_tolerance();
        let map = all_intersections(&x, &t).unwrap();
        let r = retriangulate(&x, &map, &t, true).unwrap();
        assert_eq!(r.mesh.complex.faces(), x.complex.faces());
        assert_eq!(r.mesh.coords(), x.coords());
    }

    #[test]
    fn interlocked_tetrahedra_rebuild() {
        let x = fixtures::interlocked_tetrahedra();
        let t = x.default_tolerance();
        let map = all_intersections(&x, &t).unwrap();
        let r = retriangulate(&x, &map, &t, true).unwrap();
        assert!(r.mesh.complex.num_faces() > x.complex.num_faces());
        let mut area = vec![0.0; x.complex.num_faces()];
        for (g, &f) in r.origin.iter().enumerate() {
            let [a, b, c] = r.mesh.face_points(g);
            area[f] += triangle_area(a, b, c);
        }
        for (f, got) in area.iter().enumerate() {
            let [a, b, c] = x.face_points(f);
            let want = triangle_area(a, b, c);
            assert!((got - want).abs() <= 1e-9 * want, "face {f}: {got} vs {want}");
        }
    }

    #[test]
    fn great_icosahedron_rebuild_is_clean() {
        let x = fixtures::great_icosahedron();
        let t = x.default_tolerance();
        let map = all_intersections(&x, &t).unwrap();
        let r = retriangulate(&x, &map, &t, true).unwrap();
        assert_eq!(r.cancelled, 0);
        assert!(crate::complex::euler_characteristic(&r.mesh.complex) >= 2);
    }
}
