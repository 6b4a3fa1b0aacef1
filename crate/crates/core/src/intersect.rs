//! Triangle-triangle intersection of embedded face pairs.
//!
//! Transversal pairs are handled by clipping each triangle's edges against
//! the other triangle's plane and keeping the hits that land inside the
//! other triangle. Coplanar pairs are classified separately and turned into
//! edge pieces that both faces must respect.

use std::cmp::Ordering;

use log::warn;
use rayon::prelude::*;
use thiserror::Error;

use crate::complex::{EmbeddedComplex, FaceId};
use crate::geom::{
    orient2d, plane_of_triangle, point_in_triangle, segment_plane_alpha, Aabb, GeomError, PlaneFrame, Point3,
    PointWelder, Tolerance,
};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntersectError {
    #[error("face {0} is degenerate")]
    DegenerateFace(FaceId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    /// Line where two non-parallel faces cross.
    Transversal,
    /// Piece of one face's edge lying inside a coplanar, overlapping face.
    Coplanar,
}

/// A segment shared by two faces, recorded under both of them.
/// `face_a < face_b` and `p0 <= p1` lexicographically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionSegment<T> {
    pub face_a: FaceId,
    pub face_b: FaceId,
    pub p0: Point3<T>,
    pub p1: Point3<T>,
    pub kind: SegmentKind,
}

impl<T: Scalar> IntersectionSegment<T> {
    pub fn new(f: FaceId, g: FaceId, p: Point3<T>, q: Point3<T>, kind: SegmentKind) -> Self {
        let (face_a, face_b) = if f < g { (f, g) } else { (g, f) };
        let (p0, p1) = if p.lex_cmp(&q) == Ordering::Greater { (q, p) } else { (p, q) };
        Self { face_a, face_b, p0, p1, kind }
    }

    pub fn other_face(&self, f: FaceId) -> FaceId {
        if f == self.face_a {
            self.face_b
        } else {
            self.face_a
        }
    }

    /// Same faces and endpoints within `eps`, in either endpoint order.
    pub fn matches(&self, o: &Self, eps: T) -> bool {
        self.face_a == o.face_a
            && self.face_b == o.face_b
            && ((self.p0.distance(o.p0) <= eps && self.p1.distance(o.p1) <= eps)
                || (self.p0.distance(o.p1) <= eps && self.p1.distance(o.p0) <= eps))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoplanarIntersection<T> {
    NoOverlap,
    /// Boundaries cross; carries the crossing points.
    CrossingEdges(Vec<Point3<T>>),
    /// One triangle lies inside the other.
    Contained { first_inside_second: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairOutcome<T> {
    Disjoint,
    /// Single contact point that is not a shared vertex.
    Touch(Point3<T>),
    Segment(Point3<T>, Point3<T>),
    Coplanar(CoplanarIntersection<T>),
}

fn tri_edges<T: Copy>(t: &[Point3<T>; 3]) -> [(Point3<T>, Point3<T>); 3] {
    [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
}

/// Points where edges of `src` meet the plane of `dst` inside `dst`.
fn edge_hits<T: Scalar>(
    src: &[Point3<T>; 3],
    dst: &[Point3<T>; 3],
    tol: &Tolerance<T>,
    out: &mut Vec<Point3<T>>,
) -> Result<(), GeomError> {
    let plane = plane_of_triangle(dst[0], dst[1], dst[2], tol)?;
    for (s, t) in tri_edges(src) {
        if let Some(alpha) = segment_plane_alpha(s, t, &plane, tol) {
            let q = Point3::lerp(s, t, alpha.max(T::zero()).min(T::one()));
            if point_in_triangle(q, dst[0], dst[1], dst[2], tol)? {
                out.push(q);
            }
        }
    }
    Ok(())
}

/// Intersection of two triangles. `shared` holds the positions of vertices
/// the faces have in common; contact at those points alone is not an
/// intersection.
pub fn triangle_pair_intersection<T: Scalar>(
    a: &[Point3<T>; 3],
    b: &[Point3<T>; 3],
    shared: &[Point3<T>],
    tol: &Tolerance<T>,
) -> Result<PairOutcome<T>, GeomError> {
    let e = tol.eps_point;
    let pa = plane_of_triangle(a[0], a[1], a[2], tol)?;
    let pb = plane_of_triangle(b[0], b[1], b[2], tol)?;
    let db = b.map(|q| pa.signed_distance(q));
    let da = a.map(|q| pb.signed_distance(q));
    if db.iter().all(|d| d.abs() <= e) && da.iter().all(|d| d.abs() <= e) {
        return Ok(PairOutcome::Coplanar(coplanar_intersection(a, b, tol)?));
    }
    let one_side = |d: &[T; 3]| d.iter().all(|&x| x > e) || d.iter().all(|&x| x < -e);
    if one_side(&db) || one_side(&da) {
        return Ok(PairOutcome::Disjoint);
    }

    let mut hits = Vec::with_capacity(6);
    edge_hits(a, b, tol, &mut hits)?;
    edge_hits(b, a, tol, &mut hits)?;
    let mut welder = PointWelder::new(e);
    for q in hits {
        welder.insert(q);
    }
    let pts = welder.into_points();
    let is_shared = |q: Point3<T>| shared.iter().any(|&s| s.distance(q) <= e);
    match pts.len() {
        0 => Ok(PairOutcome::Disjoint),
        1 if is_shared(pts[0]) => Ok(PairOutcome::Disjoint),
        1 => Ok(PairOutcome::Touch(pts[0])),
        c => {
            if c > 2 {
                warn!("{c} distinct hit points on a transversal pair; keeping the extreme two");
            }
            let mut best = (T::neg_infinity(), 0, 1);
            for i in 0..c {
                for j in i + 1..c {
                    let d = pts[i].distance(pts[j]);
                    if d > best.0 {
                        best = (d, i, j);
                    }
                }
            }
            let (p, q) = (pts[best.1], pts[best.2]);
            if is_shared(p) && is_shared(q) {
                Ok(PairOutcome::Disjoint)
            } else if p.lex_cmp(&q) == Ordering::Greater {
                Ok(PairOutcome::Segment(q, p))
            } else {
                Ok(PairOutcome::Segment(p, q))
            }
        }
    }
}

/// Triangle `t` projected into `frame`, reordered counter-clockwise.
fn ccw_2d<T: Scalar>(frame: &PlaneFrame<T>, t: &[Point3<T>; 3]) -> [[T; 2]; 3] {
    let mut q = t.map(|p| frame.project(p));
    if orient2d(q[0], q[1], q[2]) < T::zero() {
        q.swap(1, 2);
    }
    q
}

fn len2<T: Scalar>(a: [T; 2], b: [T; 2]) -> T {
    ((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1])).sqrt()
}

/// Parameter interval of `s0 -> s1` inside the CCW convex polygon `poly`,
/// with the half-planes relaxed outward by `eps`.
pub(crate) fn clip_segment_convex<T: Scalar>(s0: [T; 2], s1: [T; 2], poly: &[[T; 2]], eps: T) -> Option<(T, T)> {
    let (mut t0, mut t1) = (T::zero(), T::one());
    for k in 0..poly.len() {
        let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
        let slack = eps * len2(p, q);
        let f0 = orient2d(p, q, s0) + slack;
        let f1 = orient2d(p, q, s1) + slack;
        if f0 < T::zero() && f1 < T::zero() {
            return None;
        }
        if f0 < T::zero() {
            t0 = t0.max(f0 / (f0 - f1));
        } else if f1 < T::zero() {
            t1 = t1.min(f0 / (f0 - f1));
        }
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

/// Sutherland-Hodgman clip of `subject` by the CCW convex polygon `clip`.
fn clip_polygon<T: Scalar>(subject: &[[T; 2]], clip: &[[T; 2]]) -> Vec<[T; 2]> {
    let mut out = subject.to_vec();
    for k in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let (p, q) = (clip[k], clip[(k + 1) % clip.len()]);
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            let fc = orient2d(p, q, cur);
            let fp = orient2d(p, q, prev);
            if fc >= T::zero() {
                if fp < T::zero() {
                    let t = fp / (fp - fc);
                    out.push([prev[0] + (cur[0] - prev[0]) * t, prev[1] + (cur[1] - prev[1]) * t]);
                }
                out.push(cur);
            } else if fp >= T::zero() {
                let t = fp / (fp - fc);
                out.push([prev[0] + (cur[0] - prev[0]) * t, prev[1] + (cur[1] - prev[1]) * t]);
            }
        }
    }
    out
}

fn polygon_area<T: Scalar>(poly: &[[T; 2]]) -> T {
    let mut s = T::zero();
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        s = s + p[0] * q[1] - q[0] * p[1];
    }
    s.abs() * T::lit(0.5)
}

/// Proper crossing parameters of segments `p0p1` and `q0q1`, both strictly
/// inside `(eps, 1 - eps)`.
pub(crate) fn proper_crossing<T: Scalar>(p0: [T; 2], p1: [T; 2], q0: [T; 2], q1: [T; 2], eps: T) -> Option<(T, T)> {
    let r = [p1[0] - p0[0], p1[1] - p0[1]];
    let s = [q1[0] - q0[0], q1[1] - q0[1]];
    let den = r[0] * s[1] - r[1] * s[0];
    let scale = len2(p0, p1) * len2(q0, q1);
    if den.abs() <= T::lit(1e-12) * scale {
        return None;
    }
    let w = [q0[0] - p0[0], q0[1] - p0[1]];
    let t = (w[0] * s[1] - w[1] * s[0]) / den;
    let u = (w[0] * r[1] - w[1] * r[0]) / den;
    let et = eps / len2(p0, p1);
    let eu = eps / len2(q0, q1);
    if t > et && t < T::one() - et && u > eu && u < T::one() - eu {
        Some((t, u))
    } else {
        None
    }
}

/// Classification of two coplanar triangles.
pub fn coplanar_intersection<T: Scalar>(
    a: &[Point3<T>; 3],
    b: &[Point3<T>; 3],
    tol: &Tolerance<T>,
) -> Result<CoplanarIntersection<T>, GeomError> {
    let e = tol.eps_point;
    let frame = PlaneFrame::of_triangle(a[0], a[1], a[2], tol)?;
    plane_of_triangle(b[0], b[1], b[2], tol)?;
    let a2 = ccw_2d(&frame, a);
    let b2 = ccw_2d(&frame, b);
    let overlap = clip_polygon(&b2, &a2);
    let longest = tri_edges(a)
        .iter()
        .chain(tri_edges(b).iter())
        .map(|(s, t)| s.distance(*t))
        .fold(T::zero(), T::max);
    if overlap.len() < 3 || polygon_area(&overlap) <= e * longest {
        return Ok(CoplanarIntersection::NoOverlap);
    }
    let inside = |p: [T; 2], t: &[[T; 2]; 3]| (0..3).all(|k| orient2d(t[k], t[(k + 1) % 3], p) >= -e * len2(t[k], t[(k + 1) % 3]));
    if a2.iter().all(|&p| inside(p, &b2)) {
        return Ok(CoplanarIntersection::Contained { first_inside_second: true });
    }
    if b2.iter().all(|&p| inside(p, &a2)) {
        return Ok(CoplanarIntersection::Contained { first_inside_second: false });
    }
    let mut welder = PointWelder::new(e);
    for i in 0..3 {
        for j in 0..3 {
            let (p0, p1) = (a2[i], a2[(i + 1) % 3]);
            if let Some((t, _)) = proper_crossing(p0, p1, b2[j], b2[(j + 1) % 3], e) {
                welder.insert(frame.lift([p0[0] + (p1[0] - p0[0]) * t, p0[1] + (p1[1] - p0[1]) * t]));
            }
        }
    }
    Ok(CoplanarIntersection::CrossingEdges(welder.into_points()))
}

/// Pieces of each triangle's edges lying inside the other triangle, for
/// coplanar overlapping pairs. Points are interpolated in 3D along the
/// original edges.
pub fn coplanar_pieces<T: Scalar>(
    a: &[Point3<T>; 3],
    b: &[Point3<T>; 3],
    tol: &Tolerance<T>,
) -> Result<Vec<(Point3<T>, Point3<T>)>, GeomError> {
    let e = tol.eps_point;
    let frame = PlaneFrame::of_triangle(a[0], a[1], a[2], tol)?;
    let a2 = ccw_2d(&frame, a);
    let b2 = ccw_2d(&frame, b);
    let mut out = Vec::new();
    for (src, poly) in [(b, a2), (a, b2)] {
        for (s, t) in tri_edges(src) {
            let len = s.distance(t);
            let (s2, t2) = (frame.project(s), frame.project(t));
            if let Some((t0, t1)) = clip_segment_convex(s2, t2, &poly, e) {
                if (t1 - t0) * len > e {
                    out.push((Point3::lerp(s, t, t0), Point3::lerp(s, t, t1)));
                }
            }
        }
    }
    Ok(out)
}

/// Per-run counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntersectStats {
    /// Unordered face pairs the run is responsible for.
    pub pairs_considered: usize,
    /// Pairs that passed the bounding-box prefilter.
    pub narrow_tests: usize,
    pub touches: usize,
    pub coplanar_overlaps: usize,
}

/// All intersection segments of a complex, ordered by face pair.
#[derive(Debug, Clone)]
pub struct IntersectionMap<T> {
    segments: Vec<IntersectionSegment<T>>,
    per_face: Vec<Vec<usize>>,
    pub stats: IntersectStats,
}

impl<T: Scalar> IntersectionMap<T> {
    /// Sorts `segments` by face pair (stable) and indexes them per face.
    pub fn from_segments(num_faces: usize, mut segments: Vec<IntersectionSegment<T>>, stats: IntersectStats) -> Self {
        segments.sort_by_key(|s| (s.face_a, s.face_b));
        let mut per_face = vec![Vec::new(); num_faces];
        for (i, s) in segments.iter().enumerate() {
            per_face[s.face_a].push(i);
            per_face[s.face_b].push(i);
        }
        Self { segments, per_face, stats }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn segments(&self) -> &[IntersectionSegment<T>] {
        &self.segments
    }

    /// Segments recorded under face `f`.
    pub fn face_segments(&self, f: FaceId) -> impl Iterator<Item = &IntersectionSegment<T>> + '_ {
        self.per_face[f].iter().map(move |&i| &self.segments[i])
    }

    pub fn num_faces(&self) -> usize {
        self.per_face.len()
    }

    /// Faces with at least one segment.
    pub fn affected_faces(&self) -> Vec<FaceId> {
        (0..self.per_face.len()).filter(|&f| !self.per_face[f].is_empty()).collect()
    }

    /// Distinct intersecting face pairs.
    pub fn num_pairs(&self) -> usize {
        let mut n = 0;
        for (i, s) in self.segments.iter().enumerate() {
            if i == 0 || (self.segments[i - 1].face_a, self.segments[i - 1].face_b) != (s.face_a, s.face_b) {
                n += 1;
            }
        }
        n
    }
}

/// Result of testing one face pair of a complex.
#[derive(Debug, Clone, Default)]
pub struct PairReport<T> {
    pub segments: Vec<IntersectionSegment<T>>,
    pub touch: bool,
    pub coplanar_overlap: bool,
}

/// Tests faces `f` and `g` of `x`, converting the outcome into segments.
pub fn face_pair<T: Scalar>(
    x: &EmbeddedComplex<T>,
    f: FaceId,
    g: FaceId,
    tol: &Tolerance<T>,
) -> Result<PairReport<T>, IntersectError> {
    let (tf, tg) = (x.complex.face(f), x.complex.face(g));
    let shared: Vec<Point3<T>> = tf.iter().filter(|v| tg.contains(v)).map(|&v| x.point(v)).collect();
    let a = x.face_points(f);
    let b = x.face_points(g);
    let outcome = triangle_pair_intersection(&a, &b, &shared, tol).map_err(|_| {
        if plane_of_triangle(a[0], a[1], a[2], tol).is_err() {
            IntersectError::DegenerateFace(f)
        } else {
            IntersectError::DegenerateFace(g)
        }
    })?;
    let mut r = PairReport::default();
    match outcome {
        PairOutcome::Disjoint | PairOutcome::Coplanar(CoplanarIntersection::NoOverlap) => {}
        PairOutcome::Touch(_) => r.touch = true,
        PairOutcome::Segment(p, q) => r.segments.push(IntersectionSegment::new(f, g, p, q, SegmentKind::Transversal)),
        PairOutcome::Coplanar(_) => {
            r.coplanar_overlap = true;
            let pieces = coplanar_pieces(&a, &b, tol).map_err(|_| IntersectError::DegenerateFace(f))?;
            r.segments
                .extend(pieces.into_iter().map(|(p, q)| IntersectionSegment::new(f, g, p, q, SegmentKind::Coplanar)));
        }
    }
    Ok(r)
}

pub fn face_boxes<T: Scalar>(x: &EmbeddedComplex<T>, pad: T) -> Vec<Aabb<T>> {
    (0..x.complex.num_faces())
        .map(|f| Aabb::from_points(&x.face_points(f)).expect("three points").expanded(pad))
        .collect()
}

/// Tests an explicit list of face pairs in parallel; output follows the
/// input order.
pub fn test_pairs<T: Scalar>(
    x: &EmbeddedComplex<T>,
    pairs: &[(FaceId, FaceId)],
    tol: &Tolerance<T>,
) -> Result<(Vec<IntersectionSegment<T>>, IntersectStats), IntersectError> {
    let boxes = face_boxes(x, tol.eps_point);
    let reports: Vec<Option<PairReport<T>>> = pairs
        .par_iter()
        .map(|&(f, g)| {
            if boxes[f].overlaps(&boxes[g]) {
                face_pair(x, f, g, tol).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_, _>>()?;
    let mut stats = IntersectStats { pairs_considered: pairs.len(), ..Default::default() };
    let mut segments = Vec::new();
    for r in reports.into_iter().flatten() {
        stats.narrow_tests += 1;
        stats.touches += r.touch as usize;
        stats.coplanar_overlaps += r.coplanar_overlap as usize;
        segments.extend(r.segments);
    }
    Ok((segments, stats))
}

/// Every intersection of `x`, brute force over all unordered face pairs
/// with a bounding-box prefilter.
pub fn all_intersections<T: Scalar>(
    x: &EmbeddedComplex<T>,
    tol: &Tolerance<T>,
) -> Result<IntersectionMap<T>, IntersectError> {
    let nf = x.complex.num_faces();
    let boxes = face_boxes(x, tol.eps_point);
    // Sweep along x over faces sorted by box minimum.
    let mut order: Vec<FaceId> = (0..nf).collect();
    order.sort_by(|&i, &j| boxes[i].min.x.partial_cmp(&boxes[j].min.x).unwrap_or(Ordering::Equal).then(i.cmp(&j)));
    let reports: Vec<Vec<PairReport<T>>> = (0..nf)
        .into_par_iter()
        .map(|k| {
            let f = order[k];
            let mut out = Vec::new();
            for &g in &order[k + 1..] {
                if boxes[g].min.x > boxes[f].max.x {
                    break;
                }
                if boxes[f].overlaps(&boxes[g]) {
                    out.push(face_pair(x, f.min(g), f.max(g), tol)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_, IntersectError>>()?;
    let mut stats = IntersectStats { pairs_considered: nf * nf.saturating_sub(1) / 2, ..Default::default() };
    let mut segments = Vec::new();
    for r in reports.into_iter().flatten() {
        stats.narrow_tests += 1;
        stats.touches += r.touch as usize;
        stats.coplanar_overlaps += r.coplanar_overlap as usize;
        segments.extend(r.segments);
    }
    Ok(IntersectionMap::from_segments(nf, segments, stats))
}
