//! Removal of non-manifold edges and vertices from an intersection-free
//! complex that has been reduced to its outer hull.
//!
//! Around a non-manifold edge the faces are paired across the sectors that
//! face the unbounded chamber. At every vertex the incident faces are then
//! grouped by edge connectivity, where a non-manifold edge only connects
//! faces of the same pair. Each group gets its own copy of the vertex,
//! shifted by `eps` towards the group. Vertices at the loose end of a
//! non-manifold path stay single because their faces remain connected.

use std::collections::{HashMap, HashSet};

use log::{debug, info, warn};
use thiserror::Error;

use crate::complex::{
    build_complex, edge_key, nonmanifold_edges, nonmanifold_vertices, ComplexError, EdgeId, EmbeddedComplex, Embedding,
    FaceId, SimplicialComplex, UnionFind, VertexId,
};
use crate::geom::{Point3, Tolerance, Vector3};
use crate::intersect::{all_intersections, IntersectError};
use crate::outerhull::{edge_fans, extract_chamber, initial_face, EdgeFan, HullError, Side};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RamifyError {
    #[error("non-manifold edge {0:?} touches no other non-manifold edge (unsupported input)")]
    IsolatedNonManifoldEdge([VertexId; 2]),
    #[error("shifting by eps = {eps:e} created {pairs} intersecting face pair(s); reduce eps")]
    NewIntersectionIntroduced { eps: f64, pairs: usize },
    #[error("non-manifold edges remain after splitting: {0:?}")]
    NonManifoldEdgesRemain(Vec<[VertexId; 2]>),
    #[error("non-manifold vertices remain after {0} rounds")]
    NoFixedPoint(usize),
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Intersect(#[from] IntersectError),
}

/// Splits non-manifold edges into inner ones (both endpoints touch another
/// non-manifold edge) and outer ones (exactly one endpoint does).
pub fn classify_nonmanifold_edges(
    x: &SimplicialComplex,
) -> Result<(Vec<[VertexId; 2]>, Vec<[VertexId; 2]>), RamifyError> {
    let nm = nonmanifold_edges(x);
    let mut degree: HashMap<VertexId, usize> = HashMap::new();
    for e in &nm {
        *degree.entry(e[0]).or_default() += 1;
        *degree.entry(e[1]).or_default() += 1;
    }
    let (mut inner, mut outer) = (Vec::new(), Vec::new());
    for e in nm {
        match (degree[&e[0]] > 1, degree[&e[1]] > 1) {
            (true, true) => inner.push(e),
            (false, false) => return Err(RamifyError::IsolatedNonManifoldEdge(e)),
            _ => outer.push(e),
        }
    }
    Ok((inner, outer))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Open,
    Circle,
}

/// A maximal walk through non-manifold edges. At a junction the walk
/// continues along the straightest pair of edges; the other branches start
/// or end their own paths there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonManifoldPath {
    pub edges: Vec<[VertexId; 2]>,
    /// `edges.len() + 1` vertices for open paths; circles repeat the first.
    pub vertices: Vec<VertexId>,
    pub kind: PathKind,
    pub junction_start: bool,
    pub junction_end: bool,
}

/// Pairs the edges meeting at each vertex for path continuation.
fn continuations<T: Scalar>(
    edges: &[[VertexId; 2]],
    coords: &[Point3<T>],
) -> (HashMap<(VertexId, usize), usize>, HashSet<VertexId>) {
    let mut at: HashMap<VertexId, Vec<usize>> = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        at.entry(e[0]).or_default().push(i);
        at.entry(e[1]).or_default().push(i);
    }
    let mut next = HashMap::new();
    let mut junctions = HashSet::new();
    for (&v, inc) in &at {
        if inc.len() == 2 {
            next.insert((v, inc[0]), inc[1]);
            next.insert((v, inc[1]), inc[0]);
        } else if inc.len() > 2 {
            junctions.insert(v);
            let dir = |i: usize| {
                let w = if edges[i][0] == v { edges[i][1] } else { edges[i][0] };
                (coords[w] - coords[v]).normalized().unwrap_or_else(Point3::zero)
            };
            // Straightest continuation: most negative dot product of the
            // outgoing directions, ties to the lowest edge pair.
            let mut best: Option<(T, [VertexId; 2], [VertexId; 2], usize, usize)> = None;
            for a in 0..inc.len() {
                for b in a + 1..inc.len() {
                    let (i, j) = (inc[a], inc[b]);
                    let d = dir(i).dot(dir(j));
                    let (ki, kj) = if edges[i] < edges[j] { (edges[i], edges[j]) } else { (edges[j], edges[i]) };
                    let better = match &best {
                        None => true,
                        Some((bd, bi, bj, _, _)) => d < *bd || (d == *bd && (ki, kj) < (*bi, *bj)),
                    };
                    if better {
                        best = Some((d, ki, kj, i, j));
                    }
                }
            }
            let (_, _, _, i, j) = best.expect("at least three edges");
            next.insert((v, i), j);
            next.insert((v, j), i);
        }
    }
    (next, junctions)
}

/// Non-manifold paths of the given edge set. Open paths come first, each
/// starting at its endpoint with the smaller id.
pub fn paths_from_edges<T: Scalar>(edges: &[[VertexId; 2]], coords: &[Point3<T>]) -> Vec<NonManifoldPath> {
    let (next, junctions) = continuations(edges, coords);
    let mut used = vec![false; edges.len()];
    let mut out = Vec::new();
    let walk = |start_v: VertexId, start_e: usize, used: &mut Vec<bool>| {
        let mut vs = vec![start_v];
        let mut es = Vec::new();
        let (mut v, mut e) = (start_v, start_e);
        loop {
            used[e] = true;
            es.push(edges[e]);
            let w = if edges[e][0] == v { edges[e][1] } else { edges[e][0] };
            vs.push(w);
            match next.get(&(w, e)) {
                Some(&n) if !used[n] => {
                    v = w;
                    e = n;
                }
                _ => break,
            }
        }
        (vs, es)
    };
    // Ends: a vertex where an edge has no continuation.
    let mut starts: Vec<(VertexId, usize)> = Vec::new();
    for (i, e) in edges.iter().enumerate() {
        for &v in e {
            if !next.contains_key(&(v, i)) {
                starts.push((v, i));
            }
        }
    }
    starts.sort_unstable();
    for (v, i) in starts {
        if used[i] {
            continue;
        }
        let (vs, es) = walk(v, i, &mut used);
        let last = *vs.last().expect("non-empty");
        out.push(NonManifoldPath {
            edges: es,
            junction_start: junctions.contains(&v),
            junction_end: junctions.contains(&last),
            vertices: vs,
            kind: PathKind::Open,
        });
    }
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by_key(|&i| edges[i]);
    for i in order {
        if used[i] {
            continue;
        }
        let v = edges[i][0];
        let (vs, es) = walk(v, i, &mut used);
        out.push(NonManifoldPath {
            edges: es,
            junction_start: junctions.contains(&v),
            junction_end: junctions.contains(&v),
            vertices: vs,
            kind: PathKind::Circle,
        });
    }
    out
}

pub fn nonmanifold_paths<T: Scalar>(x: &EmbeddedComplex<T>) -> Vec<NonManifoldPath> {
    paths_from_edges(&nonmanifold_edges(&x.complex), x.coords())
}

/// Shift direction of non-manifold edge `e` given outward face normals.
///
/// `f1` is the first fan face whose normal satisfies
/// `det[v, e, n] > 0`, with `v` the in-plane direction towards its apex and
/// `e` the edge direction from the lower to the higher vertex id. `f2` is
/// the neighbour of `f1` in the fan in the direction of `n`. The result is
/// the mean of the two apex offsets from the lower edge vertex.
pub fn split_direction<T: Scalar>(x: &EmbeddedComplex<T>, e: EdgeId, normals: &[Vector3<T>]) -> Option<Vector3<T>> {
    let fan = EdgeFan::new(x, e).ok()?;
    let k = fan.len();
    let i = (0..k).find(|&i| {
        let n = normals[fan.faces[i].0];
        fan.dirs[i].dot(fan.axis.cross(n)) > T::zero()
    })?;
    let f1 = fan.faces[i].0;
    let forward = normals[f1].dot(fan.axis.cross(fan.dirs[i])) > T::zero();
    let j = if forward { (i + 1) % k } else { (i + k - 1) % k };
    let v1 = x.point(x.complex.edge(e)[0]);
    let w1 = x.point(x.complex.apex(f1, e));
    let w2 = x.point(x.complex.apex(fan.faces[j].0, e));
    Some((w1 - v1) * T::lit(0.5) + (w2 - v1) * T::lit(0.5))
}

/// Exterior flags `[pos, neg]` per face: whether that side faces the
/// unbounded chamber.
pub fn exterior_sides<T: Scalar>(x: &EmbeddedComplex<T>, tol: &Tolerance<T>, seed: u64) -> Result<Vec<[bool; 2]>, RamifyError> {
    let start = initial_face(x, tol, seed)?;
    let fans = edge_fans(x)?;
    let mut ext = vec![[false; 2]; x.complex.num_faces()];
    for (f, s) in extract_chamber(x, &fans, (start.face, start.side)) {
        ext[f][s.index()] = true;
    }
    Ok(ext)
}

/// Outward unit normals from exterior flags. Faces exterior on both sides
/// get the `Pos` normal.
pub fn outward_normals<T: Scalar>(x: &EmbeddedComplex<T>, ext: &[[bool; 2]]) -> Vec<Vector3<T>> {
    (0..x.complex.num_faces())
        .map(|f| {
            let n = x.face_normal_raw(f).normalized().unwrap_or_else(Point3::zero);
            if !ext[f][0] && ext[f][1] {
                -n
            } else {
                n
            }
        })
        .collect()
}

/// Groups of fan faces that stay together at a non-manifold edge: faces on
/// either side of an exterior sector.
fn fan_groups<T: Scalar>(x: &EmbeddedComplex<T>, fan: &EdgeFan<T>, ext: &[[bool; 2]]) -> Vec<Vec<FaceId>> {
    let k = fan.len();
    let mut uf = UnionFind::new(k);
    for i in 0..k {
        let side = if fan.faces_increasing(x, i, Side::Pos) { Side::Pos } else { Side::Neg };
        if ext[fan.faces[i].0][side.index()] {
            uf.union(i, (i + 1) % k);
        }
    }
    let groups = uf.groups();
    if groups.iter().any(|g| g.len() < 2) {
        warn!("edge {:?}: fan has a face without exterior neighbour", x.complex.edge(fan.edge));
    }
    groups.into_iter().map(|g| g.into_iter().map(|i| fan.faces[i].0).collect()).collect()
}

/// One vertex replaced by several copies.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexSplit<T> {
    pub original: VertexId,
    /// Faces assigned to each copy; copy 0 keeps the original id.
    pub faces: Vec<Vec<FaceId>>,
    /// Unit shift direction of each copy.
    pub dirs: Vec<Vector3<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan<T> {
    pub splits: Vec<VertexSplit<T>>,
    pub eps: T,
}

impl<T: Scalar> SplitPlan<T> {
    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }

    /// Number of vertices added when the plan is applied.
    pub fn new_vertices(&self) -> usize {
        self.splits.iter().map(|s| s.faces.len() - 1).sum()
    }

    /// One line per split vertex plus the shift length.
    pub fn report_lines(&self) -> Vec<String> {
        let mut out = vec![format!("eps {:e}", self.eps.as_f64())];
        for s in &self.splits {
            let dirs: Vec<String> = s
                .dirs
                .iter()
                .map(|d| format!("({:.6} {:.6} {:.6})", d.x.as_f64(), d.y.as_f64(), d.z.as_f64()))
                .collect();
            let sizes: Vec<usize> = s.faces.iter().map(Vec::len).collect();
            out.push(format!("vertex {} copies {} faces {:?} dirs {}", s.original, s.faces.len(), sizes, dirs.join(" ")));
        }
        out
    }
}

/// Mean of half apex offsets from `v` over `faces`, the umbrella direction.
fn umbrella_direction<T: Scalar>(x: &EmbeddedComplex<T>, v: VertexId, faces: &[FaceId]) -> Vector3<T> {
    let p = x.point(v);
    let mut acc = Point3::zero();
    for &f in faces {
        for w in x.complex.face(f) {
            if w != v {
                acc += (x.point(w) - p) * T::lit(0.5);
            }
        }
    }
    acc / T::of_usize(faces.len().max(1))
}

/// Direction of copy `faces` at `v`: the mean of the edge directions of the
/// fan groups it contains, or the umbrella direction if it has none.
fn copy_direction<T: Scalar>(
    x: &EmbeddedComplex<T>,
    v: VertexId,
    faces: &[FaceId],
    groups: &[(EdgeId, Vec<FaceId>)],
) -> Vector3<T> {
    let p = x.point(v);
    let mine: HashSet<FaceId> = faces.iter().copied().collect();
    let mut acc = Point3::zero();
    let mut n = 0;
    for (e, g) in groups {
        if g.iter().any(|f| mine.contains(f)) {
            for &f in g {
                acc += x.point(x.complex.apex(f, *e)) - p;
            }
            acc = acc / T::of_usize(g.len());
            n += 1;
        }
    }
    let d = if n > 0 { acc } else { umbrella_direction(x, v, faces) };
    d.normalized().or_else(|| umbrella_direction(x, v, faces).normalized()).unwrap_or_else(Point3::zero)
}

/// Face components at `v`. Manifold edges join their two faces;
/// non-manifold edges join faces within a fan group only.
fn vertex_components(
    x: &SimplicialComplex,
    v: VertexId,
    groups: &HashMap<EdgeId, Vec<Vec<FaceId>>>,
) -> Vec<Vec<FaceId>> {
    let fs = x.vertex_faces(v);
    let pos: HashMap<FaceId, usize> = fs.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let mut uf = UnionFind::new(fs.len());
    for &e in x.vertex_edges(v) {
        let inc = x.edge_faces(e);
        if inc.len() == 2 {
            uf.union(pos[&inc[0]], pos[&inc[1]]);
        } else if let Some(gs) = groups.get(&e) {
            for g in gs {
                for w in g.windows(2) {
                    uf.union(pos[&w[0]], pos[&w[1]]);
                }
            }
        }
    }
    let mut comps: Vec<Vec<FaceId>> =
        uf.groups().into_iter().map(|g| { let mut g: Vec<FaceId> = g.into_iter().map(|i| fs[i]).collect(); g.sort_unstable(); g }).collect();
    comps.sort();
    comps
}

/// Applies a plan: copy 0 keeps the vertex id, further copies are
/// appended; every copy is moved by `eps` along its direction.
pub fn apply_plan<T: Scalar>(x: &EmbeddedComplex<T>, plan: &SplitPlan<T>) -> Result<EmbeddedComplex<T>, RamifyError> {
    let mut coords = x.coords().to_vec();
    let mut faces = x.complex.faces().to_vec();
    for s in &plan.splits {
        let p = x.point(s.original);
        for (k, (fs, d)) in s.faces.iter().zip(&s.dirs).enumerate() {
            let q = p + *d * plan.eps;
            let id = if k == 0 {
                coords[s.original] = q;
                s.original
            } else {
                coords.push(q);
                coords.len() - 1
            };
            for &f in fs {
                for w in faces[f].iter_mut() {
                    if *w == s.original {
                        *w = id;
                    }
                }
            }
        }
    }
    let complex = build_complex(&faces)?;
    Ok(EmbeddedComplex { complex, embedding: Embedding { coords } })
}

fn check_intersections<T: Scalar>(y: &EmbeddedComplex<T>, eps: T, tol: &Tolerance<T>) -> Result<(), RamifyError> {
    let m = all_intersections(y, tol)?;
    if !m.is_empty() {
        return Err(RamifyError::NewIntersectionIntroduced { eps: eps.as_f64(), pairs: m.num_pairs() });
    }
    Ok(())
}

/// Split plan for the non-manifold edges of `x`.
pub fn plan_path_splits<T: Scalar>(x: &EmbeddedComplex<T>, eps: T, tol: &Tolerance<T>) -> Result<SplitPlan<T>, RamifyError> {
    let c = &x.complex;
    classify_nonmanifold_edges(c)?;
    let nm = nonmanifold_edges(c);
    if nm.is_empty() {
        return Ok(SplitPlan { splits: Vec::new(), eps });
    }
    let ext = exterior_sides(x, tol, 0)?;
    let mut groups: HashMap<EdgeId, Vec<Vec<FaceId>>> = HashMap::new();
    for e in &nm {
        let id = c.edge_id(e[0], e[1]).expect("edge exists");
        groups.insert(id, fan_groups(x, &EdgeFan::new(x, id)?, &ext));
    }
    let mut verts: Vec<VertexId> = nm.iter().flatten().copied().collect();
    verts.sort_unstable();
    verts.dedup();
    let mut splits = Vec::new();
    for v in verts {
        let comps = vertex_components(c, v, &groups);
        if comps.len() < 2 {
            continue;
        }
        let local: Vec<(EdgeId, Vec<FaceId>)> = c
            .vertex_edges(v)
            .iter()
            .filter_map(|e| groups.get(e).map(|gs| gs.iter().map(move |g| (*e, g.clone()))))
            .flatten()
            .collect();
        let dirs = comps.iter().map(|fs| copy_direction(x, v, fs, &local)).collect();
        splits.push(VertexSplit { original: v, faces: comps, dirs });
    }
    Ok(SplitPlan { splits, eps })
}

/// Removes non-manifold edges by splitting vertices along non-manifold
/// paths. The result has only manifold edges and no new intersections.
pub fn split_nonmanifold_paths<T: Scalar>(
    x: &EmbeddedComplex<T>,
    eps: T,
    tol: &Tolerance<T>,
) -> Result<(EmbeddedComplex<T>, SplitPlan<T>), RamifyError> {
    let plan = plan_path_splits(x, eps, tol)?;
    if plan.is_empty() {
        return Ok((x.clone(), plan));
    }
    let y = apply_plan(x, &plan)?;
    let left = nonmanifold_edges(&y.complex);
    if !left.is_empty() {
        return Err(RamifyError::NonManifoldEdgesRemain(left));
    }
    check_intersections(&y, eps, tol)?;
    Ok((y, plan))
}

/// Split plan giving each local umbrella of a non-manifold vertex its own
/// copy, shifted along the umbrella direction.
pub fn plan_vertex_splits<T: Scalar>(x: &EmbeddedComplex<T>, eps: T) -> Result<SplitPlan<T>, RamifyError> {
    let splits = nonmanifold_vertices(&x.complex)?
        .into_iter()
        .map(|v| {
            let mut faces = x.complex.umbrellas(v);
            for f in faces.iter_mut() {
                f.sort_unstable();
            }
            faces.sort();
            let dirs = faces
                .iter()
                .map(|fs| umbrella_direction(x, v, fs).normalized().unwrap_or_else(Point3::zero))
                .collect();
            VertexSplit { original: v, faces, dirs }
        })
        .collect();
    Ok(SplitPlan { splits, eps })
}

const VERTEX_ROUNDS: usize = 16;

/// Splits non-manifold vertices until the umbrella condition holds
/// everywhere (at most 16 rounds). Requires manifold edges.
pub fn split_nonmanifold_vertices<T: Scalar>(
    x: &EmbeddedComplex<T>,
    eps: T,
    tol: &Tolerance<T>,
) -> Result<(EmbeddedComplex<T>, Vec<SplitPlan<T>>), RamifyError> {
    let mut y = x.clone();
    let mut plans = Vec::new();
    for _ in 0..VERTEX_ROUNDS {
        let plan = plan_vertex_splits(&y, eps)?;
        if plan.is_empty() {
            if !plans.is_empty() {
                check_intersections(&y, eps, tol)?;
            }
            return Ok((y, plans));
        }
        y = apply_plan(&y, &plan)?;
        plans.push(plan);
    }
    if nonmanifold_vertices(&y.complex)?.is_empty() {
        check_intersections(&y, eps, tol)?;
        return Ok((y, plans));
    }
    Err(RamifyError::NoFixedPoint(VERTEX_ROUNDS))
}

/// Outcome of the full non-manifold repair.
#[derive(Debug, Clone)]
pub struct RamifyOutcome<T> {
    pub mesh: EmbeddedComplex<T>,
    pub inner_edges: usize,
    pub outer_edges: usize,
    pub paths: Vec<NonManifoldPath>,
    pub edge_plan: SplitPlan<T>,
    pub vertex_plans: Vec<SplitPlan<T>>,
    /// Shift length that succeeded.
    pub eps: T,
    pub attempts: usize,
}

impl<T: Scalar> RamifyOutcome<T> {
    pub fn report_lines(&self) -> Vec<String> {
        let mut out = vec![format!(
            "non-manifold edges inner {} outer {} paths {} attempts {}",
            self.inner_edges,
            self.outer_edges,
            self.paths.len(),
            self.attempts
        )];
        for (i, p) in self.paths.iter().enumerate() {
            out.push(format!("path {i} {:?} vertices {:?}", p.kind, p.vertices));
        }
        out.extend(self.edge_plan.report_lines().into_iter().map(|l| format!("edge-split {l}")));
        for p in &self.vertex_plans {
            out.extend(p.report_lines().into_iter().map(|l| format!("vertex-split {l}")));
        }
        out
    }

    pub fn max_displacement(&self) -> T {
        let n = self.edge_plan.splits.len() + self.vertex_plans.iter().map(|p| p.splits.len()).sum::<usize>();
        if n == 0 {
            T::zero()
        } else {
            self.eps
        }
    }
}

/// Default shift length: `1e-4` of the bounding-box diagonal.
pub fn default_eps<T: Scalar>(x: &EmbeddedComplex<T>) -> T {
    x.bbox().diagonal() * T::lit(1e-4)
}

const BACKOFF_STEPS: usize = 8;

/// Edge splitting followed by vertex splitting. `eps` defaults to
/// [`default_eps`] and is halved (up to 8 times) while a shift introduces
/// an intersection.
pub fn repair_nonmanifold<T: Scalar>(
    x: &EmbeddedComplex<T>,
    eps: Option<T>,
    tol: &Tolerance<T>,
) -> Result<RamifyOutcome<T>, RamifyError> {
    let (inner, outer) = classify_nonmanifold_edges(&x.complex)?;
    let paths = nonmanifold_paths(x);
    let mut eps = eps.unwrap_or_else(|| default_eps(x));
    let mut attempt = 0;
    loop {
        attempt += 1;
        let run = split_nonmanifold_paths(x, eps, tol)
            .and_then(|(y, edge_plan)| split_nonmanifold_vertices(&y, eps, tol).map(|(z, vp)| (z, edge_plan, vp)));
        match run {
            Ok((mesh, edge_plan, vertex_plans)) => {
                if !edge_plan.is_empty() || !vertex_plans.is_empty() {
                    info!(
                        "ramify: {} edge split(s), {} vertex split round(s), eps {:e}",
                        edge_plan.splits.len(),
                        vertex_plans.len(),
                        eps.as_f64()
                    );
                }
                return Ok(RamifyOutcome {
                    mesh,
                    inner_edges: inner.len(),
                    outer_edges: outer.len(),
                    paths,
                    edge_plan,
                    vertex_plans,
                    eps,
                    attempts: attempt,
                });
            }
            Err(RamifyError::NewIntersectionIntroduced { .. }) if attempt <= BACKOFF_STEPS => {
                debug!("eps {:e} introduced intersections, halving", eps.as_f64());
                eps = eps / T::lit(2.0);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Undirected edge keys of `faces`.
pub fn edge_set(faces: &[[VertexId; 3]]) -> HashSet<[VertexId; 2]> {
    faces.iter().flat_map(|t| [edge_key(t[0], t[1]), edge_key(t[1], t[2]), edge_key(t[0], t[2])]).collect()
}
