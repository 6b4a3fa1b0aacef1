//! Combinatorial simplicial complexes and their embeddings.
//!
//! A complex is determined by its faces. Faces are stored as sorted vertex
//! triples; orientation is an overlay computed by [`orient`].

use std::collections::HashMap;

use thiserror::Error;

use crate::geom::{det3, Aabb, Point3, PointWelder, Tolerance};
use crate::scalar::Scalar;

pub type VertexId = usize;
pub type EdgeId = usize;
pub type FaceId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("complex is not closed: {} edge(s) with fewer than two faces, first {:?}", .0.len(), .0.first())]
    NotClosed(Vec<[VertexId; 2]>),
    #[error("degenerate face {0:?} (repeated vertex)")]
    DegenerateFace([VertexId; 3]),
    #[error("face {0:?} listed more than once")]
    DuplicateFace([VertexId; 3]),
    #[error("vertex {0} is not used by any face")]
    UnusedVertex(VertexId),
    #[error("complex has no faces")]
    Empty,
    #[error("not a simplicial surface: {0}")]
    NotASurface(String),
    #[error("surface is not orientable (conflict at face {0})")]
    NonOrientable(FaceId),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("embedding has {got} coordinates for {expected} vertices")]
    CoordinateCount { expected: usize, got: usize },
    #[error("embedding is not injective: vertices {0} and {1} coincide")]
    NotInjective(VertexId, VertexId),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(VertexId),
}

/// Closed simplicial complex with derived incidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialComplex {
    num_vertices: usize,
    faces: Vec<[VertexId; 3]>,
    edges: Vec<[VertexId; 2]>,
    edge_index: HashMap<[VertexId; 2], EdgeId>,
    edge_faces: Vec<Vec<FaceId>>,
    face_edges: Vec<[EdgeId; 3]>,
    vertex_faces: Vec<Vec<FaceId>>,
    vertex_edges: Vec<Vec<EdgeId>>,
}

#[inline]
pub fn sorted_triple(t: [VertexId; 3]) -> [VertexId; 3] {
    let mut s = t;
    s.sort_unstable();
    s
}

#[inline]
pub fn edge_key(a: VertexId, b: VertexId) -> [VertexId; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Validated construction: rejects degenerate or duplicated faces, unused
/// vertex ids and edges with fewer than two incident faces.
pub fn build_complex(face_triples: &[[VertexId; 3]]) -> Result<SimplicialComplex, ComplexError> {
    let c = SimplicialComplex::from_faces(face_triples)?;
    let open: Vec<[VertexId; 2]> = c
        .edges
        .iter()
        .zip(&c.edge_faces)
        .filter(|(_, fs)| fs.len() < 2)
        .map(|(e, _)| *e)
        .collect();
    if !open.is_empty() {
        return Err(ComplexError::NotClosed(open));
    }
    Ok(c)
}

impl SimplicialComplex {
    /// Builds incidence without the closedness check.
    pub fn from_faces(face_triples: &[[VertexId; 3]]) -> Result<Self, ComplexError> {
        if face_triples.is_empty() {
            return Err(ComplexError::Empty);
        }
        let mut faces = Vec::with_capacity(face_triples.len());
        let mut seen = HashMap::with_capacity(face_triples.len());
        for &t in face_triples {
            let s = sorted_triple(t);
            if s[0] == s[1] || s[1] == s[2] {
                return Err(ComplexError::DegenerateFace(t));
            }
            if seen.insert(s, faces.len()).is_some() {
                return Err(ComplexError::DuplicateFace(s));
            }
            faces.push(s);
        }
        let num_vertices = faces.iter().map(|f| f[2]).max().map_or(0, |m| m + 1);
        let mut vertex_faces = vec![Vec::new(); num_vertices];
        let mut edges = Vec::new();
        let mut edge_index = HashMap::new();
        let mut edge_faces: Vec<Vec<FaceId>> = Vec::new();
        let mut face_edges = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            let mut fe = [0; 3];
            for (k, (a, b)) in [(f[0], f[1]), (f[1], f[2]), (f[0], f[2])].into_iter().enumerate() {
                let key = [a, b];
                let id = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_faces.push(Vec::new());
                    edges.len() - 1
                });
                edge_faces[id].push(fi);
                fe[k] = id;
            }
            face_edges.push(fe);
            for &v in f {
                vertex_faces[v].push(fi);
            }
        }
        if let Some(v) = vertex_faces.iter().position(|fs| fs.is_empty()) {
            return Err(ComplexError::UnusedVertex(v));
        }
        let mut vertex_edges = vec![Vec::new(); num_vertices];
        for (ei, e) in edges.iter().enumerate() {
            vertex_edges[e[0]].push(ei);
            vertex_edges[e[1]].push(ei);
        }
        Ok(Self { num_vertices, faces, edges, edge_index, edge_faces, face_edges, vertex_faces, vertex_edges })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Sorted vertex triples.
    pub fn faces(&self) -> &[[VertexId; 3]] {
        &self.faces
    }

    pub fn face(&self, f: FaceId) -> [VertexId; 3] {
        self.faces[f]
    }

    pub fn edges(&self) -> &[[VertexId; 2]] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> [VertexId; 2] {
        self.edges[e]
    }

    pub fn edge_id(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        self.edge_index.get(&edge_key(a, b)).copied()
    }

    pub fn edge_faces(&self, e: EdgeId) -> &[FaceId] {
        &self.edge_faces[e]
    }

    pub fn face_edges(&self, f: FaceId) -> [EdgeId; 3] {
        self.face_edges[f]
    }

    /// X_2(v): faces containing `v`.
    pub fn vertex_faces(&self, v: VertexId) -> &[FaceId] {
        &self.vertex_faces[v]
    }

    pub fn vertex_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.vertex_edges[v]
    }

    pub fn face_id(&self, t: [VertexId; 3]) -> Option<FaceId> {
        let s = sorted_triple(t);
        let e = self.edge_id(s[0], s[1])?;
        self.edge_faces[e].iter().copied().find(|&f| self.faces[f] == s)
    }

    /// The vertex of face `f` not on edge `e`.
    pub fn apex(&self, f: FaceId, e: EdgeId) -> VertexId {
        let [a, b] = self.edges[e];
        let t = self.faces[f];
        t.into_iter().find(|&v| v != a && v != b).expect("edge belongs to face")
    }

    pub fn is_closed(&self) -> bool {
        self.edge_faces.iter().all(|fs| fs.len() >= 2)
    }

    /// Face ids grouped into edge-connected components, each sorted.
    pub fn connected_components(&self) -> Vec<Vec<FaceId>> {
        let mut comp = vec![usize::MAX; self.faces.len()];
        let mut out = Vec::new();
        for start in 0..self.faces.len() {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![start];
            comp[start] = id;
            let mut members = Vec::new();
            while let Some(f) = stack.pop() {
                members.push(f);
                for &e in &self.face_edges[f] {
                    for &g in &self.edge_faces[e] {
                        if comp[g] == usize::MAX {
                            comp[g] = id;
                            stack.push(g);
                        }
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Local umbrellas at `v`: faces around `v` grouped by connectivity
    /// through edges that contain `v`.
    pub fn umbrellas(&self, v: VertexId) -> Vec<Vec<FaceId>> {
        let fs = &self.vertex_faces[v];
        let pos: HashMap<FaceId, usize> = fs.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let mut uf = UnionFind::new(fs.len());
        for &e in &self.vertex_edges[v] {
            let inc = &self.edge_faces[e];
            for w in inc.windows(2) {
                uf.union(pos[&w[0]], pos[&w[1]]);
            }
        }
        uf.groups().into_iter().map(|g| g.into_iter().map(|i| fs[i]).collect()).collect()
    }
}

/// |V| - |E| + |F|
pub fn euler_characteristic(x: &SimplicialComplex) -> i64 {
    x.num_vertices() as i64 - x.num_edges() as i64 + x.num_faces() as i64
}

/// Edges with three or more incident faces.
pub fn nonmanifold_edges(x: &SimplicialComplex) -> Vec<[VertexId; 2]> {
    x.edges.iter().zip(&x.edge_faces).filter(|(_, fs)| fs.len() >= 3).map(|(e, _)| *e).collect()
}

/// Vertices violating the umbrella condition. Requires every edge to have
/// exactly two faces.
pub fn nonmanifold_vertices(x: &SimplicialComplex) -> Result<Vec<VertexId>, ComplexError> {
    if let Some(e) = x.edge_faces.iter().position(|fs| fs.len() != 2) {
        return Err(ComplexError::PreconditionViolated(format!(
            "edge {:?} has {} faces",
            x.edges[e],
            x.edge_faces[e].len()
        )));
    }
    Ok((0..x.num_vertices()).filter(|&v| x.umbrellas(v).len() > 1).collect())
}

/// Consistent cyclic orders for every face of a simplicial surface.
///
/// Each connected component is anchored at its lowest face id, which keeps
/// its sorted order; neighbours traverse shared edges in opposite directions.
pub fn orient(x: &SimplicialComplex) -> Result<Vec<[VertexId; 3]>, ComplexError> {
    if !nonmanifold_edges(x).is_empty() {
        return Err(ComplexError::NotASurface("non-manifold edge present".into()));
    }
    if !x.is_closed() {
        return Err(ComplexError::NotASurface("open edge present".into()));
    }
    if let Ok(nm) = nonmanifold_vertices(x) {
        if let Some(v) = nm.first() {
            return Err(ComplexError::NotASurface(format!("non-manifold vertex {v}")));
        }
    }
    let mut order: Vec<Option<[VertexId; 3]>> = vec![None; x.num_faces()];
    for start in 0..x.num_faces() {
        if order[start].is_some() {
            continue;
        }
        order[start] = Some(x.faces[start]);
        let mut stack = vec![start];
        while let Some(f) = stack.pop() {
            let of = order[f].expect("assigned");
            for k in 0..3 {
                let (a, b) = (of[k], of[(k + 1) % 3]);
                let e = x.edge_id(a, b).expect("face edge");
                for &g in x.edge_faces(e) {
                    if g == f {
                        continue;
                    }
                    let w = x.apex(g, e);
                    // g must traverse (b, a).
                    let want = [b, a, w];
                    match order[g] {
                        None => {
                            order[g] = Some(want);
                            stack.push(g);
                        }
                        Some(og) => {
                            if !same_cycle(og, want) {
                                return Err(ComplexError::NonOrientable(g));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(order.into_iter().map(|o| o.expect("all faces oriented")).collect())
}

/// Whether two vertex triples describe the same cyclic order.
pub fn same_cycle(a: [VertexId; 3], b: [VertexId; 3]) -> bool {
    (0..3).any(|r| a[0] == b[r] && a[1] == b[(r + 1) % 3] && a[2] == b[(r + 2) % 3])
}

/// Whether the cyclic order `t` traverses `a -> b`.
pub fn traverses(t: [VertexId; 3], a: VertexId, b: VertexId) -> bool {
    (0..3).any(|k| t[k] == a && t[(k + 1) % 3] == b)
}

/// Vertex coordinates indexed by vertex id.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    pub coords: Vec<Point3<T>>,
}

/// A complex together with an injective embedding of its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedComplex<T> {
    pub complex: SimplicialComplex,
    pub embedding: Embedding<T>,
}

impl<T: Scalar> EmbeddedComplex<T> {
    /// Validates coordinate count, finiteness and injectivity within
    /// `tol.eps_point`.
    pub fn new(
        complex: SimplicialComplex,
        coords: Vec<Point3<T>>,
        tol: &Tolerance<T>,
    ) -> Result<Self, ComplexError> {
        if coords.len() != complex.num_vertices() {
            return Err(ComplexError::CoordinateCount { expected: complex.num_vertices(), got: coords.len() });
        }
        if let Some(v) = coords.iter().position(|p| !p.is_finite()) {
            return Err(ComplexError::NonFinite(v));
        }
        let mut welder = PointWelder::new(tol.eps_point);
        for (v, &p) in coords.iter().enumerate() {
            if let Some(u) = welder.find(p) {
                return Err(ComplexError::NotInjective(u, v));
            }
            welder.push_unchecked(p);
        }
        Ok(Self { complex, embedding: Embedding { coords } })
    }

    /// Builds and validates (closed, injective) from raw faces and coordinates.
    pub fn from_parts(
        faces: &[[VertexId; 3]],
        coords: Vec<Point3<T>>,
        tol: &Tolerance<T>,
    ) -> Result<Self, ComplexError> {
        Self::new(build_complex(faces)?, coords, tol)
    }

    #[inline]
    pub fn point(&self, v: VertexId) -> Point3<T> {
        self.embedding.coords[v]
    }

    pub fn coords(&self) -> &[Point3<T>] {
        &self.embedding.coords
    }

    /// Corner positions of face `f` in sorted-id order.
    pub fn face_points(&self, f: FaceId) -> [Point3<T>; 3] {
        let t = self.complex.face(f);
        [self.point(t[0]), self.point(t[1]), self.point(t[2])]
    }

    /// Unnormalized normal of the sorted triple, `(b - a) x (c - a)`.
    pub fn face_normal_raw(&self, f: FaceId) -> Point3<T> {
        let [a, b, c] = self.face_points(f);
        (b - a).cross(c - a)
    }

    pub fn bbox(&self) -> Aabb<T> {
        Aabb::from_points(self.coords()).expect("non-empty complex")
    }

    pub fn default_tolerance(&self) -> Tolerance<T> {
        Tolerance::for_extent(self.bbox().diagonal())
    }

    pub fn centroid(&self) -> Point3<T> {
        let n = T::of_usize(self.coords().len());
        self.coords().iter().fold(Point3::zero(), |a, &p| a + p) / n
    }

    /// Sub-complex spanned by `faces`, with vertex ids compacted in
    /// increasing order of the original ids. Returns the new complex and the
    /// map from new vertex ids to old ones.
    pub fn restrict_to_faces(&self, faces: &[FaceId]) -> Result<(Self, Vec<VertexId>), ComplexError> {
        let mut used = vec![false; self.complex.num_vertices()];
        for &f in faces {
            for v in self.complex.face(f) {
                used[v] = true;
            }
        }
        let mut remap = vec![usize::MAX; used.len()];
        let mut back = Vec::new();
        for (v, &u) in used.iter().enumerate() {
            if u {
                remap[v] = back.len();
                back.push(v);
            }
        }
        let triples: Vec<[VertexId; 3]> = faces
            .iter()
            .map(|&f| {
                let t = self.complex.face(f);
                [remap[t[0]], remap[t[1]], remap[t[2]]]
            })
            .collect();
        let complex = SimplicialComplex::from_faces(&triples)?;
        let coords = back.iter().map(|&v| self.point(v)).collect();
        Ok((Self { complex, embedding: Embedding { coords } }, back))
    }

    /// Signed enclosed volume for the given cyclic face orders
    /// (positive when the orders are outward by the right-hand rule).
    pub fn signed_volume(&self, orders: &[[VertexId; 3]]) -> T {
        orders
            .iter()
            .fold(T::zero(), |acc, t| acc + det3(self.point(t[0]), self.point(t[1]), self.point(t[2])))
            / T::lit(6.0)
    }

    /// Orientation of a surface with right-hand-rule normals pointing out of
    /// each connected component's enclosed volume.
    pub fn outward_orientation(&self) -> Result<Vec<[VertexId; 3]>, ComplexError> {
        let mut orders = orient(&self.complex)?;
        for comp in self.complex.connected_components() {
            let sub: Vec<[VertexId; 3]> = comp.iter().map(|&f| orders[f]).collect();
            if self.signed_volume(&sub) < T::zero() {
                for &f in &comp {
                    let t = orders[f];
                    orders[f] = [t[0], t[2], t[1]];
                }
            }
        }
        Ok(orders)
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddedComplex<U> {
        EmbeddedComplex {
            complex: self.complex.clone(),
            embedding: Embedding { coords: self.coords().iter().map(|p| p.cast()).collect() },
        }
    }
}

/// Union-find with path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    /// Joins the sets; the smaller root becomes the representative.
    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Groups ordered by smallest member, members ascending.
    pub fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            let s = *slot.entry(r).or_insert_with(|| {
                out.push(Vec::new());
                out.len() - 1
            });
            out[s].push(i);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const TET: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];

    #[test]
    fn tetrahedron_counts() {
        let c = build_complex(&TET).unwrap();
        assert_eq!((c.num_vertices(), c.num_edges(), c.num_faces()), (4, 6, 4));
        assert_eq!(euler_characteristic(&c), 2);
        assert!(nonmanifold_edges(&c).is_empty());
        assert!(nonmanifold_vertices(&c).unwrap().is_empty());
    }

    #[test]
    fn lone_triangle_not_closed() {
        match build_complex(&[[0, 1, 2]]) {
            Err(ComplexError::NotClosed(es)) => assert_eq!(es.len(), 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(build_complex(&[[0, 0, 1]]), Err(ComplexError::DegenerateFace(_))));
        assert!(matches!(
            build_complex(&[[0, 1, 2], [2, 1, 0]]),
            Err(ComplexError::DuplicateFace(_))
        ));
    }

    #[test]
    fn icosahedron_counts() {
        let ico = fixtures::regular_icosahedron();
        let c = &ico.complex;
        assert_eq!((c.num_vertices(), c.num_edges(), c.num_faces()), (12, 30, 20));
        assert_eq!(euler_characteristic(c), 2);
        assert!(orient(c).is_ok());
    }

    #[test]
    fn glued_tetrahedra_edge_is_nonmanifold() {
        // Second tetrahedron shares edge {0,1}.
        let mut faces = TET.to_vec();
        faces.extend([[0, 1, 4], [0, 1, 5], [0, 4, 5], [1, 4, 5]]);
        let c = build_complex(&faces).unwrap();
        assert_eq!(nonmanifold_edges(&c), vec![[0, 1]]);
        assert!(matches!(nonmanifold_vertices(&c), Err(ComplexError::PreconditionViolated(_))));
        assert!(matches!(orient(&c), Err(ComplexError::NotASurface(_))));
    }

    #[test]
    fn shared_vertex_is_nonmanifold() {
        let mut faces = TET.to_vec();
        faces.extend([[0, 4, 5], [0, 4, 6], [0, 5, 6], [4, 5, 6]]);
        let c = build_complex(&faces).unwrap();
        assert!(nonmanifold_edges(&c).is_empty());
        assert_eq!(nonmanifold_vertices(&c).unwrap(), vec![0]);
        assert_eq!(c.umbrellas(0).len(), 2);
    }

    #[test]
    fn octahedron_is_manifold() {
        let o = fixtures::octahedron();
        assert!(nonmanifold_vertices(&o.complex).unwrap().is_empty());
        assert_eq!(euler_characteristic(&o.complex), 2);
    }

    fn check_orientation(c: &SimplicialComplex, orders: &[[usize; 3]]) {
        for e in 0..c.num_edges() {
            let [a, b] = c.edge(e);
            let fs = c.edge_faces(e);
            assert_eq!(fs.len(), 2);
            let (f, g) = (orders[fs[0]], orders[fs[1]]);
            assert_eq!(traverses(f, a, b), traverses(g, b, a));
        }
    }

    #[test]
    fn orientation_is_consistent_and_outward() {
        let tet = fixtures::tetrahedron();
        let orders = tet.outward_orientation().unwrap();
        check_orientation(&tet.complex, &orders);
        let centroid = tet.centroid();
        for t in &orders {
            let (a, b, c) = (tet.point(t[0]), tet.point(t[1]), tet.point(t[2]));
            let n = (b - a).cross(c - a);
            let mid = (a + b + c) / 3.0;
            assert!(n.dot(mid - centroid) > 0.0);
        }
        let ico = fixtures::regular_icosahedron();
        check_orientation(&ico.complex, &orient(&ico.complex).unwrap());
    }

    #[test]
    fn orient_detects_nonorientable() {
        // Minimal triangulation of the real projective plane (6 vertices,
        // 10 faces) plus nothing else: every edge has two faces.
        let rp2 = [
            [0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5], [0, 5, 1],
            [1, 2, 4], [2, 3, 5], [3, 4, 1], [4, 5, 2], [5, 1, 3],
        ];
        let c = build_complex(&rp2).unwrap();
        assert_eq!(euler_characteristic(&c), 1);
        assert!(matches!(orient(&c), Err(ComplexError::NonOrientable(_))));
    }

    #[test]
    fn embedding_injectivity_checked() {
        let tol = Tolerance::new(1e-9, 1e-9, 1e-12);
        let c = build_complex(&TET).unwrap();
        let mut coords = fixtures::tetrahedron().embedding.coords;
        coords[3] = coords[0];
        assert!(matches!(EmbeddedComplex::new(c, coords, &tol), Err(ComplexError::NotInjective(0, 3))));
    }

    /// Direct check of the surface conditions: every edge in exactly two
    /// faces, and the faces at each vertex can be walked as one cycle.
    fn surface_oracle(faces: &[[usize; 3]]) -> bool {
        let mut edge_count: HashMap<[usize; 2], usize> = HashMap::new();
        for f in faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[0], f[2])] {
                *edge_count.entry(edge_key(a, b)).or_default() += 1;
            }
        }
        if edge_count.values().any(|&n| n != 2) {
            return false;
        }
        let nv = faces.iter().flatten().max().unwrap() + 1;
        for v in 0..nv {
            let star: Vec<&[usize; 3]> = faces.iter().filter(|f| f.contains(&v)).collect();
            // Walk: from the first face, repeatedly cross an unused edge at v.
            let mut visited = vec![false; star.len()];
            let mut cur = 0;
            visited[0] = true;
            let mut count = 1;
            loop {
                let next = (0..star.len()).find(|&j| {
                    !visited[j] && {
                        let shared: Vec<_> = star[cur].iter().filter(|x| star[j].contains(x)).collect();
                        shared.len() == 2
                    }
                });
                match next {
                    Some(j) => {
                        visited[j] = true;
                        cur = j;
                        count += 1;
                    }
                    None => break,
                }
            }
            if count != star.len() {
                return false;
            }
        }
        true
    }

    #[test]
    fn manifold_checks_agree_with_oracle() {
        let cases: Vec<Vec<[usize; 3]>> = vec![
            TET.to_vec(),
            {
                let mut f = TET.to_vec();
                f.extend([[0, 4, 5], [0, 4, 6], [0, 5, 6], [4, 5, 6]]);
                f
            },
            {
                let mut f = TET.to_vec();
                f.extend([[0, 1, 4], [0, 1, 5], [0, 4, 5], [1, 4, 5]]);
                f
            },
            fixtures::regular_icosahedron().complex.faces().to_vec(),
            fixtures::cube_with_diaphragm().complex.faces().to_vec(),
            fixtures::two_tetrahedra_sharing_vertex().complex.faces().to_vec(),
        ];
        for faces in cases {
            let c = build_complex(&faces).unwrap();
            let ours = nonmanifold_edges(&c).is_empty()
                && nonmanifold_vertices(&c).map(|v| v.is_empty()).unwrap_or(false);
            assert_eq!(ours, surface_oracle(&faces), "{faces:?}");
        }
    }
}
