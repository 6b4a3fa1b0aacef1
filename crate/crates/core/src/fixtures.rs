//! Deterministic test and benchmark meshes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::complex::{EmbeddedComplex, VertexId};
use crate::geom::{Mat3, Point3, Tolerance};

pub type Mesh = EmbeddedComplex<f64>;

/// Golden ratio.
pub const PHI: f64 = 1.618_033_988_749_895;

fn p(x: f64, y: f64, z: f64) -> Point3<f64> {
    Point3::new(x, y, z)
}

/// Assembles a validated mesh from faces and coordinates. Panics on invalid
/// input, since fixtures are fixed constructions.
pub fn mesh(faces: &[[VertexId; 3]], coords: Vec<Point3<f64>>) -> Mesh {
    let tol = Tolerance::for_points(&coords);
    EmbeddedComplex::from_parts(faces, coords, &tol).expect("fixture is a valid closed complex")
}

pub fn tetrahedron() -> Mesh {
    mesh(
        &[[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]],
        vec![p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.), p(0., 0., 1.)],
    )
}

/// Regular tetrahedron inscribed in the cube [-1, 1]^3.
pub fn regular_tetrahedron() -> Mesh {
    mesh(
        &[[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]],
        vec![p(1., 1., 1.), p(1., -1., -1.), p(-1., 1., -1.), p(-1., -1., 1.)],
    )
}

pub fn octahedron() -> Mesh {
    let coords = vec![p(1., 0., 0.), p(-1., 0., 0.), p(0., 1., 0.), p(0., -1., 0.), p(0., 0., 1.), p(0., 0., -1.)];
    let mut faces = Vec::new();
    for x in [0, 1] {
        for y in [2, 3] {
            for z in [4, 5] {
                faces.push([x, y, z]);
            }
        }
    }
    mesh(&faces, coords)
}

/// The twelve points (0, ±1, ±φ) and their cyclic permutations.
pub fn icosahedron_vertices() -> Vec<Point3<f64>> {
    let mut v = Vec::with_capacity(12);
    for s1 in [1.0, -1.0] {
        for s2 in [PHI, -PHI] {
            v.push(p(0., s1, s2));
        }
    }
    for s1 in [1.0, -1.0] {
        for s2 in [PHI, -PHI] {
            v.push(p(s1, s2, 0.));
        }
    }
    for s1 in [1.0, -1.0] {
        for s2 in [PHI, -PHI] {
            v.push(p(s2, 0., s1));
        }
    }
    v
}

/// Vertex triples whose pairwise distances all equal `d`.
fn equilateral_triples(v: &[Point3<f64>], d: f64) -> Vec<[VertexId; 3]> {
    let close = |i: usize, j: usize| (v[i].distance(v[j]) - d).abs() < 1e-9;
    let mut faces = Vec::new();
    for a in 0..v.len() {
        for b in a + 1..v.len() {
            if !close(a, b) {
                continue;
            }
            for c in b + 1..v.len() {
                if close(a, c) && close(b, c) {
                    faces.push([a, b, c]);
                }
            }
        }
    }
    faces
}

/// Regular icosahedron with edge length 2.
pub fn regular_icosahedron() -> Mesh {
    let v = icosahedron_vertices();
    let faces = equilateral_triples(&v, 2.0);
    mesh(&faces, v)
}

/// Great icosahedron: same vertices as the regular one, faces spanned by
/// second neighbours (edge length 2φ). Heavily self-intersecting.
pub fn great_icosahedron() -> Mesh {
    let v = icosahedron_vertices();
    let faces = equilateral_triples(&v, 2.0 * PHI);
    mesh(&faces, v)
}

/// Vertex and face lists of an axis-aligned box, vertex `i` at corner
/// `(bit0, bit1, bit2)`.
fn box_parts(lo: Point3<f64>, hi: Point3<f64>) -> (Vec<[VertexId; 3]>, Vec<Point3<f64>>) {
    let coords = (0..8)
        .map(|i| {
            p(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            )
        })
        .collect();
    let faces = vec![
        [0, 1, 3], [0, 3, 2], // z = lo
        [4, 5, 7], [4, 7, 6], // z = hi
        [0, 1, 5], [0, 5, 4], // y = lo
        [2, 3, 7], [2, 7, 6], // y = hi
        [0, 2, 6], [0, 6, 4], // x = lo
        [1, 3, 7], [1, 7, 5], // x = hi
    ];
    (faces, coords)
}

pub fn cuboid(lo: Point3<f64>, hi: Point3<f64>) -> Mesh {
    let (f, c) = box_parts(lo, hi);
    mesh(&f, c)
}

pub fn unit_cube() -> Mesh {
    cuboid(p(0., 0., 0.), p(1., 1., 1.))
}

/// Box [0,1]x[0,1]x[0,2] with a wall at z = 1: three chambers and four
/// non-manifold edges around the wall.
pub fn cube_with_diaphragm() -> Mesh {
    // Rings of 4 at z = 0, 1, 2; ring k occupies ids 4k..4k+4 in the order
    // (0,0), (1,0), (1,1), (0,1).
    let sq = [(0., 0.), (1., 0.), (1., 1.), (0., 1.)];
    let mut coords = Vec::new();
    for z in [0., 1., 2.] {
        for (x, y) in sq {
            coords.push(p(x, y, z));
        }
    }
    let mut faces = vec![[0, 1, 2], [0, 2, 3], [8, 9, 10], [8, 10, 11], [4, 5, 6], [4, 6, 7]];
    for ring in [0, 4] {
        for k in 0..4 {
            let (a, b) = (ring + k, ring + (k + 1) % 4);
            faces.push([a, b, b + 4]);
            faces.push([a, b + 4, a + 4]);
        }
    }
    mesh(&faces, coords)
}

/// Cube [-2,2]^3 with the cube [-1,1]^3 inside it.
pub fn nested_cubes() -> Mesh {
    let (mut faces, mut coords) = box_parts(p(-2., -2., -2.), p(2., 2., 2.));
    let (inner, ic) = box_parts(p(-1., -1., -1.), p(1., 1., 1.));
    faces.extend(inner.iter().map(|t| [t[0] + 8, t[1] + 8, t[2] + 8]));
    coords.extend(ic);
    mesh(&faces, coords)
}

/// A regular tetrahedron and a copy rotated a quarter turn about z and
/// shifted off-centre, so the two surfaces cross in general position.
pub fn interlocked_tetrahedra() -> Mesh {
    let a = regular_tetrahedron();
    let rot = Mat3::rotation(p(0., 0., 1.), std::f64::consts::FRAC_PI_2);
    let shift = p(0.13, 0.07, 0.05);
    let mut coords = a.coords().to_vec();
    coords.extend(a.coords().iter().map(|&q| rot.apply(q) + shift));
    let mut faces = a.complex.faces().to_vec();
    faces.extend(a.complex.faces().iter().map(|t| [t[0] + 4, t[1] + 4, t[2] + 4]));
    mesh(&faces, coords)
}

/// Two tetrahedra touching at vertex 0 only.
pub fn two_tetrahedra_sharing_vertex() -> Mesh {
    let coords = vec![
        p(0., 0., 0.),
        p(1., 0., 0.),
        p(0., 1., 0.),
        p(0.3, 0.3, 1.),
        p(-1., 0., 0.),
        p(0., -1., 0.),
        p(-0.3, -0.3, -1.),
    ];
    let faces = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3], [0, 4, 5], [0, 4, 6], [0, 5, 6], [4, 5, 6]];
    mesh(&faces, coords)
}

/// Two tetrahedra sharing the edge {0, 1}, on opposite sides of it.
pub fn two_tetrahedra_sharing_edge() -> Mesh {
    let coords = vec![
        p(0., 0., 0.),
        p(1., 0., 0.),
        p(0.5, 1., 0.),
        p(0.5, 0.5, 1.),
        p(0.5, -1., 0.),
        p(0.5, -0.5, -1.),
    ];
    let faces = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3], [0, 1, 4], [0, 1, 5], [0, 4, 5], [1, 4, 5]];
    mesh(&faces, coords)
}

/// Two long boxes [0,3]x[0,1]^2 and [0,3]x[-1,0]^2 touching along the x-axis,
/// subdivided at x = 0, 1, 2, 3: a chain of three non-manifold edges.
pub fn chain_boxes() -> Mesh {
    let mut coords: Vec<Point3<f64>> = (0..4).map(|i| p(i as f64, 0., 0.)).collect();
    let mut faces = Vec::new();
    for s in [1.0, -1.0] {
        // Cross-section corners in order (0,0), (s,0), (s,s), (0,s).
        let base = coords.len();
        for i in 0..4 {
            for (y, z) in [(s, 0.), (s, s), (0., s)] {
                coords.push(p(i as f64, y, z));
            }
        }
        let id = |i: usize, k: usize| if k == 0 { i } else { base + 3 * i + (k - 1) };
        for i in 0..3 {
            for k in 0..4 {
                let k1 = (k + 1) % 4;
                let (a, b, c, d) = (id(i, k), id(i, k1), id(i + 1, k1), id(i + 1, k));
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            }
        }
        for i in [0, 3] {
            faces.push([id(i, 0), id(i, 1), id(i, 2)]);
            faces.push([id(i, 0), id(i, 2), id(i, 3)]);
        }
    }
    mesh(&faces, coords)
}

/// Rotational surface with cyclic symmetry of order `n`: two poles and three
/// rings of `n` vertices. The middle ring is the widest and is rotated
/// against the others; the lowest ring sits above it, so the lower band
/// folds back through the upper one and the surface intersects itself.
///
/// Vertex ids: 0 top pole, 1 bottom pole, then ring `r` vertex `k` at
/// `2 + 3k + r`. Face `6k + j` is the `j`-th face of wedge `k`, so the
/// rotation by 2π/n maps face `6k + j` to face `6(k+1) + j`.
pub fn twisted_rotational_surface(n: usize) -> Mesh {
    assert!(n >= 3);
    let step = std::f64::consts::TAU / n as f64;
    let twist = 0.45 * std::f64::consts::PI;
    let rings = [(1.0, 0.6, 0.0), (2.0, 0.0, twist), (1.5, 0.3, 0.0)];
    let mut coords = vec![p(0., 0., 1.5), p(0., 0., -1.5)];
    for k in 0..n {
        for &(r, z, off) in &rings {
            let a = k as f64 * step + off;
            coords.push(p(r * a.cos(), r * a.sin(), z));
        }
    }
    let v = |k: usize, r: usize| 2 + 3 * (k % n) + r;
    let mut faces = Vec::with_capacity(6 * n);
    for k in 0..n {
        faces.push([0, v(k, 0), v(k + 1, 0)]);
        faces.push([v(k, 0), v(k, 1), v(k + 1, 1)]);
        faces.push([v(k, 0), v(k + 1, 1), v(k + 1, 0)]);
        faces.push([v(k, 1), v(k, 2), v(k + 1, 2)]);
        faces.push([v(k, 1), v(k + 1, 2), v(k + 1, 1)]);
        faces.push([1, v(k, 2), v(k + 1, 2)]);
    }
    mesh(&faces, coords)
}

/// Convex polytope on `n` random points of the unit sphere. Faces are the
/// triples with every other point strictly on one side.
pub fn random_convex_polytope(n: usize, seed: u64) -> Mesh {
    assert!(n >= 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<Point3<f64>> = (0..n)
        .map(|_| loop {
            let q = p(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let r = q.norm();
            if r > 0.1 && r <= 1.0 {
                break q / r;
            }
        })
        .collect();
    let mut faces = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let nrm = (coords[b] - coords[a]).cross(coords[c] - coords[a]);
                let mut pos = false;
                let mut neg = false;
                for (d, &q) in coords.iter().enumerate() {
                    if d == a || d == b || d == c {
                        continue;
                    }
                    let s = nrm.dot(q - coords[a]);
                    pos |= s > 0.0;
                    neg |= s < 0.0;
                }
                if !(pos && neg) {
                    faces.push([a, b, c]);
                }
            }
        }
    }
    mesh(&faces, coords)
}

/// Applies `m` to every vertex and adds `t`.
pub fn transformed(x: &Mesh, m: &Mat3<f64>, t: Point3<f64>) -> Mesh {
    let coords = x.coords().iter().map(|&q| m.apply(q) + t).collect();
    mesh(x.complex.faces(), coords)
}
