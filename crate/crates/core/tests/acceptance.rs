//! Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and
//! fails the run if any criterion fails.

use std::collections::{HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use meshmend::chambers::{all_chambers, chamber_containing};
use meshmend::complex::nonmanifold_edges;
use meshmend::geom::{Point3, Tolerance};
use meshmend::intersect::{all_intersections, IntersectionMap};
use meshmend::meshio::{self, MeshFormat};
use meshmend::outerhull::{initial_face, Side};
use meshmend::pipeline::{self, PipelineConfig};
use meshmend::ramify::repair_nonmanifold;
use meshmend::retriangulate::{clean_data, extract_triangles, fix_planar_intersections, triangulate_disc, PlanarSubdivision};
use meshmend::symmetry::{burnside_orbit_count, cyclic_group, face_orbits, icosahedral_group, symmetric_all_intersections, verify_group};
use meshmend::{euler_characteristic, fixtures, Matrix, Mesh, SimplicialComplex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Verdict;

fn pass_if(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn z() -> Point3<f64> {
    Point3::new(0.0, 0.0, 1.0)
}

fn counts(c: &SimplicialComplex) -> (usize, usize, usize, i64) {
    (c.num_vertices(), c.num_edges(), c.num_faces(), euler_characteristic(c))
}

/// Every edge in exactly two faces and the link of every vertex a single
/// cycle.
fn is_simplicial_surface(faces: &[[usize; 3]]) -> Result<(), String> {
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    let mut link: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for t in faces {
        for k in 0..3 {
            let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
            link.entry(a).or_default().push((b, c));
        }
    }
    if let Some((e, n)) = edge_count.iter().find(|(_, &n)| n != 2) {
        return Err(format!("edge {e:?} in {n} faces"));
    }
    for (v, l) in &link {
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(b, c) in l {
            adj.entry(b).or_default().push(c);
            adj.entry(c).or_default().push(b);
        }
        if adj.values().any(|n| n.len() != 2) {
            return Err(format!("vertex {v}: link is not a union of cycles"));
        }
        let start = *adj.keys().next().unwrap();
        let mut seen = HashSet::from([start]);
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &w in &adj[&u] {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        if seen.len() != adj.len() {
            return Err(format!("vertex {v}: {} umbrellas", if seen.len() < adj.len() { "several" } else { "broken" }));
        }
    }
    Ok(())
}

/// Volume of a closed manifold face set, orienting faces by propagation
/// across edges.
fn enclosed_volume(x: &Mesh, faces: &[usize]) -> Result<f64, String> {
    let tri: Vec<[usize; 3]> = faces.iter().map(|&f| x.complex.face(f)).collect();
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (i, t) in tri.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            by_edge.entry((a.min(b), a.max(b))).or_default().push(i);
        }
    }
    if by_edge.values().any(|v| v.len() != 2) {
        return Err("hull is not a manifold surface".into());
    }
    let directed = |t: [usize; 3], a: usize, b: usize| (0..3).any(|k| t[k] == a && t[(k + 1) % 3] == b);
    let mut oriented: Vec<Option<[usize; 3]>> = vec![None; tri.len()];
    let mut total = 0.0;
    for seed in 0..tri.len() {
        if oriented[seed].is_some() {
            continue;
        }
        oriented[seed] = Some(tri[seed]);
        let mut stack = vec![seed];
        let mut vol = 0.0;
        while let Some(i) = stack.pop() {
            let t = oriented[i].unwrap();
            let [a, b, c] = t.map(|v| x.point(v));
            vol += a.dot(b.cross(c)) / 6.0;
            for k in 0..3 {
                let (u, v) = (t[k], t[(k + 1) % 3]);
                for &j in &by_edge[&(u.min(v), u.max(v))] {
                    if j == i {
                        continue;
                    }
                    let s = tri[j];
                    let want = if directed(s, v, u) { s } else { [s[0], s[2], s[1]] };
                    match oriented[j] {
                        None => {
                            oriented[j] = Some(want);
                            stack.push(j);
                        }
                        Some(o) if !directed(o, v, u) => return Err("hull is not orientable".into()),
                        Some(_) => {}
                    }
                }
            }
        }
        total += vol.abs();
    }
    Ok(total)
}

fn c1_great_icosahedron_chambers() -> Verdict {
    let t0 = Instant::now();
    let x = fixtures::great_icosahedron();
    let cfg = PipelineConfig::default();
    let (mesh, lab) = pipeline::cmd_chambers(&x, &cfg, None).expect("chambers");
    let n = lab.num_bounded();
    let centre = Point3::new(0.0, 0.0, 0.0);
    let Some(id) = chamber_containing(&mesh, &lab, centre, 7) else {
        return Verdict::Fail(format!("{n} bounded chambers; no chamber found at the centre"));
    };
    let (sub, _) = mesh.restrict_to_faces(&lab.chambers[id].faces()).expect("restrict");
    let (v, _, f, chi) = counts(&sub.complex);
    let secs = t0.elapsed().as_secs_f64();
    pass_if(
        n == 413 && (v, f, chi) == (12, 20, 2) && secs < 60.0,
        format!("{n} bounded chambers (want 413); centre chamber V={v} F={f} χ={chi} (want 12/20/2); {secs:.1} s (< 60 s)"),
    )
}

fn dataset_file(stem: &str) -> Option<PathBuf> {
    let mut dirs: Vec<PathBuf> = Vec::new();
    if let Ok(d) = std::env::var("MESHMEND_DATA") {
        dirs.push(d.into());
    }
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    dirs.push(root.join("data"));
    dirs.push(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    for d in dirs {
        for ext in ["off", "stl", "OFF", "STL"] {
            let p = d.join(format!("{stem}.{ext}"));
            if p.is_file() {
                return Some(p);
            }
        }
    }
    None
}

fn c2_icosahedron_3_1() -> Verdict {
    let Some(path) = dataset_file("Icosahedron_3_1") else {
        return Verdict::Skip(
            "dataset file Icosahedron_3_1.{off,stl} not found under $MESHMEND_DATA or data/; criterion not evaluated".into(),
        );
    };
    let x: Mesh = meshio::load_mesh(&path, None).expect("load dataset");
    let cfg = PipelineConfig::default();
    let map = pipeline::cmd_intersect(&x, &cfg, None).expect("intersect");
    let (hull, _) = pipeline::cmd_outer_hull(&x, &cfg, None).expect("outer hull");
    let hull_counts = counts(&hull.complex);
    let nm = nonmanifold_edges(&hull.complex).len();
    let (y, _) = pipeline::cmd_repair(&x, &cfg, None).expect("repair");
    let out = counts(&y.complex);
    pass_if(
        map.len() == 55 && hull_counts == (44, 140, 100, 4) && nm == 10 && out == (52, 150, 100, 2),
        format!(
            "segments {} (want 55); hull {:?} (want (44, 140, 100, 4)); non-manifold edges {nm} (want 10); output {:?} (want (52, 150, 100, 2))",
            map.len(),
            hull_counts,
            out
        ),
    )
}

fn c3_c23_orbits() -> Verdict {
    let x = fixtures::twisted_rotational_surface(23);
    let (v, e, f, chi) = counts(&x.complex);
    let g = verify_group(&x, &cyclic_group(23, z()), &x.default_tolerance()).expect("C23 verifies");
    let orbits = face_orbits(&x, &g).num_orbits();
    let burnside = burnside_orbit_count(&g.fperm);
    // Orbits found directly from the face permutations.
    let mut seen = vec![false; f];
    let mut direct = 0;
    for s in 0..f {
        if !seen[s] {
            direct += 1;
            for p in &g.fperm {
                seen[p[s]] = true;
            }
        }
    }
    pass_if(
        (f, v, e, chi) == (138, 71, 207, 2) && g.order() == 23 && orbits == 6 && direct == 6 && burnside == 6,
        format!("F={f} V={v} E={e} χ={chi} (want 138/71/207/2); |G|={}; orbits {orbits}, direct {direct}, Burnside {burnside} (want 6)", g.order()),
    )
}

/// Multiset equality of two segment lists, endpoints matched within `eps`.
fn unmatched(a: &IntersectionMap<f64>, b: &IntersectionMap<f64>, eps: f64) -> usize {
    let mut pool: HashMap<(usize, usize), Vec<(Point3<f64>, Point3<f64>)>> = HashMap::new();
    for s in b.segments() {
        pool.entry((s.face_a, s.face_b)).or_default().push((s.p0, s.p1));
    }
    let mut missing = 0;
    for s in a.segments() {
        let cands = pool.entry((s.face_a, s.face_b)).or_default();
        let close = |p: Point3<f64>, q: Point3<f64>| p.distance(q) <= eps;
        match cands.iter().position(|&(p, q)| (close(p, s.p0) && close(q, s.p1)) || (close(p, s.p1) && close(q, s.p0))) {
            Some(i) => {
                cands.swap_remove(i);
            }
            None => missing += 1,
        }
    }
    missing + pool.values().map(Vec::len).sum::<usize>()
}

/// The proper rotations of a group.
fn rotations(mats: &[Matrix]) -> Vec<Matrix> {
    mats.iter().filter(|m| m.det() > 0.0).copied().collect()
}

fn c4_symmetric_equals_brute_force() -> Verdict {
    let cases: Vec<(&str, Mesh, Vec<Matrix>)> = vec![
        ("great icosahedron / Ih", fixtures::great_icosahedron(), icosahedral_group()),
        ("great icosahedron / C5 about a vertex", fixtures::great_icosahedron(), cyclic_group(5, fixtures::icosahedron_vertices()[0])),
        ("great icosahedron / I", fixtures::great_icosahedron(), rotations(&icosahedral_group())),
        ("icosahedron / Ih", fixtures::regular_icosahedron(), icosahedral_group()),
        ("C23 surface / C23", fixtures::twisted_rotational_surface(23), cyclic_group(23, z())),
        ("C7 surface / C7", fixtures::twisted_rotational_surface(7), cyclic_group(7, z())),
        ("C5 surface / C5", fixtures::twisted_rotational_surface(5), cyclic_group(5, z())),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, x, mats) in cases {
        let tol = x.default_tolerance();
        let g = verify_group(&x, &mats, &tol).expect("group verifies");
        let o = face_orbits(&x, &g);
        let sym = symmetric_all_intersections(&x, &g, &o, &tol).expect("symmetric");
        let brute = all_intersections(&x, &tol).expect("brute force");
        let bad = unmatched(&sym, &brute, tol.eps_point);
        let ratio = brute.stats.pairs_considered as f64 / sym.stats.pairs_considered as f64;
        let free = o.stabilizers.iter().all(|s| s.len() == 1);
        let ratio_ok = !free || ratio >= 0.8 * g.order() as f64;
        ok &= bad == 0 && ratio_ok;
        parts.push(format!(
            "{name}: {} segs, {bad} unmatched, pair ratio {ratio:.1}{}",
            brute.len(),
            if free { format!(" (need ≥ {:.1})", 0.8 * g.order() as f64) } else { " (not free)".into() }
        ));
    }
    pass_if(ok, parts.join("; "))
}

/// Orthonormal 2D coordinates in the plane of `a, b, c`.
fn plane_coords(a: Point3<f64>, b: Point3<f64>, c: Point3<f64>) -> impl Fn(Point3<f64>) -> [f64; 2] {
    let e1 = (b - a) / (b - a).norm();
    let n = (b - a).cross(c - a);
    let e2 = n.cross(e1);
    let e2 = e2 / e2.norm();
    move |p| [(p - a).dot(e1), (p - a).dot(e2)]
}

fn signed_area(t: [[f64; 2]; 3]) -> f64 {
    0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]))
}

/// Whether two counter-clockwise triangles share interior points, by
/// separating axes.
fn interiors_overlap(s: [[f64; 2]; 3], t: [[f64; 2]; 3], tol: f64) -> bool {
    for poly in [s, t] {
        for k in 0..3 {
            let (p, q) = (poly[k], poly[(k + 1) % 3]);
            let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
            let n = [(q[1] - p[1]) / len, (p[0] - q[0]) / len];
            let proj = |tri: [[f64; 2]; 3]| {
                let d: Vec<f64> = tri.iter().map(|v| v[0] * n[0] + v[1] * n[1]).collect();
                (d.iter().cloned().fold(f64::MAX, f64::min), d.iter().cloned().fold(f64::MIN, f64::max))
            };
            let (lo1, hi1) = proj(s);
            let (lo2, hi2) = proj(t);
            if hi1 <= lo2 + tol || hi2 <= lo1 + tol {
                return false;
            }
        }
    }
    true
}

fn random_instance(rng: &mut ChaCha8Rng) -> (PlanarSubdivision<f64>, [Point3<f64>; 3]) {
    let pt = |rng: &mut ChaCha8Rng| Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let corners = loop {
        let c = [pt(rng), pt(rng), pt(rng)];
        let n = (c[1] - c[0]).cross(c[2] - c[0]).norm();
        let l = (0..3).map(|k| c[k].distance(c[(k + 1) % 3])).fold(0.0, f64::max);
        if n > 0.2 * l * l {
            break c;
        }
    };
    let at = |u: f64, v: f64| corners[0] + (corners[1] - corners[0]) * u + (corners[2] - corners[0]) * v;
    let inside = |rng: &mut ChaCha8Rng| loop {
        let (u, v): (f64, f64) = (rng.gen_range(0.02..0.96), rng.gen_range(0.02..0.96));
        if u + v < 0.98 {
            break at(u, v);
        }
    };
    let on_side = |rng: &mut ChaCha8Rng| {
        let s: f64 = rng.gen_range(0.05..0.95);
        match rng.gen_range(0..3) {
            0 => at(s, 0.0),
            1 => at(0.0, s),
            _ => at(1.0 - s, s),
        }
    };
    let tol = Tolerance::for_points(&corners);
    let mut l = PlanarSubdivision::for_triangle(corners, &tol).expect("non-degenerate");
    for _ in 0..rng.gen_range(0..5) {
        let p = inside(rng);
        l.push_point(p);
    }
    for _ in 0..rng.gen_range(0..5) {
        let p = if rng.gen_bool(0.4) { on_side(rng) } else { inside(rng) };
        let q = if rng.gen_bool(0.4) { on_side(rng) } else { inside(rng) };
        l.add_segment(p, q);
    }
    (l, corners)
}

fn c5_retriangulation_invariants() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();
    let mut max_rel = 0.0f64;
    let mut max_f = 0;
    for i in 0..500 {
        let (l, corners) = random_instance(&mut rng);
        let l = match triangulate_disc(fix_planar_intersections(clean_data(l))) {
            Ok(l) => l,
            Err(e) => {
                failures.push(format!("#{i}: {e}"));
                continue;
            }
        };
        let tris = match extract_triangles(&l) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("#{i}: {e}"));
                continue;
            }
        };
        let (v, et) = (l.num_vertices() as i64, l.num_edges() as i64);
        let (ei, eb) = (l.num_interior_edges() as i64, l.num_boundary_edges() as i64);
        let f = tris.len() as i64;
        max_f = max_f.max(tris.len());
        if v - et + f != 1 || 3 * f != 2 * ei + eb {
            failures.push(format!("#{i}: V={v} E={et} F={f} E_in={ei} E_bd={eb}"));
            continue;
        }
        let to2 = plane_coords(corners[0], corners[1], corners[2]);
        let big = signed_area(corners.map(&to2));
        let flat: Vec<[[f64; 2]; 3]> = tris.iter().map(|t| t.map(|k| to2(l.points[k]))).collect();
        let areas: Vec<f64> = flat.iter().map(|&t| signed_area(t)).collect();
        if areas.iter().any(|&a| a <= 0.0) {
            failures.push(format!("#{i}: inverted or degenerate triangle"));
            continue;
        }
        let rel = (areas.iter().sum::<f64>() - big).abs() / big;
        max_rel = max_rel.max(rel);
        if rel > 1e-6 {
            failures.push(format!("#{i}: area off by {rel:e}"));
            continue;
        }
        let scale = big.sqrt();
        let overlap = (0..flat.len()).any(|a| (a + 1..flat.len()).any(|b| interiors_overlap(flat[a], flat[b], 1e-9 * scale)));
        if overlap {
            failures.push(format!("#{i}: overlapping output triangles"));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let detail = format!(
        "500 instances, {} failure(s){}; max area error {max_rel:.1e} (≤ 1e-6); up to {max_f} triangles; {secs:.1} s (< 30 s)",
        failures.len(),
        failures.first().map(|f| format!(", first {f}")).unwrap_or_default()
    );
    pass_if(failures.is_empty() && secs < 30.0, detail)
}

fn c6_initial_face_on_hull() -> Verdict {
    let mut failures = Vec::new();
    for i in 0..200u64 {
        let n = 4 + (i as usize % 17);
        let x = fixtures::random_convex_polytope(n, 1000 + i);
        let tol = x.default_tolerance();
        let s = match initial_face(&x, &tol, i) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("#{i}: {e}"));
                continue;
            }
        };
        let [a, b, c] = x.face_points(s.face);
        let raw = (b - a).cross(c - a);
        let parallel = (raw.cross(s.normal)).norm() <= 1e-9 * raw.norm();
        let unit = (s.normal.norm() - 1.0).abs() <= 1e-12;
        // Every vertex lies on the inner side of the face plane.
        let beyond = x.coords().iter().map(|&p| (p - a).dot(s.normal)).fold(f64::MIN, f64::max);
        let below = x.coords().iter().map(|&p| (p - a).dot(s.normal)).fold(f64::MAX, f64::min);
        let side_ok = s.side == if raw.dot(s.normal) > 0.0 { Side::Pos } else { Side::Neg };
        if !(parallel && unit && beyond <= tol.eps_point && below < -tol.eps_point && side_ok) {
            failures.push(format!("#{i}: face {} max height {beyond:e}", s.face));
        }
    }
    pass_if(
        failures.is_empty(),
        format!(
            "200 random convex polytopes, {} failure(s){}",
            failures.len(),
            failures.first().map(|f| format!(", first {f}")).unwrap_or_default()
        ),
    )
}

fn c7_chamber_partition() -> Verdict {
    let cases = [
        ("tetrahedron", fixtures::tetrahedron()),
        ("nested cubes", fixtures::nested_cubes()),
        ("cube with diaphragm", fixtures::cube_with_diaphragm()),
        ("great icosahedron", fixtures::great_icosahedron()),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, x) in cases {
        let cfg = PipelineConfig::default();
        let (mesh, _) = pipeline::cmd_chambers(&x, &cfg, None).expect("chambers");
        let lab = all_chambers(&mesh, &mesh.default_tolerance(), cfg.seed).expect("labeling");
        let nf = mesh.complex.num_faces();
        let mut hits = vec![[0usize; 2]; nf];
        let mut consistent = true;
        for (id, ch) in lab.chambers.iter().enumerate() {
            for &(f, s) in &ch.sides {
                hits[f][s.index()] += 1;
                consistent &= lab.chamber_of((f, s)) == id;
            }
        }
        let once = hits.iter().all(|h| h == &[1, 1]);
        let bounded: f64 = lab.bounded().map(|(_, c)| c.volume.unwrap()).sum();
        let hull_faces: Vec<usize> = lab.chambers[lab.unbounded].faces();
        let hull = enclosed_volume(&mesh, &hull_faces);
        let rel = hull.as_ref().map(|h| (bounded - h).abs() / h).unwrap_or(f64::INFINITY);
        ok &= once && consistent && rel <= 1e-6;
        parts.push(format!(
            "{name}: {} chambers, sides labelled once {once}, volume error {}",
            lab.num_bounded(),
            match &hull {
                Ok(_) => format!("{rel:.1e}"),
                Err(e) => e.clone(),
            }
        ));
    }
    pass_if(ok, format!("{} (≤ 1e-6)", parts.join("; ")))
}

fn c8_ramification() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();

    let x = fixtures::two_tetrahedra_sharing_vertex();
    let tol = x.default_tolerance();
    let out = repair_nonmanifold(&x, None, &tol).expect("shared vertex repair");
    let y = &out.mesh;
    let comps = y.complex.connected_components();
    let tets = comps.iter().all(|c| {
        let (sub, _) = y.restrict_to_faces(c).unwrap();
        counts(&sub.complex) == (4, 6, 4, 2)
    });
    let chi = euler_characteristic(&y.complex);
    let surf = is_simplicial_surface(y.complex.faces());
    let disp = displacement(&x, y);
    let good = comps.len() == 2 && tets && chi == 4 && surf.is_ok() && disp <= out.eps * (1.0 + 1e-9);
    ok &= good;
    parts.push(format!(
        "shared vertex: {} components, χ={chi} (want 2 tetrahedra, χ=4), surface {}, displacement {disp:.2e} ≤ ε={:.2e}",
        comps.len(),
        surf.err().unwrap_or_else(|| "ok".into()),
        out.eps
    ));

    let x = fixtures::chain_boxes();
    let tol = x.default_tolerance();
    let before = nonmanifold_edges(&x.complex).len();
    let out = repair_nonmanifold(&x, None, &tol).expect("chain repair");
    let y = &out.mesh;
    let after = nonmanifold_edges(&y.complex).len();
    let surf = is_simplicial_surface(y.complex.faces());
    let disp = displacement(&x, y);
    let still_clean = all_intersections(y, &y.default_tolerance()).map(|m| m.is_empty()).unwrap_or(false);
    let good = after == 0
        && y.complex.num_faces() == x.complex.num_faces()
        && surf.is_ok()
        && still_clean
        && disp <= out.eps * (1.0 + 1e-9);
    ok &= good;
    parts.push(format!(
        "chain: non-manifold edges {before} -> {after}, faces {} -> {}, surface {}, intersection-free {still_clean}, displacement {disp:.2e} ≤ ε={:.2e}",
        x.complex.num_faces(),
        y.complex.num_faces(),
        surf.err().unwrap_or_else(|| "ok".into()),
        out.eps
    ));
    pass_if(ok, parts.join("; "))
}

/// Largest distance from an output vertex to the nearest input vertex.
fn displacement(x: &Mesh, y: &Mesh) -> f64 {
    y.coords()
        .iter()
        .map(|&q| x.coords().iter().map(|&p| p.distance(q)).fold(f64::MAX, f64::min))
        .fold(0.0, f64::max)
}

/// Binary STL bytes written out by hand.
fn golden_stl(tris: &[[[f32; 3]; 4]]) -> Vec<u8> {
    let mut out = vec![0u8; 80];
    out[..19].copy_from_slice(b"meshmend binary STL");
    out.extend_from_slice(&(tris.len() as u32).to_le_bytes());
    for t in tris {
        for v in t {
            for c in v {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]);
    }
    out
}

fn c9_idempotence() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    let cfg = PipelineConfig::default();
    for (name, x) in [
        ("great icosahedron", fixtures::great_icosahedron()),
        ("interlocked tetrahedra", fixtures::interlocked_tetrahedra()),
        ("chain", fixtures::chain_boxes()),
    ] {
        let (y1, _) = pipeline::cmd_repair(&x, &cfg, None).expect("first repair");
        let (y2, r2) = pipeline::cmd_repair(&y1, &cfg, None).expect("second repair");
        let same = y1.complex == y2.complex && y1.coords() == y2.coords() && r2.is_noop();
        let mut reload = Vec::new();
        for fmt in [MeshFormat::StlAscii, MeshFormat::StlBinary] {
            let bytes = meshio::encode_mesh(&y1, &meshio::default_orders(&y1), fmt);
            let r = meshio::parse_mesh::<f64>("out.stl", &bytes, None)
                .map_err(|e| e.to_string())
                .and_then(|z| {
                    is_simplicial_surface(z.complex.faces())?;
                    if counts(&z.complex) == counts(&y1.complex) {
                        Ok(())
                    } else {
                        Err(format!("counts {:?}", counts(&z.complex)))
                    }
                });
            reload.push(match r {
                Ok(()) => format!("{fmt} ok"),
                Err(e) => {
                    ok = false;
                    format!("{fmt} {e}")
                }
            });
        }
        ok &= same;
        parts.push(format!("{name}: twice identical {same}, reload {}", reload.join(", ")));
    }

    // Unit tetrahedron; each triangle starts at its lexicographically
    // smallest corner.
    let x = fixtures::mesh(
        &[[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]],
        vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0), Point3::new(0.0, 0.0, 1.0)],
    );
    let orders = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
    let s = 1.0 / 3f32.sqrt();
    let want = golden_stl(&[
        [[0., 0., -1.], [0., 0., 0.], [0., 1., 0.], [1., 0., 0.]],
        [[0., -1., 0.], [0., 0., 0.], [1., 0., 0.], [0., 0., 1.]],
        [[-1., 0., 0.], [0., 0., 0.], [0., 0., 1.], [0., 1., 0.]],
        [[s, s, s], [0., 0., 1.], [1., 0., 0.], [0., 1., 0.]],
    ]);
    let got = meshio::encode_stl_binary(&x, &orders);
    let golden = got == want;
    ok &= golden;
    parts.push(format!("binary layout golden {golden} ({} bytes)", got.len()));
    pass_if(ok, parts.join("; "))
}

fn main() {
    let checks: [(&str, &str, Check); 9] = [
        ("1", "great icosahedron chamber count", c1_great_icosahedron_chambers),
        ("2", "Icosahedron_3_1 pipeline", c2_icosahedron_3_1),
        ("3", "C23 surface and face orbits", c3_c23_orbits),
        ("4", "symmetric intersections equal brute force", c4_symmetric_equals_brute_force),
        ("5", "retriangulation invariants", c5_retriangulation_invariants),
        ("6", "outer-hull start face", c6_initial_face_on_hull),
        ("7", "chamber partition and volume", c7_chamber_partition),
        ("8", "non-manifold repair", c8_ramification),
        ("9", "end-to-end idempotence and STL", c9_idempotence),
    ];
    let mut failed = 0;
    for (id, name, f) in checks {
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::Fail(format!("panicked: {msg}"))
        });
        match v {
            Verdict::Pass(d) => println!("PASS  [{id}] {name}: {d}"),
            Verdict::Skip(d) => println!("SKIP  [{id}] {name}: {d}"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("FAIL  [{id}] {name}: {d}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
