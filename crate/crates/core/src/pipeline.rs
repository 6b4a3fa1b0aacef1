//! End-to-end repair and the sub-command entry points used by the CLI.
//!
//! Repair runs four stages: intersections, retriangulation, outer hull and
//! non-manifold splitting. With a symmetry group the first two stages work
//! on orbit representatives.

use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chambers::{all_chambers, exploded_view, ChamberError, ChamberLabeling, ExplodedChamber};
use crate::complex::{euler_characteristic, nonmanifold_edges, nonmanifold_vertices, ComplexError, FaceId, VertexId};
use crate::geom::Tolerance;
use crate::intersect::{all_intersections, IntersectError, IntersectionMap};
use crate::meshio::{MeshFormat, MeshIoError};
use crate::ramify::{repair_nonmanifold, RamifyError, RamifyOutcome};
use crate::retriangulate::{retriangulate, Rebuilt, RetriangulateError};
use crate::symmetry::{
    face_orbits, symmetric_all_intersections, symmetric_retriangulate, verify_group, OrbitDecomposition,
    SymmetryError, SymmetryGroup,
};
use crate::{Matrix, Mesh};

/// Resolved settings of one run, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Absolute point tolerance; `None` means `1e-9` of the bounding-box
    /// diagonal.
    pub eps_point: Option<f64>,
    pub eps_param: Option<f64>,
    pub eps_angle: Option<f64>,
    /// Absolute vertex shift for non-manifold splitting; `None` means `1e-4`
    /// of the bounding-box diagonal.
    pub eps_split: Option<f64>,
    pub group: Option<String>,
    pub format: MeshFormat,
    pub jobs: Option<usize>,
    pub strict_recheck: bool,
    /// Seed of the random rotation used to break start-face ties.
    pub seed: u64,
    /// Exploded-view shift, as a multiple of each chamber's offset from the
    /// centre.
    pub magnitude: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            eps_point: None,
            eps_param: None,
            eps_angle: None,
            eps_split: None,
            group: None,
            format: MeshFormat::StlBinary,
            jobs: None,
            strict_recheck: false,
            seed: 0,
            magnitude: 1.0,
        }
    }
}

impl PipelineConfig {
    pub fn tolerance(&self, x: &Mesh) -> Tolerance<f64> {
        let base = x.default_tolerance();
        Tolerance::new(
            self.eps_point.unwrap_or(base.eps_point),
            self.eps_param.unwrap_or(base.eps_param),
            self.eps_angle.unwrap_or(base.eps_angle),
        )
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("reading input")]
    Input(#[from] MeshIoError),
    #[error("symmetry group")]
    Symmetry(#[from] SymmetryError),
    #[error("intersection stage")]
    Intersect(#[from] IntersectError),
    #[error("retriangulation stage")]
    Retriangulate(#[from] RetriangulateError),
    #[error("outer hull / chamber stage")]
    Chamber(#[from] ChamberError),
    #[error("non-manifold repair stage")]
    Ramify(#[from] RamifyError),
    #[error("invalid complex")]
    Complex(#[from] ComplexError),
    #[error("final check failed: {0}")]
    FinalCheck(String),
}

impl PipelineError {
    /// 2 for parse and validation problems, 3 for geometric failures, 4 for
    /// inputs outside the supported class.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Input(_) | PipelineError::Complex(_) => 2,
            PipelineError::Symmetry(e) => match e {
                SymmetryError::Intersect(_) | SymmetryError::Retriangulate(_) => 3,
                _ => 2,
            },
            PipelineError::Ramify(RamifyError::IsolatedNonManifoldEdge(_)) => 4,
            _ => 3,
        }
    }
}

/// Vertex, edge and face counts with the Euler characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Counts {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub euler: i64,
}

impl Counts {
    pub fn of(x: &Mesh) -> Self {
        let c = &x.complex;
        Self { vertices: c.num_vertices(), edges: c.num_edges(), faces: c.num_faces(), euler: euler_characteristic(c) }
    }
}

impl std::fmt::Display for Counts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} {} χ={}", self.vertices, self.edges, self.faces, self.euler)
    }
}

/// Verified group with its orbit data.
pub struct GroupContext {
    pub group: SymmetryGroup<f64>,
    pub orbits: OrbitDecomposition,
}

pub fn prepare_group(x: &Mesh, mats: &[Matrix], tol: &Tolerance<f64>) -> Result<GroupContext, PipelineError> {
    let group = verify_group(x, mats, tol)?;
    let orbits = face_orbits(x, &group);
    info!("group of order {} with {} face orbit(s)", group.order(), orbits.num_orbits());
    Ok(GroupContext { group, orbits })
}

/// Intersections, through orbit representatives when a group is given.
pub fn intersections(
    x: &Mesh,
    group: Option<&GroupContext>,
    tol: &Tolerance<f64>,
) -> Result<IntersectionMap<f64>, PipelineError> {
    Ok(match group {
        Some(g) => symmetric_all_intersections(x, &g.group, &g.orbits, tol)?,
        None => all_intersections(x, tol)?,
    })
}

/// Retriangulation; returns the input unchanged when `map` is empty.
pub fn retriangulated(
    x: &Mesh,
    map: &IntersectionMap<f64>,
    group: Option<&GroupContext>,
    tol: &Tolerance<f64>,
    recheck: bool,
) -> Result<Rebuilt<f64>, PipelineError> {
    if map.is_empty() {
        return Ok(Rebuilt { mesh: x.clone(), origin: (0..x.complex.num_faces()).collect(), cancelled: 0 });
    }
    Ok(match group {
        Some(g) => symmetric_retriangulate(x, &g.group, &g.orbits, map, tol, recheck)?,
        None => retriangulate(x, map, tol, recheck)?,
    })
}

/// Faces of the unbounded chamber as a complex; the input itself when it
/// already consists of nothing else.
pub fn hull_of(x: &Mesh, lab: &ChamberLabeling<f64>) -> Result<(Mesh, Vec<FaceId>), PipelineError> {
    let mut faces: Vec<FaceId> = lab.chambers[lab.unbounded].sides.iter().map(|s| s.0).collect();
    faces.dedup();
    if faces.len() == x.complex.num_faces() {
        return Ok((x.clone(), faces));
    }
    Ok((x.restrict_to_faces(&faces)?.0, faces))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RepairReport {
    pub input: Counts,
    pub group_order: usize,
    pub face_orbits: usize,
    pub pairs_tested: usize,
    pub intersection_segments: usize,
    pub intersecting_pairs: usize,
    pub retriangulated: Counts,
    pub cancelled_faces: usize,
    pub bounded_chambers: usize,
    pub hull: Counts,
    pub nonmanifold_edges: usize,
    pub inner_edges: usize,
    pub outer_edges: usize,
    pub nonmanifold_paths: usize,
    pub split_vertices: usize,
    pub nonmanifold_vertices: usize,
    pub eps_split: f64,
    pub output: Counts,
    pub ramify_log: Vec<String>,
}

impl RepairReport {
    /// Whether every stage left the mesh unchanged.
    pub fn is_noop(&self) -> bool {
        self.intersection_segments == 0
            && self.nonmanifold_edges == 0
            && self.nonmanifold_vertices == 0
            && self.hull.faces == self.input.faces
    }

    pub fn lines(&self) -> Vec<String> {
        let group = match self.group_order {
            0 => "no symmetry group".to_string(),
            n => format!("group order {n} face orbits {}", self.face_orbits),
        };
        vec![
            format!("input {}", self.input),
            group,
            format!(
                "intersections {} segment(s) on {} face pair(s), {} pair(s) tested",
                self.intersection_segments, self.intersecting_pairs, self.pairs_tested
            ),
            format!("retriangulated {} (cancelled {})", self.retriangulated, self.cancelled_faces),
            format!("chambers {} bounded", self.bounded_chambers),
            format!("outer hull {}", self.hull),
            format!(
                "non-manifold edges {} (inner {} outer {}) paths {} split vertices {}",
                self.nonmanifold_edges, self.inner_edges, self.outer_edges, self.nonmanifold_paths, self.split_vertices
            ),
            format!("non-manifold vertices {}", self.nonmanifold_vertices),
            format!("eps split {:e}", self.eps_split),
            format!("output {}", self.output),
        ]
    }

    /// Per-path and per-vertex records of the non-manifold repair.
    pub fn detail_lines(&self) -> &[String] {
        &self.ramify_log
    }
}

/// Checks the output contract: closed simplicial surface without
/// intersections.
pub fn final_check(x: &Mesh, tol: &Tolerance<f64>) -> Result<(), PipelineError> {
    let c = &x.complex;
    if !c.is_closed() {
        return Err(PipelineError::FinalCheck("open edges".into()));
    }
    let nm = nonmanifold_edges(c);
    if !nm.is_empty() {
        return Err(PipelineError::FinalCheck(format!("{} non-manifold edge(s)", nm.len())));
    }
    let nv = nonmanifold_vertices(c)?;
    if !nv.is_empty() {
        return Err(PipelineError::FinalCheck(format!("{} non-manifold vertex(es)", nv.len())));
    }
    let m = all_intersections(x, tol)?;
    if !m.is_empty() {
        return Err(PipelineError::FinalCheck(format!("{} intersecting face pair(s)", m.num_pairs())));
    }
    Ok(())
}

/// Full repair. The output is a closed, intersection-free simplicial
/// surface; its face orders are outward.
pub fn cmd_repair(
    x: &Mesh,
    cfg: &PipelineConfig,
    group: Option<&[Matrix]>,
) -> Result<(Mesh, RepairReport), PipelineError> {
    let tol = cfg.tolerance(x);
    let mut report = RepairReport { input: Counts::of(x), ..Default::default() };
    let ctx = group.map(|g| prepare_group(x, g, &tol)).transpose()?;
    if let Some(g) = &ctx {
        report.group_order = g.group.order();
        report.face_orbits = g.orbits.num_orbits();
    }
    let map = intersections(x, ctx.as_ref(), &tol)?;
    report.pairs_tested = map.stats.pairs_considered;
    report.intersection_segments = map.len();
    report.intersecting_pairs = map.num_pairs();
    info!("{} intersection segment(s)", map.len());

    let rebuilt = retriangulated(x, &map, ctx.as_ref(), &tol, cfg.strict_recheck)?;
    report.retriangulated = Counts::of(&rebuilt.mesh);
    report.cancelled_faces = rebuilt.cancelled;

    let lab = all_chambers(&rebuilt.mesh, &tol, cfg.seed)?;
    report.bounded_chambers = lab.num_bounded();
    let (hull, _) = hull_of(&rebuilt.mesh, &lab)?;
    report.hull = Counts::of(&hull);

    let out: RamifyOutcome<f64> = repair_nonmanifold(&hull, cfg.eps_split, &tol)?;
    report.inner_edges = out.inner_edges;
    report.outer_edges = out.outer_edges;
    report.nonmanifold_edges = out.inner_edges + out.outer_edges;
    report.nonmanifold_paths = out.paths.len();
    report.split_vertices = out.edge_plan.splits.len();
    report.nonmanifold_vertices = out.vertex_plans.iter().map(|p| p.splits.len()).sum();
    report.eps_split = out.eps;
    report.ramify_log = out.report_lines();
    report.output = Counts::of(&out.mesh);
    final_check(&out.mesh, &tol)?;
    Ok((out.mesh, report))
}

/// Mesh statistics for `inspect`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inspection {
    pub counts: Counts,
    pub components: usize,
    pub nonmanifold_edges: Vec<[VertexId; 2]>,
    /// `None` when non-manifold edges make the umbrella test undefined.
    pub nonmanifold_vertices: Option<Vec<VertexId>>,
    pub intersection_segments: usize,
    pub intersecting_pairs: usize,
}

impl Inspection {
    pub fn lines(&self) -> Vec<String> {
        vec![
            self.counts.to_string(),
            format!("components {}", self.components),
            format!("non-manifold edges {} {:?}", self.nonmanifold_edges.len(), self.nonmanifold_edges),
            match &self.nonmanifold_vertices {
                Some(v) => format!("non-manifold vertices {} {:?}", v.len(), v),
                None => "non-manifold vertices n/a (non-manifold edges present)".to_string(),
            },
            format!("intersections {} segment(s) on {} face pair(s)", self.intersection_segments, self.intersecting_pairs),
        ]
    }
}

pub fn cmd_inspect(x: &Mesh, cfg: &PipelineConfig) -> Result<Inspection, PipelineError> {
    let tol = cfg.tolerance(x);
    let map = all_intersections(x, &tol)?;
    let c = &x.complex;
    Ok(Inspection {
        counts: Counts::of(x),
        components: c.connected_components().len(),
        nonmanifold_edges: nonmanifold_edges(c),
        nonmanifold_vertices: nonmanifold_vertices(c).ok(),
        intersection_segments: map.len(),
        intersecting_pairs: map.num_pairs(),
    })
}

pub fn cmd_intersect(
    x: &Mesh,
    cfg: &PipelineConfig,
    group: Option<&[Matrix]>,
) -> Result<IntersectionMap<f64>, PipelineError> {
    let tol = cfg.tolerance(x);
    let ctx = group.map(|g| prepare_group(x, g, &tol)).transpose()?;
    intersections(x, ctx.as_ref(), &tol)
}

/// Retriangulated mesh and its chamber labeling.
pub fn cmd_chambers(
    x: &Mesh,
    cfg: &PipelineConfig,
    group: Option<&[Matrix]>,
) -> Result<(Mesh, ChamberLabeling<f64>), PipelineError> {
    let tol = cfg.tolerance(x);
    let ctx = group.map(|g| prepare_group(x, g, &tol)).transpose()?;
    let map = intersections(x, ctx.as_ref(), &tol)?;
    let rebuilt = retriangulated(x, &map, ctx.as_ref(), &tol, cfg.strict_recheck)?;
    let lab = all_chambers(&rebuilt.mesh, &tol, cfg.seed)?;
    Ok((rebuilt.mesh, lab))
}

/// Bounded chambers moved by `cfg.magnitude` away from the mesh centroid.
pub fn cmd_explode(
    x: &Mesh,
    cfg: &PipelineConfig,
    group: Option<&[Matrix]>,
) -> Result<Vec<ExplodedChamber<f64>>, PipelineError> {
    let (mesh, lab) = cmd_chambers(x, cfg, group)?;
    Ok(exploded_view(&mesh, &lab, x.centroid(), cfg.magnitude)?)
}

/// Outer hull of the retriangulated mesh with outward face orders.
pub fn cmd_outer_hull(
    x: &Mesh,
    cfg: &PipelineConfig,
    group: Option<&[Matrix]>,
) -> Result<(Mesh, Vec<[VertexId; 3]>), PipelineError> {
    let (mesh, _) = cmd_chambers(x, cfg, group)?;
    Ok(crate::outerhull::oriented_outer_hull(&mesh, &cfg.tolerance(&mesh), cfg.seed)?)
}

/// Non-manifold repair only; the input must be free of intersections.
pub fn cmd_fix_nonmanifold(x: &Mesh, cfg: &PipelineConfig) -> Result<RamifyOutcome<f64>, PipelineError> {
    let tol = cfg.tolerance(x);
    Ok(repair_nonmanifold(x, cfg.eps_split, &tol)?)
}

/// One fixture in a benchmark run.
pub struct BenchCase {
    pub name: String,
    pub mesh: Mesh,
    pub group: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub name: String,
    pub group_order: usize,
    pub face_orbits: usize,
    pub pairs_plain: usize,
    pub pairs_symmetric: usize,
    pub pair_ratio: f64,
    pub plain_median_ms: f64,
    pub plain_mean_ms: f64,
    pub symmetric_median_ms: f64,
    pub symmetric_mean_ms: f64,
    pub speedup: f64,
}

impl BenchRow {
    pub const HEADER: &'static str = "name\tgroup\torbits\tpairs_plain\tpairs_sym\tpair_ratio\tplain_median_ms\tplain_mean_ms\tsym_median_ms\tsym_mean_ms\tspeedup";

    pub fn tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}",
            self.name,
            self.group_order,
            self.face_orbits,
            self.pairs_plain,
            self.pairs_symmetric,
            self.pair_ratio,
            self.plain_median_ms,
            self.plain_mean_ms,
            self.symmetric_median_ms,
            self.symmetric_mean_ms,
            self.speedup
        )
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Intersections, retriangulation and outer hull; returns the pair count.
fn hull_run(x: &Mesh, group: Option<&GroupContext>, tol: &Tolerance<f64>, seed: u64) -> Result<usize, PipelineError> {
    let map = intersections(x, group, tol)?;
    let rebuilt = retriangulated(x, &map, group, tol, false)?;
    crate::outerhull::outer_hull(&rebuilt.mesh, tol, seed)?;
    Ok(map.stats.pairs_considered)
}

/// Times the hull computation with and without the group over `reps`
/// repetitions.
pub fn cmd_bench(cases: &[BenchCase], reps: usize, seed: u64) -> Result<Vec<BenchRow>, PipelineError> {
    let reps = reps.max(1);
    cases
        .iter()
        .map(|case| {
            let tol = case.mesh.default_tolerance();
            let ctx = prepare_group(&case.mesh, &case.group, &tol)?;
            let (mut plain, mut sym) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
            let (mut pairs_plain, mut pairs_sym) = (0, 0);
            for _ in 0..reps {
                let t = Instant::now();
                pairs_plain = hull_run(&case.mesh, None, &tol, seed)?;
                plain.push(t.elapsed().as_secs_f64() * 1e3);
                let t = Instant::now();
                pairs_sym = hull_run(&case.mesh, Some(&ctx), &tol, seed)?;
                sym.push(t.elapsed().as_secs_f64() * 1e3);
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let (pm, sm) = (mean(&plain), mean(&sym));
            let (pmed, smed) = (median(&mut plain), median(&mut sym));
            Ok(BenchRow {
                name: case.name.clone(),
                group_order: ctx.group.order(),
                face_orbits: ctx.orbits.num_orbits(),
                pairs_plain,
                pairs_symmetric: pairs_sym,
                pair_ratio: pairs_plain as f64 / pairs_sym.max(1) as f64,
                plain_median_ms: pmed,
                plain_mean_ms: pm,
                symmetric_median_ms: smed,
                symmetric_mean_ms: sm,
                speedup: pmed / smed.max(1e-9),
            })
        })
        .collect()
}

/// Default benchmark set: great icosahedron with the trivial and the full
/// group, and the order-23 rotational surface.
pub fn default_bench_cases() -> Vec<BenchCase> {
    use crate::fixtures;
    use crate::symmetry::{cyclic_group, icosahedral_group};
    let z = crate::Point::new(0.0, 0.0, 1.0);
    vec![
        BenchCase { name: "great-icosahedron-trivial".into(), mesh: fixtures::great_icosahedron(), group: vec![Matrix::identity()] },
        BenchCase { name: "rotational-c23".into(), mesh: fixtures::twisted_rotational_surface(23), group: cyclic_group(23, z) },
        BenchCase { name: "great-icosahedron".into(), mesh: fixtures::great_icosahedron(), group: icosahedral_group() },
    ]
}

/// Faces and coordinates must match exactly.
pub fn same_combinatorics(a: &Mesh, b: &Mesh) -> bool {
    a.complex == b.complex
}

/// Format from a file name, defaulting to binary STL.
pub fn format_for(path: &std::path::Path, fallback: MeshFormat) -> MeshFormat {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("off") => MeshFormat::Off,
        Some("stl") if fallback == MeshFormat::Off => MeshFormat::StlBinary,
        _ => fallback,
    }
}
