//! Mesh and group files: STL (ASCII and binary), OFF, symmetry-matrix
//! lists, chamber manifests and intersection dumps.
//!
//! STL carries no topology, so triangle soups are welded within
//! `eps_point`. Binary STL is 80 header bytes, a little-endian `u32`
//! triangle count, then 50 bytes per triangle (normal, three vertices as
//! `f32`, a zero `u16` attribute).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{build_complex, ComplexError, EmbeddedComplex, Embedding, VertexId};
use crate::geom::{Mat3, Point3, PointWelder, Tolerance};
use crate::intersect::{IntersectionMap, SegmentKind};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("cannot access {path}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at {at}: {msg}")]
    Parse { at: String, msg: String },
    #[error("mesh is not closed: {} open edge(s), first {:?}", .0.len(), .0.first())]
    NotClosed(Vec<[VertexId; 2]>),
    #[error(transparent)]
    Complex(ComplexError),
    #[error("unknown mesh format {0:?}")]
    UnknownFormat(String),
}

impl From<ComplexError> for MeshIoError {
    fn from(e: ComplexError) -> Self {
        match e {
            ComplexError::NotClosed(edges) => MeshIoError::NotClosed(edges),
            other => MeshIoError::Complex(other),
        }
    }
}

fn line_err(line: usize, msg: impl Into<String>) -> MeshIoError {
    MeshIoError::Parse { at: format!("line {line}"), msg: msg.into() }
}

fn byte_err(offset: usize, msg: impl Into<String>) -> MeshIoError {
    MeshIoError::Parse { at: format!("byte {offset}"), msg: msg.into() }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MeshIoError + '_ {
    move |source| MeshIoError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFormat {
    StlAscii,
    StlBinary,
    Off,
}

impl MeshFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MeshFormat::StlAscii | MeshFormat::StlBinary => "stl",
            MeshFormat::Off => "off",
        }
    }
}

impl FromStr for MeshFormat {
    type Err = MeshIoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stl-ascii" => Ok(MeshFormat::StlAscii),
            "stl-binary" | "stl" => Ok(MeshFormat::StlBinary),
            "off" => Ok(MeshFormat::Off),
            other => Err(MeshIoError::UnknownFormat(other.to_string())),
        }
    }
}

impl std::fmt::Display for MeshFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MeshFormat::StlAscii => "stl-ascii",
            MeshFormat::StlBinary => "stl-binary",
            MeshFormat::Off => "off",
        })
    }
}

pub type Soup = Vec<[Point3<f64>; 3]>;

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64, MeshIoError> {
    let t = tok.ok_or_else(|| line_err(line, "missing number"))?;
    let v: f64 = t.parse().map_err(|_| line_err(line, format!("bad number {t:?}")))?;
    if !v.is_finite() {
        return Err(line_err(line, format!("non-finite number {t:?}")));
    }
    Ok(v)
}

pub fn parse_stl_ascii(text: &str) -> Result<Soup, MeshIoError> {
    let mut soup = Vec::new();
    let mut corners: Vec<Point3<f64>> = Vec::new();
    let mut in_loop = false;
    let mut seen_solid = false;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let mut tok = raw.split_whitespace();
        let Some(kw) = tok.next() else { continue };
        match kw {
            "solid" => seen_solid = true,
            "facet" | "endsolid" => {}
            "outer" => {
                if in_loop {
                    return Err(line_err(n, "nested loop"));
                }
                in_loop = true;
                corners.clear();
            }
            "vertex" => {
                if !in_loop {
                    return Err(line_err(n, "vertex outside loop"));
                }
                let p = Point3::new(parse_f64(tok.next(), n)?, parse_f64(tok.next(), n)?, parse_f64(tok.next(), n)?);
                corners.push(p);
            }
            "endloop" => {
                if corners.len() != 3 {
                    return Err(line_err(n, format!("facet with {} vertices", corners.len())));
                }
                soup.push([corners[0], corners[1], corners[2]]);
                in_loop = false;
            }
            "endfacet" => {
                if in_loop {
                    return Err(line_err(n, "endfacet inside loop"));
                }
            }
            other => return Err(line_err(n, format!("unexpected keyword {other:?}"))),
        }
    }
    if !seen_solid {
        return Err(line_err(1, "missing 'solid'"));
    }
    if in_loop {
        return Err(line_err(text.lines().count(), "unterminated loop"));
    }
    Ok(soup)
}

pub fn parse_stl_binary(bytes: &[u8]) -> Result<Soup, MeshIoError> {
    if bytes.len() < 84 {
        return Err(byte_err(bytes.len(), "file shorter than the 84-byte header"));
    }
    let n = u32::from_le_bytes(bytes[80..84].try_into().expect("4 bytes")) as usize;
    let need = 84 + 50 * n;
    if bytes.len() < need {
        return Err(byte_err(bytes.len(), format!("truncated: {n} triangles need {need} bytes")));
    }
    let f = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as f64;
    let mut soup = Vec::with_capacity(n);
    for t in 0..n {
        let base = 84 + 50 * t + 12;
        let mut tri = [Point3::zero(); 3];
        for (k, c) in tri.iter_mut().enumerate() {
            let o = base + 12 * k;
            *c = Point3::new(f(o), f(o + 4), f(o + 8));
            if !c.is_finite() {
                return Err(byte_err(o, "non-finite coordinate"));
            }
        }
        soup.push(tri);
    }
    Ok(soup)
}

/// Whether `bytes` look like binary STL: the size matches the count field.
pub fn is_binary_stl(bytes: &[u8]) -> bool {
    bytes.len() >= 84 && {
        let n = u32::from_le_bytes(bytes[80..84].try_into().expect("4 bytes")) as usize;
        bytes.len() == 84 + 50 * n
    }
}

/// Indexed OFF: coordinates and triangles.
pub fn parse_off(text: &str) -> Result<(Vec<Point3<f64>>, Vec<[VertexId; 3]>), MeshIoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (n0, first) = lines.next().ok_or_else(|| line_err(1, "empty file"))?;
    let rest = first.strip_prefix("OFF").ok_or_else(|| line_err(n0, "missing OFF header"))?.trim();
    let (nc, counts) = if rest.is_empty() {
        lines.next().ok_or_else(|| line_err(n0, "missing counts"))?
    } else {
        (n0, rest)
    };
    let nums: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| line_err(nc, format!("bad count {t:?}"))))
        .collect::<Result<_, _>>()?;
    if nums.len() < 2 {
        return Err(line_err(nc, "expected vertex and face counts"));
    }
    let (nv, nf) = (nums[0], nums[1]);
    let mut coords = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = lines.next().ok_or_else(|| line_err(0, format!("expected {nv} vertices")))?;
        let mut tok = l.split_whitespace();
        coords.push(Point3::new(parse_f64(tok.next(), n)?, parse_f64(tok.next(), n)?, parse_f64(tok.next(), n)?));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (n, l) = lines.next().ok_or_else(|| line_err(0, format!("expected {nf} faces")))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| line_err(n, format!("bad index {t:?}"))))
            .collect::<Result<_, _>>()?;
        if idx.first() != Some(&3) || idx.len() < 4 {
            return Err(line_err(n, "only triangular faces are supported"));
        }
        let t = [idx[1], idx[2], idx[3]];
        if t.iter().any(|&v| v >= nv) {
            return Err(line_err(n, format!("vertex index out of range in {t:?}")));
        }
        faces.push(t);
    }
    if let Some((n, _)) = lines.next() {
        return Err(line_err(n, "content after the declared faces"));
    }
    Ok((coords, faces))
}

/// Merges soup corners closer than `eps` into shared vertices. Exact
/// duplicates are resolved by a hash lookup first. Triangles that collapse
/// are dropped.
pub fn weld_soup<T: Scalar>(soup: &[[Point3<T>; 3]], eps: T) -> (Vec<Point3<T>>, Vec<[VertexId; 3]>) {
    let mut exact: HashMap<[u64; 3], VertexId> = HashMap::new();
    let mut welder = PointWelder::new(eps);
    let mut faces = Vec::with_capacity(soup.len());
    for tri in soup {
        let ids = tri.map(|p| {
            let key = p.to_array().map(|c| c.as_f64().to_bits());
            *exact.entry(key).or_insert_with(|| welder.insert(p))
        });
        if ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2] {
            warn!("triangle collapsed by welding, dropped");
            continue;
        }
        faces.push(ids);
    }
    (welder.into_points(), faces)
}

/// Closed complex from coordinates and triangles; unused vertices are
/// dropped and the rest keep their relative order.
pub fn complex_from_indexed<T: Scalar>(
    coords: Vec<Point3<T>>,
    faces: &[[VertexId; 3]],
) -> Result<EmbeddedComplex<T>, MeshIoError> {
    let mut remap = vec![usize::MAX; coords.len()];
    let mut kept = Vec::new();
    for t in faces {
        for &v in t {
            if remap[v] == usize::MAX {
                remap[v] = 0;
            }
        }
    }
    for (v, r) in remap.iter_mut().enumerate() {
        if *r == 0 {
            *r = kept.len();
            kept.push(coords[v]);
        }
    }
    let faces: Vec<[VertexId; 3]> = faces.iter().map(|t| t.map(|v| remap[v])).collect();
    let complex = build_complex(&faces)?;
    Ok(EmbeddedComplex { complex, embedding: Embedding { coords: kept } })
}

fn cast_soup<T: Scalar>(soup: &Soup) -> Vec<[Point3<T>; 3]> {
    soup.iter().map(|t| t.map(|p| p.cast())).collect()
}

fn soup_tolerance<T: Scalar>(soup: &[[Point3<T>; 3]]) -> Tolerance<T> {
    let pts: Vec<Point3<T>> = soup.iter().flatten().copied().collect();
    Tolerance::for_points(&pts)
}

/// Parses mesh bytes. `name` picks OFF by extension; otherwise the STL
/// flavour is detected from the size field.
pub fn parse_mesh<T: Scalar>(name: &str, bytes: &[u8], eps_point: Option<T>) -> Result<EmbeddedComplex<T>, MeshIoError> {
    let format = detect_format(name, bytes);
    if format == MeshFormat::Off {
        let text = std::str::from_utf8(bytes).map_err(|e| byte_err(e.valid_up_to(), "not UTF-8"))?;
        let (coords, faces) = parse_off(text)?;
        let coords: Vec<Point3<T>> = coords.iter().map(|p| p.cast()).collect();
        let eps = eps_point.unwrap_or_else(|| Tolerance::for_points(&coords).eps_point);
        // Weld duplicate coordinates, keeping first occurrences in order.
        let mut welder = PointWelder::new(eps);
        let ids: Vec<VertexId> = coords.iter().map(|&p| welder.insert(p)).collect();
        let faces: Vec<[VertexId; 3]> = faces.iter().map(|t| t.map(|v| ids[v])).collect();
        return complex_from_indexed(welder.into_points(), &faces);
    }
    let soup = if format == MeshFormat::StlAscii {
        let text = std::str::from_utf8(bytes).map_err(|e| byte_err(e.valid_up_to(), "not UTF-8"))?;
        parse_stl_ascii(text)?
    } else {
        parse_stl_binary(bytes)?
    };
    let soup = cast_soup::<T>(&soup);
    let eps = eps_point.unwrap_or_else(|| soup_tolerance(&soup).eps_point);
    let (coords, faces) = weld_soup(&soup, eps);
    complex_from_indexed(coords, &faces)
}

/// The format [`parse_mesh`] would read these bytes as.
pub fn detect_format(name: &str, bytes: &[u8]) -> MeshFormat {
    if name.to_ascii_lowercase().ends_with(".off") {
        MeshFormat::Off
    } else if !is_binary_stl(bytes) && bytes.starts_with(b"solid") {
        MeshFormat::StlAscii
    } else {
        MeshFormat::StlBinary
    }
}

/// Point tolerance large enough to absorb rounding to single precision.
/// Meshes read from binary STL carry errors of this size, far above the
/// default tolerance.
pub fn single_precision_eps<T: Scalar>(x: &EmbeddedComplex<T>) -> T {
    let m = x
        .coords()
        .iter()
        .flat_map(|p| [p.x.abs(), p.y.abs(), p.z.abs()])
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let eps = T::lit(16.0 * f32::EPSILON as f64) * m;
    let base = x.default_tolerance().eps_point;
    if eps > base {
        eps
    } else {
        base
    }
}

/// Loads an STL or OFF file as a closed complex.
pub fn load_mesh<T: Scalar>(path: &Path, eps_point: Option<T>) -> Result<EmbeddedComplex<T>, MeshIoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    parse_mesh(&path.to_string_lossy(), &bytes, eps_point)
}

/// Outward orders when the complex is a surface, sorted triples otherwise.
pub fn default_orders<T: Scalar>(x: &EmbeddedComplex<T>) -> Vec<[VertexId; 3]> {
    x.outward_orientation().unwrap_or_else(|_| {
        warn!("complex is not an orientable surface; writing faces in index order");
        x.complex.faces().to_vec()
    })
}

fn unit_normal<T: Scalar>(x: &EmbeddedComplex<T>, t: [VertexId; 3]) -> [f64; 3] {
    let [a, b, c] = t.map(|v| x.point(v));
    (b - a).cross(c - a).normalized().map(|n| n.to_f64()).unwrap_or([0.0; 3])
}

/// Rotates `t` to start at its lexicographically smallest corner, so that
/// STL output does not depend on vertex numbering.
fn starting_at_least(t: [VertexId; 3], key: impl Fn(VertexId) -> [f64; 3]) -> [VertexId; 3] {
    let k = (0..3)
        .min_by(|&i, &j| key(t[i]).partial_cmp(&key(t[j])).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    [t[k], t[(k + 1) % 3], t[(k + 2) % 3]]
}

pub const STL_HEADER: &[u8] = b"meshmend binary STL";

pub fn encode_stl_binary<T: Scalar>(x: &EmbeddedComplex<T>, orders: &[[VertexId; 3]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + 50 * orders.len());
    let mut header = [0u8; 80];
    header[..STL_HEADER.len()].copy_from_slice(STL_HEADER);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(orders.len() as u32).to_le_bytes());
    for &t in orders {
        // Work on the rounded corners, so a reload writes the same bytes.
        let rounded = |v: VertexId| x.point(v).to_f64().map(|c| c as f32 as f64);
        let t = starting_at_least(t, rounded);
        let [a, b, c] = t.map(|v| Point3::<f64>::from_f64(rounded(v)));
        let n = (b - a).cross(c - a).normalized().map(|n| n.to_f64()).unwrap_or([0.0; 3]);
        for p in [n, a.to_f64(), b.to_f64(), c.to_f64()] {
            for c in p {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

pub fn encode_stl_ascii<T: Scalar>(x: &EmbeddedComplex<T>, orders: &[[VertexId; 3]]) -> String {
    let mut s = String::from("solid meshmend\n");
    for &t in orders {
        let t = starting_at_least(t, |v| x.point(v).to_f64());
        let n = unit_normal(x, t);
        let _ = writeln!(s, "  facet normal {:e} {:e} {:e}", n[0], n[1], n[2]);
        s.push_str("    outer loop\n");
        for v in t {
            let p = x.point(v).to_f64();
            let _ = writeln!(s, "      vertex {:e} {:e} {:e}", p[0], p[1], p[2]);
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    s.push_str("endsolid meshmend\n");
    s
}

pub fn encode_off<T: Scalar>(x: &EmbeddedComplex<T>, orders: &[[VertexId; 3]]) -> String {
    let mut s = format!("OFF\n{} {} {}\n", x.complex.num_vertices(), orders.len(), x.complex.num_edges());
    for p in x.coords() {
        let p = p.to_f64();
        let _ = writeln!(s, "{:e} {:e} {:e}", p[0], p[1], p[2]);
    }
    for t in orders {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

pub fn encode_mesh<T: Scalar>(x: &EmbeddedComplex<T>, orders: &[[VertexId; 3]], format: MeshFormat) -> Vec<u8> {
    match format {
        MeshFormat::StlBinary => encode_stl_binary(x, orders),
        MeshFormat::StlAscii => encode_stl_ascii(x, orders).into_bytes(),
        MeshFormat::Off => encode_off(x, orders).into_bytes(),
    }
}

/// Writes `x` with the given face orders.
pub fn save_mesh_oriented<T: Scalar>(
    x: &EmbeddedComplex<T>,
    orders: &[[VertexId; 3]],
    format: MeshFormat,
    path: &Path,
) -> Result<(), MeshIoError> {
    fs::write(path, encode_mesh(x, orders, format)).map_err(io_err(path))
}

/// Writes `x`, with outward facet normals when it is a surface.
pub fn save_mesh<T: Scalar>(x: &EmbeddedComplex<T>, format: MeshFormat, path: &Path) -> Result<(), MeshIoError> {
    save_mesh_oriented(x, &default_orders(x), format, path)
}

/// Group file: one matrix per line as nine row-major numbers. Blank lines
/// and `#` comments are ignored.
pub fn parse_group(text: &str) -> Result<Vec<Mat3<f64>>, MeshIoError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let mut tok = l.split_whitespace();
        let mut v = [0.0; 9];
        for c in v.iter_mut() {
            *c = parse_f64(tok.next(), i + 1)?;
        }
        if tok.next().is_some() {
            return Err(line_err(i + 1, "expected exactly nine numbers"));
        }
        out.push(Mat3::from_row_major(&v));
    }
    Ok(out)
}

pub fn format_group(mats: &[Mat3<f64>]) -> String {
    let mut s = String::new();
    for m in mats {
        let row: Vec<String> = m.row_major().iter().map(|c| format!("{c:e}")).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn load_group(path: &Path) -> Result<Vec<Mat3<f64>>, MeshIoError> {
    parse_group(&fs::read_to_string(path).map_err(io_err(path))?)
}

/// One chamber file in an exploded-view manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: usize,
    pub volume: f64,
    pub euler: i64,
    pub translation: [f64; 3],
    pub file: String,
}

const MANIFEST_HEADER: &str = "id\tvolume\teuler\ttx\tty\ttz\tfile";

/// Tab-separated manifest with a header line.
pub fn format_manifest(records: &[ManifestRecord]) -> String {
    let mut s = format!("{MANIFEST_HEADER}\n");
    for r in records {
        let _ = writeln!(
            s,
            "{}\t{:e}\t{}\t{:e}\t{:e}\t{:e}\t{}",
            r.id,
            r.volume,
            r.euler,
            r.translation[0] + 0.0,
            r.translation[1] + 0.0,
            r.translation[2] + 0.0,
            r.file
        );
    }
    s
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestRecord>, MeshIoError> {
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate().skip(1) {
        if l.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != 7 {
            return Err(line_err(i + 1, "expected 7 fields"));
        }
        let num = |k: usize| parse_f64(Some(f[k]), i + 1);
        out.push(ManifestRecord {
            id: f[0].parse().map_err(|_| line_err(i + 1, "bad id"))?,
            volume: num(1)?,
            euler: f[2].parse().map_err(|_| line_err(i + 1, "bad euler characteristic"))?,
            translation: [num(3)?, num(4)?, num(5)?],
            file: f[6].to_string(),
        });
    }
    Ok(out)
}

/// Writes one file per chamber plus `manifest.tsv` into `dir`.
pub fn write_chambers<T: Scalar>(
    chambers: &[crate::chambers::ExplodedChamber<T>],
    dir: &Path,
    format: MeshFormat,
) -> Result<Vec<ManifestRecord>, MeshIoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut records = Vec::with_capacity(chambers.len());
    for c in chambers {
        let file = format!("chamber_{:05}.{}", c.id, format.extension());
        save_mesh_oriented(&c.mesh, &c.orders, format, &dir.join(&file))?;
        records.push(ManifestRecord {
            id: c.id,
            volume: c.volume.as_f64(),
            euler: c.euler,
            translation: c.translation.to_f64(),
            file,
        });
    }
    let path = dir.join("manifest.tsv");
    fs::write(&path, format_manifest(&records)).map_err(io_err(&path))?;
    Ok(records)
}

/// One segment per line: faces, kind, endpoints.
pub fn format_intersections<T: Scalar>(map: &IntersectionMap<T>) -> String {
    let mut s = String::new();
    for seg in map.segments() {
        let kind = match seg.kind {
            SegmentKind::Transversal => "transversal",
            SegmentKind::Coplanar => "coplanar",
        };
        let (p, q) = (seg.p0.to_f64(), seg.p1.to_f64());
        let _ = writeln!(
            s,
            "{} {} {kind} {:e} {:e} {:e} {:e} {:e} {:e}",
            seg.face_a, seg.face_b, p[0], p[1], p[2], q[0], q[1], q[2]
        );
    }
    s
}
