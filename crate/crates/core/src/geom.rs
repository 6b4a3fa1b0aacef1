//! Tolerance-aware 3D geometry kernel.
//!
//! Every predicate here takes an explicit [`Tolerance`]; nothing in the crate
//! compares floating point values for exact equality outside this module.

use std::collections::HashMap;
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("degenerate triangle (area below tolerance)")]
    DegenerateTriangle,
    #[error("non-finite coordinate")]
    NonFinite,
}

/// A point (or vector) in R^3.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

/// Vectors and points share one representation.
pub type Vector3<T> = Point3<T>;

impl<T: Scalar> Point3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    /// Builds a point, rejecting NaN and infinite components.
    pub fn try_new(x: T, y: T, z: T) -> Result<Self, GeomError> {
        if x.is_finite() && y.is_finite() && z.is_finite() {
            Ok(Self { x, y, z })
        } else {
            Err(GeomError::NonFinite)
        }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_f64(p: [f64; 3]) -> Self {
        Self::new(T::lit(p[0]), T::lit(p[1]), T::lit(p[2]))
    }

    pub fn to_f64(self) -> [f64; 3] {
        [self.x.as_f64(), self.y.as_f64(), self.z.as_f64()]
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    #[inline]
    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    /// `alpha * b + (1 - alpha) * a`
    #[inline]
    pub fn lerp(a: Self, b: Self, alpha: T) -> Self {
        a * (T::one() - alpha) + b * alpha
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Lexicographic comparison, used for deterministic ordering.
    pub fn lex_cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.x
            .partial_cmp(&o.x)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(self.y.partial_cmp(&o.y).unwrap_or(std::cmp::Ordering::Equal))
            .then(self.z.partial_cmp(&o.z).unwrap_or(std::cmp::Ordering::Equal))
    }

    pub fn cast<U: Scalar>(self) -> Point3<U> {
        Point3::new(
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
    }
}

impl<T: Scalar> Add for Point3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> AddAssign for Point3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> Sub for Point3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Mul<T> for Point3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Scalar> Div<T> for Point3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Scalar> Neg for Point3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T> Index<usize> for Point3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Point3 index {i} out of range"),
        }
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat3<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Scalar> Mat3<T> {
    pub fn new(m: [[T; 3]; 3]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self::new([[o, z, z], [z, o, z], [z, z, o]])
    }

    pub fn from_row_major(v: &[T; 9]) -> Self {
        Self::new([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
    }

    pub fn row_major(&self) -> [T; 9] {
        let m = &self.m;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        ]
    }

    /// Rotation by `angle` about the unit `axis` (Rodrigues).
    pub fn rotation(axis: Vector3<T>, angle: T) -> Self {
        let a = axis.normalized().unwrap_or(Point3::new(T::zero(), T::zero(), T::one()));
        let (s, c) = angle.sin_cos();
        let t = T::one() - c;
        Self::new([
            [t * a.x * a.x + c, t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y],
            [t * a.x * a.y + s * a.z, t * a.y * a.y + c, t * a.y * a.z - s * a.x],
            [t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c],
        ])
    }

    pub fn apply(&self, p: Point3<T>) -> Point3<T> {
        let m = &self.m;
        Point3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z,
        )
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = [[T::zero(); 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).fold(T::zero(), |acc, k| acc + self.m[i][k] * o.m[k][j]);
            }
        }
        Self::new(r)
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self::new([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn det(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut d = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        d
    }

    /// Largest absolute entry of `M^T M - I`.
    pub fn orthogonality_defect(&self) -> T {
        self.transpose().mul(self).max_abs_diff(&Self::identity())
    }
}

/// Numerical tolerances.
///
/// * `eps_point` - distance below which two points coincide.
/// * `eps_param` - slack on the segment parameter range `[-eps, 1 + eps]`.
/// * `eps_angle` - threshold on unit-vector dot products for parallelism.
///
/// The defaults (`1e-9` of the bounding-box diagonal, `1e-9`, `1e-12`) are
/// engineering choices; for `f32` they are raised to a small multiple of the
/// machine epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance<T> {
    pub eps_point: T,
    pub eps_param: T,
    pub eps_angle: T,
}

impl<T: Scalar> Tolerance<T> {
    pub fn new(eps_point: T, eps_param: T, eps_angle: T) -> Self {
        assert!(
            eps_point > T::zero() && eps_param > T::zero() && eps_angle > T::zero(),
            "tolerances must be strictly positive"
        );
        Self { eps_point, eps_param, eps_angle }
    }

    /// Default tolerances for a model whose bounding-box diagonal is `diag`.
    pub fn for_extent(diag: T) -> Self {
        let mach = T::epsilon();
        let rel_point = T::lit(1e-9).max(mach * T::lit(256.0));
        let diag = if diag > T::zero() { diag } else { T::one() };
        Self::new(
            rel_point * diag,
            T::lit(1e-9).max(mach * T::lit(256.0)),
            T::lit(1e-12).max(mach * T::lit(16.0)),
        )
    }

    /// Default tolerances derived from a point cloud's extent.
    pub fn for_points(points: &[Point3<T>]) -> Self {
        Self::for_extent(Aabb::from_points(points).map(|b| b.diagonal()).unwrap_or(T::one()))
    }
}

impl<T: Scalar> Default for Tolerance<T> {
    fn default() -> Self {
        Self::for_extent(T::one())
    }
}

/// A plane through `point` with unit `normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane<T> {
    pub point: Point3<T>,
    pub normal: Vector3<T>,
}

impl<T: Scalar> Plane<T> {
    /// Signed distance of `p` from the plane.
    #[inline]
    pub fn signed_distance(&self, p: Point3<T>) -> T {
        (p - self.point).dot(self.normal)
    }
}

/// Plane spanned by a triangle; the normal is `(b - a) x (c - a)` normalized.
pub fn plane_of_triangle<T: Scalar>(
    a: Point3<T>,
    b: Point3<T>,
    c: Point3<T>,
    tol: &Tolerance<T>,
) -> Result<Plane<T>, GeomError> {
    let n = (b - a).cross(c - a);
    let area = n.norm() * T::lit(0.5);
    if !(area > tol.eps_point * tol.eps_point) {
        return Err(GeomError::DegenerateTriangle);
    }
    Ok(Plane { point: a, normal: n / n.norm() })
}

/// Parameter `alpha` at which the segment `v_i -> v_j` meets `plane`.
///
/// Returns `None` when the segment is parallel to the plane or the parameter
/// falls outside `[-eps_param, 1 + eps_param]`. The crossing point is
/// `lerp(v_i, v_j, alpha)`.
pub fn segment_plane_alpha<T: Scalar>(
    v_i: Point3<T>,
    v_j: Point3<T>,
    plane: &Plane<T>,
    tol: &Tolerance<T>,
) -> Option<T> {
    let d = v_j - v_i;
    let den = d.dot(plane.normal);
    if den.abs() <= tol.eps_angle * d.norm() {
        return None;
    }
    let alpha = (plane.point - v_i).dot(plane.normal) / den;
    if alpha >= -tol.eps_param && alpha <= T::one() + tol.eps_param {
        Some(alpha)
    } else {
        None
    }
}

/// Whether `p` (assumed to lie in the triangle's plane) is inside or on the
/// boundary of triangle `abc`, using the three inward side normals.
pub fn point_in_triangle<T: Scalar>(
    p: Point3<T>,
    a: Point3<T>,
    b: Point3<T>,
    c: Point3<T>,
    tol: &Tolerance<T>,
) -> Result<bool, GeomError> {
    let plane = plane_of_triangle(a, b, c, tol)?;
    let n = plane.normal;
    for (s, e) in [(a, b), (b, c), (c, a)] {
        let inward = match n.cross(e - s).normalized() {
            Some(v) => v,
            None => return Err(GeomError::DegenerateTriangle),
        };
        if inward.dot(p - s) < -tol.eps_point {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Removes near-duplicates; the first occurrence of each cluster is kept.
pub fn dedupe_points<T: Scalar>(ps: &[Point3<T>], tol: &Tolerance<T>) -> Vec<Point3<T>> {
    let mut welder = PointWelder::new(tol.eps_point);
    for &p in ps {
        welder.insert(p);
    }
    welder.into_points()
}

/// Incremental point welding on a uniform hash grid with cell size `eps`.
///
/// `insert` returns the id of an existing point within `eps`, or appends
/// the point as a new representative.
#[derive(Debug, Clone)]
pub struct PointWelder<T> {
    eps: T,
    inv_cell: f64,
    points: Vec<Point3<T>>,
    grid: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl<T: Scalar> PointWelder<T> {
    pub fn new(eps: T) -> Self {
        let cell = eps.as_f64().max(f64::MIN_POSITIVE);
        Self { eps, inv_cell: 1.0 / cell, points: Vec::new(), grid: HashMap::new() }
    }

    fn key(&self, p: Point3<T>) -> (i64, i64, i64) {
        let f = |v: T| (v.as_f64() * self.inv_cell).floor() as i64;
        (f(p.x), f(p.y), f(p.z))
    }

    /// Id of a stored point within `eps` of `p`, if any (nearest wins).
    pub fn find(&self, p: Point3<T>) -> Option<usize> {
        let (kx, ky, kz) = self.key(p);
        let mut best: Option<(T, usize)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.grid.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &id in ids {
                            let d = self.points[id].distance(p);
                            if d <= self.eps && best.is_none_or(|(bd, bid)| d < bd || (d == bd && id < bid)) {
                                best = Some((d, id));
                            }
                        }
                    }
                }
            }
        }
        best.map(|(_, id)| id)
    }

    pub fn insert(&mut self, p: Point3<T>) -> usize {
        if let Some(id) = self.find(p) {
            return id;
        }
        self.push_unchecked(p)
    }

    /// Appends `p` without searching for a duplicate.
    pub fn push_unchecked(&mut self, p: Point3<T>) -> usize {
        let id = self.points.len();
        self.points.push(p);
        let k = self.key(p);
        self.grid.entry(k).or_default().push(id);
        id
    }

    pub fn points(&self) -> &[Point3<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point3<T>> {
        self.points
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<T> {
    pub min: Point3<T>,
    pub max: Point3<T>,
}

impl<T: Scalar> Aabb<T> {
    pub fn from_points(ps: &[Point3<T>]) -> Option<Self> {
        let first = *ps.first()?;
        let mut b = Self { min: first, max: first };
        for &p in &ps[1..] {
            b.include(p);
        }
        Some(b)
    }

    pub fn include(&mut self, p: Point3<T>) {
        self.min = Point3::new(self.min.x.min(p.x), self.min.y.min(p.y), self.min.z.min(p.z));
        self.max = Point3::new(self.max.x.max(p.x), self.max.y.max(p.y), self.max.z.max(p.z));
    }

    pub fn diagonal(&self) -> T {
        (self.max - self.min).norm()
    }

    pub fn expanded(&self, e: T) -> Self {
        let d = Point3::new(e, e, e);
        Self { min: self.min - d, max: self.max + d }
    }

    pub fn overlaps(&self, o: &Self) -> bool {
        self.min.x <= o.max.x
            && o.min.x <= self.max.x
            && self.min.y <= o.max.y
            && o.min.y <= self.max.y
            && self.min.z <= o.max.z
            && o.min.z <= self.max.z
    }
}

/// Twice the signed area of the 2D triangle `abc`.
#[inline]
pub fn orient2d<T: Scalar>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Orthonormal 2D frame of a plane, used for all in-plane predicates.
#[derive(Debug, Clone, Copy)]
pub struct PlaneFrame<T> {
    pub origin: Point3<T>,
    pub u: Vector3<T>,
    pub v: Vector3<T>,
    pub normal: Vector3<T>,
}

impl<T: Scalar> PlaneFrame<T> {
    /// Frame with origin `a`, first axis along `b - a`, normal of `abc`.
    pub fn of_triangle(
        a: Point3<T>,
        b: Point3<T>,
        c: Point3<T>,
        tol: &Tolerance<T>,
    ) -> Result<Self, GeomError> {
        let plane = plane_of_triangle(a, b, c, tol)?;
        let u = (b - a).normalized().ok_or(GeomError::DegenerateTriangle)?;
        let v = plane.normal.cross(u);
        Ok(Self { origin: a, u, v, normal: plane.normal })
    }

    #[inline]
    pub fn project(&self, p: Point3<T>) -> [T; 2] {
        let d = p - self.origin;
        [d.dot(self.u), d.dot(self.v)]
    }

    #[inline]
    pub fn lift(&self, q: [T; 2]) -> Point3<T> {
        self.origin + self.u * q[0] + self.v * q[1]
    }
}

pub fn triangle_area<T: Scalar>(a: Point3<T>, b: Point3<T>, c: Point3<T>) -> T {
    (b - a).cross(c - a).norm() * T::lit(0.5)
}

/// `det[a, b, c]`, six times the signed volume of the tetrahedron `(0, a, b, c)`.
#[inline]
pub fn det3<T: Scalar>(a: Point3<T>, b: Point3<T>, c: Point3<T>) -> T {
    a.dot(b.cross(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type P = Point3<f64>;

    fn p(x: f64, y: f64, z: f64) -> P {
        P::new(x, y, z)
    }

    fn tol() -> Tolerance<f64> {
        Tolerance::new(1e-9, 1e-9, 1e-12)
    }

    #[test]
    fn plane_axis_aligned_and_flipped() {
        let pl = plane_of_triangle(p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.), &tol()).unwrap();
        assert_eq!(pl.normal, p(0., 0., 1.));
        assert_eq!(pl.point, p(0., 0., 0.));
        let pl = plane_of_triangle(p(0., 0., 0.), p(0., 1., 0.), p(1., 0., 0.), &tol()).unwrap();
        assert_eq!(pl.normal, p(0., 0., -1.));
        assert_eq!(
            plane_of_triangle(p(0., 0., 0.), p(1., 0., 0.), p(1., 0., 0.), &tol()),
            Err(GeomError::DegenerateTriangle)
        );
    }

    #[test]
    fn segment_plane_examples() {
        let z0 = Plane { point: p(0., 0., 0.), normal: p(0., 0., 1.) };
        let a = segment_plane_alpha(p(0., 0., -1.), p(0., 0., 1.), &z0, &tol()).unwrap();
        assert_eq!(a, 0.5);
        assert_eq!(P::lerp(p(0., 0., -1.), p(0., 0., 1.), a), p(0., 0., 0.));
        assert_eq!(segment_plane_alpha(p(1., 1., 0.), p(2., 1., 0.), &z0, &tol()), None);
        assert_eq!(segment_plane_alpha(p(1., 1., 2.), p(1., 1., 5.), &z0, &tol()), None);
    }

    #[test]
    fn point_in_triangle_examples() {
        let (a, b, c) = (p(0., 0., 0.), p(2., 0., 0.), p(0., 2., 0.));
        let centroid = (a + b + c) / 3.0;
        assert!(point_in_triangle(centroid, a, b, c, &tol()).unwrap());
        assert!(point_in_triangle(a, a, b, c, &tol()).unwrap());
        assert!(!point_in_triangle(p(3., 3., 0.), a, b, c, &tol()).unwrap());
        assert!(point_in_triangle(a, a, b, b, &tol()).is_err());
    }

    #[test]
    fn dedupe_examples() {
        let t = tol();
        assert_eq!(
            dedupe_points(&[p(0., 0., 0.), p(1e-12, 0., 0.), p(1., 0., 0.)], &t),
            vec![p(0., 0., 0.), p(1., 0., 0.)]
        );
        assert!(dedupe_points::<f64>(&[], &t).is_empty());
        let two = vec![p(0., 0., 0.), p(0.5, 0., 0.)];
        assert_eq!(dedupe_points(&two, &t), two);
    }

    #[test]
    fn f32_kernel_works() {
        let t = Tolerance::<f32>::for_extent(1.0);
        let pl = plane_of_triangle(
            Point3::new(0f32, 0., 0.),
            Point3::new(1., 0., 0.),
            Point3::new(0., 1., 0.),
            &t,
        )
        .unwrap();
        assert_eq!(pl.normal, Point3::new(0., 0., 1.));
        let a = segment_plane_alpha(Point3::new(0f32, 0., -1.), Point3::new(0., 0., 3.), &pl, &t);
        assert_eq!(a, Some(0.25));
    }

    /// Barycentric oracle, independent of the side-normal formulation.
    fn barycentric(p: P, a: P, b: P, c: P) -> [f64; 3] {
        let v0 = b - a;
        let v1 = c - a;
        let v2 = p - a;
        let d00 = v0.dot(v0);
        let d01 = v0.dot(v1);
        let d11 = v1.dot(v1);
        let d20 = v2.dot(v0);
        let d21 = v2.dot(v1);
        let den = d00 * d11 - d01 * d01;
        let v = (d11 * d20 - d01 * d21) / den;
        let w = (d00 * d21 - d01 * d20) / den;
        [1.0 - v - w, v, w]
    }

    #[test]
    fn point_in_triangle_matches_barycentric_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = tol();
        let mut checked = 0;
        while checked < 10_000 {
            let r = |rng: &mut ChaCha8Rng| p(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (a, b, c) = (r(&mut rng), r(&mut rng), r(&mut rng));
            let n = (b - a).cross(c - a);
            if n.norm() < 1e-3 {
                continue;
            }
            let s: f64 = rng.gen_range(-0.5..1.5);
            let u: f64 = rng.gen_range(-0.5..1.5);
            let q = a + (b - a) * s + (c - a) * u;
            let bc = barycentric(q, a, b, c);
            // Skip the tolerance band around the boundary.
            let margin = bc.iter().fold(f64::INFINITY, |m, &x| m.min(x.abs()));
            if margin < 1e-6 {
                continue;
            }
            let inside = bc.iter().all(|&x| x > 0.0);
            assert_eq!(point_in_triangle(q, a, b, c, &t).unwrap(), inside);
            checked += 1;
        }
    }

    fn arb_point() -> impl Strategy<Value = P> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| p(x, y, z))
    }

    proptest! {
        #[test]
        fn alpha_point_lies_on_plane(a in arb_point(), b in arb_point(), c in arb_point(), vi in arb_point(), vj in arb_point()) {
            let t = tol();
            prop_assume!(vi.distance(vj) > 1e-6);
            if let Ok(pl) = plane_of_triangle(a, b, c, &t) {
                if let Some(al) = segment_plane_alpha(vi, vj, &pl, &t) {
                    let q = P::lerp(vi, vj, al);
                    let bound = 10.0 * t.eps_point * 1f64.max(vj.distance(vi));
                    prop_assert!(pl.signed_distance(q).abs() <= bound);
                }
            }
        }

        #[test]
        fn plane_cyclic_invariance(a in arb_point(), b in arb_point(), c in arb_point()) {
            let t = tol();
            if let (Ok(p1), Ok(p2), Ok(p3)) = (
                plane_of_triangle(a, b, c, &t),
                plane_of_triangle(b, c, a, &t),
                plane_of_triangle(a, c, b, &t),
            ) {
                prop_assert!((p1.normal - p2.normal).norm() < 1e-6);
                prop_assert!((p1.normal + p3.normal).norm() < 1e-6);
            }
        }

        #[test]
        fn dedupe_idempotent(pts in proptest::collection::vec(arb_point(), 0..40), jitter in proptest::collection::vec(0usize..40, 0..20)) {
            let t = Tolerance::new(1e-3, 1e-9, 1e-12);
            let mut all = pts.clone();
            for j in jitter {
                if let Some(&q) = pts.get(j) {
                    all.push(q + p(1e-4, 0.0, 0.0));
                }
            }
            let once = dedupe_points(&all, &t);
            let twice = dedupe_points(&once, &t);
            prop_assert_eq!(&once, &twice);
            for q in &all {
                prop_assert!(once.iter().any(|r| r.distance(*q) <= t.eps_point));
            }
        }
    }
}
