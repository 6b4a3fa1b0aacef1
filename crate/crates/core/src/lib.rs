//! Repair of closed, possibly self-intersecting triangle complexes.
//!
//! The pipeline finds all face-face intersections, retriangulates the
//! affected faces, extracts the outer hull and the interior chambers, and
//! splits non-manifold edges and vertices until the result is a simplicial
//! surface. A known orthogonal symmetry group can be supplied to cut the
//! number of pair tests.
//!
//! Geometric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiation.

pub mod chambers;
pub mod complex;
pub mod fixtures;
pub mod geom;
pub mod intersect;
pub mod meshio;
pub mod outerhull;
pub mod pipeline;
pub mod ramify;
pub mod retriangulate;
pub mod scalar;
pub mod symmetry;

pub use complex::{build_complex, euler_characteristic, ComplexError, EmbeddedComplex, SimplicialComplex};
pub use scalar::Scalar;

pub type Point = geom::Point3<f64>;
pub type Vector = geom::Vector3<f64>;
pub type Tol = geom::Tolerance<f64>;
pub type Matrix = geom::Mat3<f64>;
pub type Mesh = EmbeddedComplex<f64>;

pub type PointF32 = geom::Point3<f32>;
pub type TolF32 = geom::Tolerance<f32>;
pub type MeshF32 = EmbeddedComplex<f32>;
