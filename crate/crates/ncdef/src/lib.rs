//! Exact-arithmetic non-commutative (NC) deformation theory of smooth
//! varieties presented as posets of affine charts.
//!
//! The library computes Hochschild/Čech obstruction classes of candidate
//! lifts over small extensions of Artin local algebras, extension torsors,
//! twisted deformations and truncated semi-universal hulls.  All arithmetic
//! is exact (rationals or a prime field); obstruction classes vanish
//! exactly or not at all.

pub mod artin;
pub mod cech;
pub mod deform;
pub mod error;
pub mod geometry;
pub mod hochschild;
pub mod linalg;
pub mod poly;
pub mod scalar;
pub mod verify;

pub use error::NcdefError;
pub use scalar::Scalar;
