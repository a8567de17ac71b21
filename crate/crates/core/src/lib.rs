//! Horizontal geodesics of the 4-dimensional distribution `ω = Σ Aᵢ dxⁱ + dx⁴ = 0`
//! on a 5-manifold, with a metric of signature (+,−,−,−) on the distribution.
//!
//! Horizontal geodesics of this distribution are the world lines of a charged
//! particle; the fiber coordinate x⁴ records the accumulated `−∫ A·u dt`.

pub mod error;
pub mod fields;
pub mod fit;
pub mod geodesic;
pub mod magnetic;
pub mod nonholonomy;
pub mod polynomial;
pub mod verify;

pub use error::{Error, Result};
