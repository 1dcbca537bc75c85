//! Moments of the cloud of a planar measure.
//!
//! Starting from the complex moments `∫ z^j conj(z)^k dμ` of a compactly
//! supported measure, the crate builds orthonormal polynomials and the
//! Hessenberg matrix of multiplication by `z`, estimates the area moments of
//! the measure's cloud through truncated trace formulas, and reconstructs
//! quadrature-domain boundaries from those moments via the exponential
//! transform.

pub mod cloud;
pub mod error;
pub mod exptransform;
pub mod hessenberg;
pub mod linalg;
pub mod measure;
pub mod moments;
pub mod mp;
pub mod orthopoly;

pub use error::{Error, Result};
pub use moments::{ComplexMomentTable, FloatFormat, MassUnit, PrecisionPolicy, ValidationReport};
pub use mp::{Cx, Real};
