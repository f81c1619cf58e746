//! Total curvature and total absolute curvature of the level sets of a
//! closed-form function `f: Rⁿ → R` (n = 2, 3).
//!
//! The pipeline: [`expr`] parses `f` and differentiates it exactly,
//! [`geometry`] turns the jets into pointwise curvature of the level through
//! a point, [`levelset`] meshes `f⁻¹(t) ∩ B_R`, [`curvature`] integrates over
//! the mesh, [`sphimage`] rasterizes the Gauss image on the sphere,
//! [`oracle`] recounts the same totals from critical points of linear
//! projections, and [`app`] scans `t` and looks for discontinuities.

pub mod expr;
pub mod geometry;
pub mod levelset;
pub mod curvature;
pub mod oracle;
pub mod par;
pub mod sphimage;
pub mod app;

pub use expr::{parse, ExprError, Jet2, ScalarField};

/// Points and vectors. Planar problems keep `z = 0`.
pub type Vec3 = nalgebra::Vector3<f64>;
