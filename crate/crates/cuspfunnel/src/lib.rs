//! Numerical realization of a complex-scaling framework for scattering
//! resonances on surfaces with one cusp end and one funnel end.
//!
//! The library is organized around the pipeline
//! geometry -> dynamics -> scaling -> operators -> escape:
//! validated warp-product metrics, geodesic flow and nontrapping checks,
//! deformation contours with certified symbol bounds, discretized per-mode
//! non-self-adjoint operators with resonance scans, and escape-function
//! positivity certificates.

pub mod dynamics;
pub mod escape;
pub mod geometry;
pub mod operators;
pub mod scaling;

pub use geometry::{ModelSurface, WarpProfile};
pub use operators::{Grid1D, ModeOperator, ResonanceReport};
pub use scaling::ContourSpec;
