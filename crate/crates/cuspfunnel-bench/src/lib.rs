//! Shared fixtures for the criterion benchmarks: one standard surface and
//! its deformation contours, so every bench measures the same model the
//! acceptance pipeline runs.

use cuspfunnel::geometry::End;
use cuspfunnel::scaling::{build_contour, ContourSpec};
use cuspfunnel::ModelSurface;

/// Scaling angle `arctan(1/2)` used throughout the benchmarks.
pub fn theta() -> f64 {
    0.5f64.atan()
}

/// The parabolic cylinder with unit circles, the pipeline's default model.
pub fn standard_surface() -> ModelSurface {
    ModelSurface::parabolic_cylinder(1.0, theta(), 0.9)
}

/// Zero-mode contours glued at the scan radius `R = 1`.
pub fn standard_contours(m: &ModelSurface) -> (ContourSpec, ContourSpec) {
    let cc = build_contour(End::Cusp, 1.0, m.theta, 0.0, &m.cusp).expect("cusp contour");
    let cf = build_contour(End::Funnel, 1.0, m.theta, 0.0, &m.funnel).expect("funnel contour");
    (cc, cf)
}
