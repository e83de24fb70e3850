//! Complex-scaling contours and certified symbol bounds.
//!
//! The deformation `r -> r + i f(r)` is built per end and per mode
//! parameter `alpha`.  On the cusp: for `alpha` above the threshold
//! `(tan t / 4) e^{-2(R + pi/tan t)}` the exponential term is elliptic on
//! its own and `f == 0`; below it the contour has region I
//! `C1 e^{C2/(R-r)}` on `(R, R+1]`, region II with slope `tan t` up to
//! `R_C^a`, and region III constant at a level `3pi/4 + pi k` so that the
//! exponential term rotates onto the negative imaginary axis.  On the
//! funnel: for `alpha <= 6 e^{2R}` the standard two-region scaling is
//! used; above it the contour rises to the plateau `pi/8` at
//! `e^{-2r} alpha = 5`, stays there until `R_F^a = log(2 alpha / tan t)/2`,
//! and then climbs with slope `tan t`.
//!
//! Contours are mollified by convolution with a compactly supported
//! `C-inf` bump.  `verify_symbol_bounds` sweeps the scaled symbol
//! `q = rho^2/(1+if')^2 + e^{+-2(r+if)} alpha beta(r+if) - 1` over an
//! `(r, rho)` grid and reports worst-case margins for the lower bounds on
//! `-im q` in the scaled region, the sign condition on `im q` at every
//! radius, the region-III decay bound on the cusp, and the empirical
//! modulus of continuity tying `|q|` small to `f` small.

use crate::geometry::{End, GeometryError, WarpProfile};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("contour leaves the profile's cone of analyticity at r = {r} (enlarge R)")]
    ArgDomain { r: f64 },
    #[error("contour construction failed: {0}")]
    Construction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// Cusp with `alpha` above threshold: no deformation needed.
    IdenticallyZero,
    /// Cusp below threshold: regions I-III (no III when `alpha = 0`).
    SmallAlpha,
    /// Funnel with `alpha <= 6 e^{2R}`: standard two-region scaling.
    Standard,
    /// Funnel above `6 e^{2R}`: rise, plateau `pi/8`, late linear climb.
    LargeAlpha,
}

#[derive(Debug, Clone, Serialize)]
pub struct Breakpoint {
    pub label: String,
    pub r: f64,
}

/// Piecewise-analytic description of the contour before mollification.
#[derive(Debug, Clone, PartialEq)]
enum Pieces {
    Zero,
    /// Region I `C1 e^{C2/(base-r)}` on `(base, knee]`, then slope up to an
    /// optional cap `(r_cap, level)` past which `f` is constant.  Covers
    /// the cusp small-alpha branch and the funnel standard branch.
    CuspLike {
        c1: f64,
        c2: f64,
        base: f64,
        knee: f64,
        slope: f64,
        cap: Option<(f64, f64)>,
    },
    /// Region I rising to the plateau at `r_i`, plateau until `r_a`,
    /// then linear with `slope`.
    FunnelLarge {
        c1: f64,
        c2: f64,
        base: f64,
        r_i: f64,
        plateau: f64,
        r_a: f64,
        slope: f64,
    },
}

#[derive(Debug, Clone)]
pub struct ContourSpec {
    pub end: End,
    /// Gluing radius `R`; `f == 0` on `[0, R]` before mollification.
    pub r_base: f64,
    pub theta: f64,
    pub alpha: f64,
    pub branch: Branch,
    pub breakpoints: Vec<Breakpoint>,
    /// The integer `k` of the cusp level `3pi/4 + pi k`, when present.
    pub level_index: Option<u64>,
    pub c1: f64,
    pub c2: f64,
    /// Mollifier width.
    pub width: f64,
    /// Radius past which the strict bound (`|re q| <= d  =>  im q <= -d`)
    /// is certified; depends on the branch but not otherwise on `R`.
    pub r_free: f64,
    /// Cusp small-alpha only: `log(e^{2 R_C^a} alpha) - log(tan t / 4)`,
    /// the log-distance of the region-II/III handoff from the midpoint of
    /// its admissible window (0 for the exact-handoff sweep).
    pub handoff_residual: f64,
    pieces: Pieces,
}

/// Normalization `int_{-1}^{1} exp(-1/(1-u^2)) du` of the unit bump,
/// computed with the same panelled Gauss rule as the convolution so that
/// mollifying a constant reproduces it exactly.
fn bump_mass() -> f64 {
    let mut acc = 0.0;
    for panel in 0..4 {
        let a = -1.0 + 0.5 * panel as f64;
        let mid = a + 0.25;
        for i in 0..8 {
            for sgn in [-1.0f64, 1.0] {
                let u = mid + sgn * 0.25 * GL16_X[i];
                acc += 0.25 * GL16_W[i] * bump_kernel(u);
            }
        }
    }
    acc
}

/// Unit bump `exp(-1/(1-u^2))` on (-1, 1), without normalization.
fn bump_kernel(u: f64) -> f64 {
    let uu = 1.0 - u * u;
    if uu <= 0.0 {
        0.0
    } else {
        (-1.0 / uu).exp()
    }
}

/// 16-point Gauss-Legendre rule on [-1, 1] (positive abscissas).
const GL16_X: [f64; 8] = [
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.7554044083550030,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL16_W: [f64; 8] = [
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

impl ContourSpec {
    /// Pre-mollification `(f, f', f'')` from the piecewise closed forms.
    pub fn eval_pre(&self, r: f64) -> (f64, f64, f64) {
        match &self.pieces {
            Pieces::Zero => (0.0, 0.0, 0.0),
            Pieces::CuspLike { c1, c2, base, knee, slope, cap } => {
                if r <= *base {
                    (0.0, 0.0, 0.0)
                } else if r <= *knee {
                    let d = *base - r;
                    let f = c1 * (c2 / d).exp();
                    let f1 = f * c2 / (d * d);
                    let f2 = f * (c2 * c2 / d.powi(4) + 2.0 * c2 / d.powi(3));
                    (f, f1, f2)
                } else {
                    let f_knee = c1 * (-c2).exp();
                    match cap {
                        Some((rc, level)) if r >= *rc => (*level, 0.0, 0.0),
                        _ => (f_knee + slope * (r - knee), *slope, 0.0),
                    }
                }
            }
            Pieces::FunnelLarge { c1, c2, base, r_i, plateau, r_a, slope } => {
                if r <= *base {
                    (0.0, 0.0, 0.0)
                } else if r < *r_i {
                    let d = *base - r;
                    let f = c1 * (c2 / d).exp();
                    let f1 = f * c2 / (d * d);
                    let f2 = f * (c2 * c2 / d.powi(4) + 2.0 * c2 / d.powi(3));
                    (f, f1, f2)
                } else if r <= *r_a {
                    (*plateau, 0.0, 0.0)
                } else {
                    (plateau + slope * (r - r_a), *slope, 0.0)
                }
            }
        }
    }

    fn piece_boundaries(&self) -> Vec<f64> {
        match &self.pieces {
            Pieces::Zero => vec![],
            Pieces::CuspLike { base, knee, cap, .. } => {
                let mut v = vec![*base, *knee];
                if let Some((rc, _)) = cap {
                    v.push(*rc);
                }
                v
            }
            Pieces::FunnelLarge { base, r_i, r_a, .. } => vec![*base, *r_i, *r_a],
        }
    }

    /// Slope discontinuities `(location, jump)` of the piecewise contour;
    /// the distributional second derivative carries a delta there.
    fn slope_jumps(&self) -> Vec<(f64, f64)> {
        match &self.pieces {
            Pieces::Zero => vec![],
            Pieces::CuspLike { slope, cap, .. } => match cap {
                Some((rc, _)) => vec![(*rc, -slope)],
                None => vec![],
            },
            Pieces::FunnelLarge { c1, c2, base, r_i, r_a, slope, .. } => {
                let d = *base - *r_i;
                let f1_in = c1 * (c2 / d).exp() * c2 / (d * d);
                vec![(*r_i, -f1_in), (*r_a, *slope)]
            }
        }
    }

    /// Mollified `(f, f', f'')`: the convolution of the piecewise contour
    /// with the normalized bump of the configured width.  `f` and `f'`
    /// convolve the piecewise values directly; `f''` additionally picks up
    /// the bump evaluated at each slope discontinuity.  Exact 0 for
    /// `r <= R - width`.  The quadrature is Gauss-Legendre split at the
    /// contour's piece boundaries, so it is accurate despite the kinks.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        if self.pieces == Pieces::Zero || self.width == 0.0 {
            return self.eval_pre(r);
        }
        if r <= self.r_base - self.width {
            return (0.0, 0.0, 0.0);
        }
        let w = self.width;
        let mass = bump_mass();
        // Subinterval endpoints in the unit variable u = s/w, where the
        // integrand samples f at r - wu: a contour breakpoint b falls at
        // u = (r - b)/w.
        let mut cuts = vec![-1.0f64];
        for b in self.piece_boundaries() {
            let u = (r - b) / w;
            if u > -1.0 && u < 1.0 {
                cuts.push(u);
            }
        }
        cuts.push(1.0);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for pair in cuts.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            // Four panels per smooth subinterval keep the Gauss rule well
            // inside its convergence regime near the kernel's flat ends.
            for panel in 0..4 {
                let a = lo + (hi - lo) * panel as f64 / 4.0;
                let b = lo + (hi - lo) * (panel + 1) as f64 / 4.0;
                let mid = 0.5 * (a + b);
                let half = 0.5 * (b - a);
                for i in 0..8 {
                    for sgn in [-1.0, 1.0] {
                        let u = mid + sgn * half * GL16_X[i];
                        let e = bump_kernel(u);
                        let (fv, f1v, f2v) = self.eval_pre(r - w * u);
                        let wt = half * GL16_W[i] * e;
                        m0 += wt * fv;
                        m1 += wt * f1v;
                        m2 += wt * f2v;
                    }
                }
            }
        }
        for (b, jump) in self.slope_jumps() {
            // Delta at the kink: jump * psi_w(r - b).
            m2 += jump * bump_kernel((r - b) / w) / w;
        }
        (m0 / mass, m1 / mass, m2 / mass)
    }

    /// Region tag at radius `r` (pre-mollification boundaries).
    pub fn region(&self, r: f64) -> &'static str {
        match &self.pieces {
            Pieces::Zero => "unscaled",
            Pieces::CuspLike { base, knee, cap, .. } => {
                if r <= *base {
                    "unscaled"
                } else if r <= *knee {
                    "I"
                } else {
                    match cap {
                        Some((rc, _)) if r >= *rc => "III",
                        _ => "II",
                    }
                }
            }
            Pieces::FunnelLarge { base, r_i, r_a, .. } => {
                if r <= *base {
                    "unscaled"
                } else if r < *r_i {
                    "I"
                } else if r <= *r_a {
                    "II"
                } else {
                    "III"
                }
            }
        }
    }

    /// Start of cusp region III, when present.
    pub fn cap_radius(&self) -> Option<f64> {
        match &self.pieces {
            Pieces::CuspLike { cap: Some((rc, _)), .. } => Some(*rc),
            _ => None,
        }
    }

    /// Largest region boundary.
    pub fn last_breakpoint(&self) -> f64 {
        self.breakpoints.iter().map(|b| b.r).fold(self.r_base, f64::max)
    }

    /// Default sweep radius for grids over this contour.
    pub fn default_r_max(&self) -> f64 {
        match self.branch {
            Branch::IdenticallyZero => self.r_free.max(self.r_base) + 10.0,
            Branch::SmallAlpha => match self.cap_radius() {
                Some(rc) => rc + 10.0,
                None => self.r_base + 20.0,
            },
            Branch::Standard => self.last_breakpoint() + 10.0,
            Branch::LargeAlpha => self.last_breakpoint() + 10.0,
        }
    }

    /// CSV rows `r,f,f1,f2,region` over a uniform grid.
    pub fn to_csv(&self, points: usize) -> String {
        let r_max = self.default_r_max();
        let mut out = String::from("r,f,f1,f2,region\n");
        for i in 0..points {
            let r = r_max * i as f64 / (points - 1) as f64;
            let (f, f1, f2) = self.eval(r);
            out.push_str(&format!("{},{},{},{},{}\n", r, f, f1, f2, self.region(r)));
        }
        out
    }

    /// An SVG document containing the `(r, f(r))` polyline.
    pub fn to_svg(&self, points: usize, width_px: f64, height_px: f64) -> String {
        let r_max = self.default_r_max();
        let f_max = (0..points)
            .map(|i| self.eval(r_max * i as f64 / (points - 1) as f64).0)
            .fold(1e-9f64, f64::max);
        let mut coords = String::new();
        for i in 0..points {
            let r = r_max * i as f64 / (points - 1) as f64;
            let (f, _, _) = self.eval(r);
            let x = width_px * r / r_max;
            let y = height_px * (1.0 - f / (1.05 * f_max));
            coords.push_str(&format!("{:.2},{:.2} ", x, y));
        }
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<polyline fill=\"none\" stroke=\"black\" points=\"{p}\"/>\n</svg>\n",
            w = width_px,
            h = height_px,
            p = coords.trim_end()
        )
    }
}

/// Cusp deformation threshold: above it no scaling is needed.
pub fn cusp_threshold(r_base: f64, theta: f64) -> f64 {
    let t = theta.tan();
    (t / 4.0) * (-2.0 * (r_base + PI / t)).exp()
}

/// `log(e^{2r} alpha)` without forming the overflowing exponential.
fn log_exp2r_alpha(r: f64, alpha: f64) -> f64 {
    2.0 * r + alpha.ln()
}

/// Imaginary part of the exponential term of the symbol at `(r, f)`,
/// `s = +1` cusp / `s = -1` funnel, in a form safe for extreme `alpha`.
fn exp_term(
    end: End,
    profile: &WarpProfile,
    alpha: f64,
    r: f64,
    f: f64,
) -> Result<Complex64, GeometryError> {
    if alpha == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let z = Complex64::new(r, f);
    let beta = profile.eval(z)?;
    let s = match end {
        End::Cusp => 1.0,
        End::Funnel => -1.0,
    };
    let log_mag = s * 2.0 * r + alpha.ln();
    let phase = Complex64::from_polar(1.0, s * 2.0 * f);
    Ok(log_mag.exp() * phase * beta)
}

/// Doubling search for the region-I constant `C2`: smallest power of two
/// from 4 for which the exponential term's imaginary part stays dominated
/// by `f'` throughout region I at the branch-worst `alpha`.
fn pick_c2(
    end: End,
    profile: &WarpProfile,
    theta: f64,
    base: f64,
    knee: f64,
    alpha_worst: f64,
    anchor: RegionIAnchor,
) -> Result<f64, ScalingError> {
    let t = theta.tan();
    let mut c2 = 4.0f64;
    'outer: while c2 <= (1u64 << 40) as f64 {
        let c1 = match anchor {
            RegionIAnchor::SlopeAtKnee => t * c2.exp() / c2,
            RegionIAnchor::ValueAtKnee(v) => v * (c2 / (knee - base)).exp(),
        };
        let mut ok = true;
        for j in 1..=200 {
            let r = base + (knee - base) * j as f64 / 200.0;
            let d = base - r;
            let f = c1 * (c2 / d).exp();
            let f1 = f * c2 / (d * d);
            let e = exp_term(end, profile, alpha_worst, r, f)?;
            if e.im > f1 {
                ok = false;
                break;
            }
        }
        if ok {
            break 'outer;
        }
        c2 *= 2.0;
    }
    if c2 > (1u64 << 40) as f64 {
        return Err(ScalingError::Construction(
            "region-I domination check failed for every C2 in the search".into(),
        ));
    }
    Ok(c2)
}

#[derive(Clone, Copy)]
enum RegionIAnchor {
    /// `f'(knee) = tan theta` (cusp small-alpha, funnel standard).
    SlopeAtKnee,
    /// `f(knee) = value` (funnel large-alpha plateau entry).
    ValueAtKnee(f64),
}

/// Default mollifier width.
pub const DEFAULT_WIDTH: f64 = 0.05;

/// Build the deformation contour for one end and one mode parameter.
pub fn build_contour(
    end: End,
    r_base: f64,
    theta: f64,
    alpha: f64,
    profile: &WarpProfile,
) -> Result<ContourSpec, ScalingError> {
    build_contour_with_width(end, r_base, theta, alpha, profile, DEFAULT_WIDTH)
}

pub fn build_contour_with_width(
    end: End,
    r_base: f64,
    theta: f64,
    alpha: f64,
    profile: &WarpProfile,
    width: f64,
) -> Result<ContourSpec, ScalingError> {
    if !(theta.tan() <= 0.5 + 1e-12) {
        return Err(ScalingError::Construction(format!(
            "need tan theta <= 1/2, got {}",
            theta.tan()
        )));
    }
    if r_base < 1.0 {
        return Err(ScalingError::Construction(format!(
            "need R >= 1, got {r_base}"
        )));
    }
    let t = theta.tan();
    let spec = match end {
        End::Cusp => {
            let thresh = cusp_threshold(r_base, theta);
            if alpha > thresh {
                // Exponential term elliptic by itself: |re q| <= d is
                // vacuous once e^{2r} alpha >= 3.
                let r_free = (0.5 * (3.0f64.ln() - alpha.ln())).max(0.0);
                ContourSpec {
                    end,
                    r_base,
                    theta,
                    alpha,
                    branch: Branch::IdenticallyZero,
                    breakpoints: vec![],
                    level_index: None,
                    c1: 0.0,
                    c2: 0.0,
                    width,
                    r_free,
                    handoff_residual: 0.0,
                    pieces: Pieces::Zero,
                }
            } else {
                let knee = r_base + 1.0;
                let c2 = pick_c2(end, profile, theta, r_base, knee, thresh, RegionIAnchor::SlopeAtKnee)?;
                let c1 = t * c2.exp() / c2;
                let f_knee = c1 * (-c2).exp();
                let mut breakpoints = vec![
                    Breakpoint { label: "region-I-start".into(), r: r_base },
                    Breakpoint { label: "region-II-start".into(), r: knee },
                ];
                let (cap, level_index, residual) = if alpha == 0.0 {
                    (None, None, 0.0)
                } else {
                    // Solve f(r_k) = 3pi/4 + pi k on the region-II line and
                    // pick the smallest k inside the admissible window
                    // tan t / 8 <= e^{2 r_k} alpha <= 3 tan t / 8, falling
                    // back to the k nearest the window midpoint tan t / 4.
                    let lo = (t / 8.0).ln();
                    let hi = (3.0 * t / 8.0).ln();
                    let mid = (t / 4.0).ln();
                    let mut chosen: Option<(u64, f64, f64)> = None;
                    let mut nearest: Option<(u64, f64, f64)> = None;
                    let mut k = 0u64;
                    loop {
                        let level = 0.75 * PI + PI * k as f64;
                        let r_k = knee + (level - f_knee) / t;
                        let x = log_exp2r_alpha(r_k, alpha);
                        if (lo..=hi).contains(&x) {
                            chosen = Some((k, r_k, x - mid));
                            break;
                        }
                        let res = x - mid;
                        if nearest.map(|(_, _, b)| res.abs() < b.abs()).unwrap_or(true) {
                            nearest = Some((k, r_k, res));
                        }
                        if x > hi {
                            break;
                        }
                        k += 1;
                    }
                    let (k, r_k, res) = chosen
                        .or(nearest)
                        .ok_or_else(|| ScalingError::Construction("no admissible level".into()))?;
                    let level = 0.75 * PI + PI * k as f64;
                    breakpoints.push(Breakpoint { label: "region-III-start".into(), r: r_k });
                    (Some((r_k, level)), Some(k), res)
                };
                ContourSpec {
                    end,
                    r_base,
                    theta,
                    alpha,
                    branch: Branch::SmallAlpha,
                    breakpoints,
                    level_index,
                    c1,
                    c2,
                    width,
                    r_free: knee,
                    handoff_residual: residual,
                    pieces: Pieces::CuspLike {
                        c1,
                        c2,
                        base: r_base,
                        knee,
                        slope: t,
                        cap,
                    },
                }
            }
        }
        End::Funnel => {
            let large_threshold = 6.0 * (2.0 * r_base).exp();
            if alpha <= large_threshold {
                let knee = r_base + 1.0;
                let c2 = pick_c2(
                    end,
                    profile,
                    theta,
                    r_base,
                    knee,
                    large_threshold,
                    RegionIAnchor::SlopeAtKnee,
                )?;
                let c1 = t * c2.exp() / c2;
                // Smallest R_F0 with 6 e^{2(R - R_F0)} <= tan t / 2,
                // rounded up to the grid resolution.
                let raw = r_base + 0.5 * (12.0 / t).ln();
                let rf0 = (raw * 1000.0).ceil() / 1000.0;
                ContourSpec {
                    end,
                    r_base,
                    theta,
                    alpha,
                    branch: Branch::Standard,
                    breakpoints: vec![
                        Breakpoint { label: "region-I-start".into(), r: r_base },
                        Breakpoint { label: "region-II-start".into(), r: knee },
                        Breakpoint { label: "rf0".into(), r: rf0 },
                    ],
                    level_index: None,
                    c1,
                    c2,
                    width,
                    r_free: rf0 + 1.0,
                    handoff_residual: 0.0,
                    pieces: Pieces::CuspLike {
                        c1,
                        c2,
                        base: r_base,
                        knee,
                        slope: t,
                        cap: None,
                    },
                }
            } else {
                // Rise ends where e^{-2r} alpha = 5, plateau until
                // e^{-2r} alpha = tan t / 2.
                let r_i = 0.5 * (alpha.ln() - 5.0f64.ln());
                let r_a = 0.5 * ((2.0 * alpha).ln() - t.ln());
                let plateau = PI / 8.0;
                let c2 = pick_c2(
                    end,
                    profile,
                    theta,
                    r_base,
                    r_i,
                    alpha,
                    RegionIAnchor::ValueAtKnee(plateau),
                )?;
                let c1 = plateau * (c2 / (r_i - r_base)).exp();
                ContourSpec {
                    end,
                    r_base,
                    theta,
                    alpha,
                    branch: Branch::LargeAlpha,
                    breakpoints: vec![
                        Breakpoint { label: "region-I-start".into(), r: r_base },
                        Breakpoint { label: "region-II-start".into(), r: r_i },
                        Breakpoint { label: "region-III-start".into(), r: r_a },
                    ],
                    level_index: None,
                    c1,
                    c2,
                    width,
                    r_free: r_base + 0.5 * (12.0 / t).ln() + 1.0,
                    handoff_residual: 0.0,
                    pieces: Pieces::FunnelLarge {
                        c1,
                        c2,
                        base: r_base,
                        r_i,
                        plateau,
                        r_a,
                        slope: t,
                    },
                }
            }
        }
    };

    // Mollified contour must stay inside the profile's cone.
    let r_max = spec.default_r_max();
    for i in 1..=2000 {
        let r = r_max * i as f64 / 2000.0;
        let (f, _, _) = spec.eval(r);
        if f > 0.0 && f.atan2(r) >= profile.theta_max {
            return Err(ScalingError::ArgDomain { r });
        }
    }
    Ok(spec)
}

/// The exact-handoff small-alpha sweep on the cusp: the geometric family
/// for which region III starts precisely at the midpoint of its
/// admissible window, `count` members from the largest downward.
pub fn cusp_small_alpha_sweep(
    r_base: f64,
    theta: f64,
    profile: &WarpProfile,
    count: usize,
) -> Result<Vec<f64>, ScalingError> {
    let t = theta.tan();
    let thresh = cusp_threshold(r_base, theta);
    let knee = r_base + 1.0;
    let c2 = pick_c2(
        End::Cusp,
        profile,
        theta,
        r_base,
        knee,
        thresh,
        RegionIAnchor::SlopeAtKnee,
    )?;
    let f_knee = t * (c2.exp() / c2) * (-c2).exp();
    let mut out = Vec::with_capacity(count);
    let mut k = 0u64;
    while out.len() < count {
        let level = 0.75 * PI + PI * k as f64;
        let r_k = knee + (level - f_knee) / t;
        // e^{2 r_k} alpha = tan t / 4  =>  ln alpha = ln(tan t / 4) - 2 r_k.
        let ln_alpha = (t / 4.0).ln() - 2.0 * r_k;
        let alpha = ln_alpha.exp();
        if alpha <= thresh && alpha > 0.0 {
            out.push(alpha);
        }
        k += 1;
        if k > 10_000 {
            return Err(ScalingError::Construction("sweep ran out of levels".into()));
        }
    }
    Ok(out)
}

/// One evaluation of the scaled symbol, through the complex formula and
/// through the displayed real/imaginary split.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SymbolSample {
    pub r: f64,
    pub rho: f64,
    pub alpha: f64,
    pub q_re: f64,
    pub q_im: f64,
    /// `|q_complex - (re + i im)|` between the two evaluation paths.
    pub split_err: f64,
}

/// Scaled symbol `q = rho^2/(1+if')^2 + e^{+-2(r+if)} alpha beta(r+if) - 1`.
pub fn scaled_symbol(
    end: End,
    c: &ContourSpec,
    profile: &WarpProfile,
    r: f64,
    rho: f64,
) -> Result<Complex64, ScalingError> {
    let (f, f1, _) = c.eval(r);
    let e = exp_term(end, profile, c.alpha, r, f)?;
    let den = Complex64::new(1.0, f1);
    Ok(rho * rho / (den * den) + e - 1.0)
}

/// Evaluate one `SymbolSample` at an explicit contour point `(f, f')`,
/// recording the discrepancy between the two evaluation paths.
pub fn sample_symbol(
    end: End,
    profile: &WarpProfile,
    alpha: f64,
    r: f64,
    f: f64,
    f1: f64,
    rho: f64,
) -> Result<SymbolSample, ScalingError> {
    let e = exp_term(end, profile, alpha, r, f)?;
    let inv4 = 1.0 / (1.0 + f1 * f1).powi(2);
    let rr = rho * rho;
    // Split form: 1/(1+if')^2 = (1 - 2if' - f'^2)/|1+if'|^4, so the
    // kinetic term contributes (1-f'^2) rr inv4 + i (-2 f' rr inv4).
    let q_re = (1.0 - f1 * f1) * rr * inv4 + e.re - 1.0;
    let q_im = -2.0 * f1 * rr * inv4 + e.im;
    let den = Complex64::new(1.0, f1);
    let q_c = rr / (den * den) + e - 1.0;
    Ok(SymbolSample {
        r,
        rho,
        alpha,
        q_re,
        q_im,
        split_err: (q_c - Complex64::new(q_re, q_im)).norm(),
    })
}

#[derive(Debug, Clone)]
pub struct SymbolGrid {
    pub r_points: usize,
    pub rho_max: f64,
    pub rho_points: usize,
    /// Verify the piecewise contour instead of the mollified one.
    pub pre_mollification: bool,
}

impl Default for SymbolGrid {
    fn default() -> Self {
        SymbolGrid { r_points: 4000, rho_max: 3.0, rho_points: 600, pre_mollification: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundWitness {
    pub r: f64,
    pub rho: f64,
    pub q_re: f64,
    pub q_im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRecord {
    pub id: String,
    /// Empirical worst-case constant; its meaning per id is documented in
    /// `verify_symbol_bounds`.
    pub margin: f64,
    pub pass: bool,
    pub witness: Option<BoundWitness>,
    /// `r`-range where the hypothesis side `|re q| <= d*` was active.
    pub active: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub end: End,
    pub branch: Branch,
    pub alpha: f64,
    pub delta_target: f64,
    pub records: Vec<BoundRecord>,
    /// Empirical modulus of continuity: for each `d'`, the largest
    /// `|f| + |f'| + |f''|` seen among samples with `|q| <= d'`.
    pub modulus: Vec<(f64, f64)>,
    pub split_max_err: f64,
    pub pre_mollification: bool,
}

impl BoundReport {
    pub fn pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn record(&self, id: &str) -> Option<&BoundRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable report")
    }
}

/// Default certification floor `min(1/6, tan t / 12) * 0.9`.
pub fn default_delta_target(theta: f64) -> f64 {
    (1.0f64 / 6.0).min(theta.tan() / 12.0) * 0.9
}

struct RowStats {
    /// min over samples of max(|re q|, -im q), for the strict bound.
    strict: (f64, f64, f64, f64, f64),
    /// min |re q| among samples with im q > 0, for the sign bound.
    sign: (f64, f64, f64, f64, f64),
    /// min normalized slack of im q <= -(2/3) e^{2r} alpha in region III.
    decay: (f64, f64, f64, f64, f64),
    active: Option<(f64, f64)>,
    split_err: f64,
    modulus: Vec<f64>,
}

const MODULUS_LEVELS: [f64; 6] = [0.5, 0.2, 0.1, 0.05, 0.02, 0.01];

/// Sweep the symbol over the grid and report certified margins:
///
/// - `strict-negativity`: over `r >= r_free`, the largest `d` with
///   `|re q| <= d  =>  im q <= -d`; margin is that `d`.
/// - `sign-everywhere`: over all `r`, the largest `d` with
///   `|re q| <= d  =>  im q <= 0`; margin is that `d` (infinite when
///   `im q <= 0` unconditionally).
/// - `region-iii-decay` (cusp with region III only): margin is the worst
///   of `-im q / ((2/3) e^{2r} alpha) - 1 >= 0` past the cap.
pub fn verify_symbol_bounds(
    end: End,
    c: &ContourSpec,
    profile: &WarpProfile,
    grid: &SymbolGrid,
) -> Result<BoundReport, ScalingError> {
    let delta_target = default_delta_target(c.theta);
    let r_max = c.default_r_max();
    let cap = c.cap_radius();
    let rows: Result<Vec<RowStats>, ScalingError> = (0..grid.r_points)
        .into_par_iter()
        .map(|i| {
            let r = r_max * (i as f64 + 0.5) / grid.r_points as f64;
            let (f, f1, f2) = if grid.pre_mollification { c.eval_pre(r) } else { c.eval(r) };
            let sum_f = f.abs() + f1.abs() + f2.abs();
            let mut stats = RowStats {
                strict: (f64::INFINITY, 0.0, 0.0, 0.0, 0.0),
                sign: (f64::INFINITY, 0.0, 0.0, 0.0, 0.0),
                decay: (f64::INFINITY, 0.0, 0.0, 0.0, 0.0),
                active: None,
                split_err: 0.0,
                modulus: vec![f64::NEG_INFINITY; MODULUS_LEVELS.len()],
            };
            let e = exp_term(end, profile, c.alpha, r, f)?;
            let inv4 = 1.0 / (1.0 + f1 * f1).powi(2);
            let den = Complex64::new(1.0, f1);
            let inv_c = 1.0 / (den * den);
            let decay_target = if cap.map(|rc| r >= rc).unwrap_or(false) {
                // -(2/3) e^{2r} alpha in log space; r is moderate here.
                Some((2.0 / 3.0) * (2.0 * r + c.alpha.ln()).exp())
            } else {
                None
            };
            for j in 0..grid.rho_points {
                let rho = -grid.rho_max
                    + 2.0 * grid.rho_max * (j as f64 + 0.5) / grid.rho_points as f64;
                let rr = rho * rho;
                let q_re = (1.0 - f1 * f1) * rr * inv4 + e.re - 1.0;
                let q_im = -2.0 * f1 * rr * inv4 + e.im;
                let q_c = rr * inv_c + e - 1.0;
                stats.split_err = stats
                    .split_err
                    .max((q_c - Complex64::new(q_re, q_im)).norm());

                if r >= c.r_free {
                    let v = q_re.abs().max(-q_im);
                    if v < stats.strict.0 {
                        stats.strict = (v, r, rho, q_re, q_im);
                    }
                }
                if q_im > 1e-12 && q_re.abs() < stats.sign.0 {
                    stats.sign = (q_re.abs(), r, rho, q_re, q_im);
                }
                if let Some(target) = decay_target {
                    let slack = (-q_im) / target - 1.0;
                    if slack < stats.decay.0 {
                        stats.decay = (slack, r, rho, q_re, q_im);
                    }
                }
                if q_re.abs() <= delta_target {
                    stats.active = match stats.active {
                        None => Some((r, r)),
                        Some((a, b)) => Some((a.min(r), b.max(r))),
                    };
                }
                let qn = q_c.norm();
                for (lvl, slot) in MODULUS_LEVELS.iter().zip(stats.modulus.iter_mut()) {
                    if qn <= *lvl && sum_f > *slot {
                        *slot = sum_f;
                    }
                }
            }
            Ok(stats)
        })
        .collect();
    let rows = rows?;

    let fold_min =
        |pick: fn(&RowStats) -> (f64, f64, f64, f64, f64)| -> (f64, f64, f64, f64, f64) {
            rows.iter()
                .map(pick)
                .fold((f64::INFINITY, 0.0, 0.0, 0.0, 0.0), |acc, v| {
                    if v.0 < acc.0 {
                        v
                    } else {
                        acc
                    }
                })
        };
    let strict = fold_min(|s| s.strict);
    let sign = fold_min(|s| s.sign);
    let decay = fold_min(|s| s.decay);
    let active = rows.iter().filter_map(|s| s.active).fold(None, |acc, v| match acc {
        None => Some(v),
        Some((a, b)) => Some((a.min(v.0), b.max(v.1))),
    });
    let split_max_err = rows.iter().map(|s| s.split_err).fold(0.0, f64::max);
    let modulus = MODULUS_LEVELS
        .iter()
        .enumerate()
        .map(|(i, lvl)| {
            let worst = rows
                .iter()
                .map(|s| s.modulus[i])
                .fold(f64::NEG_INFINITY, f64::max);
            (*lvl, worst.max(0.0))
        })
        .collect();

    let witness = |v: &(f64, f64, f64, f64, f64)| -> Option<BoundWitness> {
        if v.0.is_finite() {
            Some(BoundWitness { r: v.1, rho: v.2, q_re: v.3, q_im: v.4 })
        } else {
            None
        }
    };

    let mut records = vec![
        BoundRecord {
            id: "strict-negativity".into(),
            margin: strict.0,
            pass: strict.0 >= delta_target,
            witness: witness(&strict),
            active,
        },
        BoundRecord {
            id: "sign-everywhere".into(),
            margin: sign.0,
            pass: sign.0 >= delta_target,
            witness: witness(&sign),
            active,
        },
    ];
    if cap.is_some() {
        records.push(BoundRecord {
            id: "region-iii-decay".into(),
            margin: decay.0,
            pass: decay.0 >= -1e-9,
            witness: witness(&decay),
            active: None,
        });
    }

    Ok(BoundReport {
        end,
        branch: c.branch,
        alpha: c.alpha,
        delta_target,
        records,
        modulus,
        split_max_err,
        pre_mollification: grid.pre_mollification,
    })
}
