//! Warped-product model surfaces with one cusp end and one funnel end.
//!
//! An end is described by a warp profile `beta`, holomorphic on a cone
//! `|arg z| < theta_max` around the positive real axis, real on the axis,
//! and close to 1 in the sense of the standing hypotheses:
//! `|beta - 1| <= 1/3` on the cone, derivative decay `|beta^(k)| <= C_k |z|^-k`,
//! and `|beta''| + |beta'| <= beta / 2` on `[0, oo)`.  The end metrics are
//! `dr^2 + (e^{-2r}/beta_C^2) sigma_C` on the cusp and
//! `dr^2 + (e^{2r}/beta_F^2) sigma_F` on the funnel.
//!
//! This module evaluates profiles and their complex derivatives, the
//! conjugation weight and effective potential entering the per-mode
//! operators, sectional curvatures of warped metrics, hypothesis
//! validation over sample grids, and the regularized 0-volume.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Which end of the surface a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum End {
    Cusp,
    Funnel,
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point {re}+{im}i lies outside the cone |arg z| < {theta_max} about the positive axis")]
    OutsideCone { re: f64, im: f64, theta_max: f64 },
    #[error("model parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// Analytic family a warp profile can belong to.
#[derive(Debug, Clone, PartialEq)]
pub enum WarpKind {
    /// `beta == 1`; the cusp of the parabolic cylinder.
    ConstantOne,
    /// `beta(z) = scale * e^z sech(z + shift)`, the exact hyperbolic funnel
    /// (warp factor `cosh(z + shift) / scale`).  The scale absorbs the
    /// cross-section rescaling that comes from enlarging the compact core;
    /// `scale = e, shift = 1.7` keeps both standing hypotheses satisfied.
    HyperbolicFunnel { scale: f64, shift: f64 },
    /// `beta(z) = 1 + sum_k c_k / (1+z)^{k+1}` with user coefficients.
    /// Holomorphic away from `z = -1`, real on the axis, decaying.
    UserAnalytic { coeffs: Vec<f64> },
}

/// A warp profile together with the half-angle of its cone of analyticity.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpProfile {
    pub kind: WarpKind,
    pub theta_max: f64,
}

/// Number of trapezoid nodes for contour-integral differentiation.
const CAUCHY_NODES: usize = 48;

impl WarpProfile {
    pub fn constant_one(theta_max: f64) -> Self {
        WarpProfile { kind: WarpKind::ConstantOne, theta_max }
    }

    pub fn hyperbolic_funnel(scale: f64, shift: f64, theta_max: f64) -> Self {
        WarpProfile { kind: WarpKind::HyperbolicFunnel { scale, shift }, theta_max }
    }

    pub fn user_analytic(coeffs: Vec<f64>, theta_max: f64) -> Self {
        WarpProfile { kind: WarpKind::UserAnalytic { coeffs }, theta_max }
    }

    fn check_cone(&self, z: Complex64) -> Result<(), GeometryError> {
        // Points on the positive axis (and the origin) are always allowed;
        // off-axis points must satisfy |arg z| < theta_max.
        if z.im == 0.0 && z.re >= 0.0 {
            return Ok(());
        }
        if z.norm() == 0.0 || z.arg().abs() >= self.theta_max {
            return Err(GeometryError::OutsideCone {
                re: z.re,
                im: z.im,
                theta_max: self.theta_max,
            });
        }
        Ok(())
    }

    /// Evaluate `beta(z)` on the cone of analyticity.
    pub fn eval(&self, z: Complex64) -> Result<Complex64, GeometryError> {
        self.check_cone(z)?;
        Ok(self.eval_unchecked(z))
    }

    fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            WarpKind::ConstantOne => Complex64::new(1.0, 0.0),
            WarpKind::HyperbolicFunnel { scale, shift } => {
                // scale e^z sech(z+shift) = 2 scale e^{-shift} / (1 + e^{-2u})
                // with u = z + shift, stable for large re(u).
                let u = z + shift;
                2.0 * scale * (-shift).exp() / (1.0 + (-2.0 * u).exp())
            }
            WarpKind::UserAnalytic { coeffs } => {
                let w = 1.0 / (z + 1.0);
                let mut acc = Complex64::new(0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    acc = (acc + c) * w;
                }
                acc + 1.0
            }
        }
    }

    /// `(beta, beta', beta'')` at `z`.  Built-in profiles use closed forms;
    /// user profiles are differentiated with a Cauchy integral over a circle
    /// of radius `min(dist(z, cone boundary), 1) / 2`.
    pub fn derivatives(&self, z: Complex64) -> Result<(Complex64, Complex64, Complex64), GeometryError> {
        self.check_cone(z)?;
        match &self.kind {
            WarpKind::ConstantOne => Ok((
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            )),
            WarpKind::HyperbolicFunnel { scale, shift } => {
                let u = z + shift;
                let e = (-2.0 * u).exp();
                let b = 2.0 * scale * (-shift).exp() / (1.0 + e);
                // log beta = const + u - log cosh u, so the logarithmic
                // derivatives only involve tanh(u) = (1-e^{-2u})/(1+e^{-2u}).
                let th = (1.0 - e) / (1.0 + e);
                let sech2 = 1.0 - th * th;
                let b1 = b * (1.0 - th);
                let b2 = b * ((1.0 - th) * (1.0 - th) - sech2);
                Ok((b, b1, b2))
            }
            WarpKind::UserAnalytic { .. } => {
                let dist = if z.im == 0.0 && z.re > 0.0 {
                    z.re * self.theta_max.sin()
                } else {
                    z.norm() * (self.theta_max - z.arg().abs()).sin()
                };
                let radius = (dist.min(1.0)) * 0.5;
                if !(radius > 0.0) {
                    return Err(GeometryError::OutsideCone {
                        re: z.re,
                        im: z.im,
                        theta_max: self.theta_max,
                    });
                }
                let mut d1 = Complex64::new(0.0, 0.0);
                let mut d2 = Complex64::new(0.0, 0.0);
                for j in 0..CAUCHY_NODES {
                    let phi = 2.0 * PI * (j as f64) / (CAUCHY_NODES as f64);
                    let dir = Complex64::from_polar(1.0, phi);
                    let val = self.eval_unchecked(z + radius * dir);
                    d1 += val / dir;
                    d2 += val / (dir * dir);
                }
                let m = CAUCHY_NODES as f64;
                d1 /= m * radius;
                d2 *= 2.0 / (m * radius * radius);
                Ok((self.eval_unchecked(z), d1, d2))
            }
        }
    }
}

/// Conjugation weight `phi` with `e^{-phi} Delta e^{phi}`:
/// `phi = ((n-1)/2)(r + log beta_C)` on the cusp and
/// `phi = ((n-1)/2)(-r + log beta_F)` on the funnel.
pub fn conjugation_weight(end: End, profile: &WarpProfile, n: u32, r: f64) -> Result<f64, GeometryError> {
    let beta = profile.eval(Complex64::new(r, 0.0))?.re;
    let half = (n as f64 - 1.0) / 2.0;
    Ok(match end {
        End::Cusp => half * (r + beta.ln()),
        End::Funnel => half * (-r + beta.ln()),
    })
}

/// Effective potential of the conjugated per-mode operator,
/// evaluated at a (possibly complex) point of the cone:
///
/// ```text
/// V_F = -((n-1)^2/2) b'/b - ((n-1)/2) b''/b + ((n^2-1)/4)(b'/b)^2
/// V_C = +((n-1)^2/2) b'/b - ((n-1)/2) b''/b + ((n^2-1)/4)(b'/b)^2
/// ```
pub fn potential_v(end: End, profile: &WarpProfile, n: u32, z: Complex64) -> Result<Complex64, GeometryError> {
    let (b, b1, b2) = profile.derivatives(z)?;
    let nf = n as f64;
    let l1 = b1 / b;
    let l2 = b2 / b;
    let sign = match end {
        End::Cusp => 1.0,
        End::Funnel => -1.0,
    };
    Ok(sign * ((nf - 1.0) * (nf - 1.0) / 2.0) * l1 - ((nf - 1.0) / 2.0) * l2
        + ((nf * nf - 1.0) / 4.0) * l1 * l1)
}

/// Sectional curvatures of `dr^2 + f(r)^2 g~` from `f, f', f''` and the
/// cross-section curvature `K~`: radial planes have `K = -f''/f`, planes
/// tangent to the cross-section have `K = (K~ - f'^2)/f^2`.
pub fn sectional_curvature(f: f64, f1: f64, f2: f64, ktilde: f64) -> (f64, f64) {
    (-f2 / f, (ktilde - f1 * f1) / (f * f))
}

/// Curvatures of an end metric, whose warp factor is `f = e^{-r}/beta_C`
/// (cusp) or `f = e^{r}/beta_F` (funnel), with a flat circle cross-section.
pub fn end_curvatures(end: End, profile: &WarpProfile, r: f64) -> Result<(f64, f64), GeometryError> {
    let (b, b1, b2) = profile.derivatives(Complex64::new(r, 0.0))?;
    let (b, b1, b2) = (b.re, b1.re, b2.re);
    let s = match end {
        End::Cusp => -1.0,
        End::Funnel => 1.0,
    };
    // f = e^{sr}/beta:  f'/f = s - b'/b,
    // f''/f = (s - b'/b)^2 - (b''/b - (b'/b)^2).
    let e = (s * r).exp();
    let f = e / b;
    let l1 = b1 / b;
    let g1 = s - l1;
    let g2 = g1 * g1 - (b2 / b - l1 * l1);
    Ok(sectional_curvature(f, g1 * f, g2 * f, 0.0))
}

/// How the two end charts are glued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GlueMode {
    /// A single global chart `t in R`, cusp chart `r = t` for `t >= 0` and
    /// funnel chart `r = -t` for `t <= 0`; requires the warp factors of the
    /// two ends to agree smoothly across `t = 0`.
    Global,
    /// Ends handled in separate charts joined by an abstract compact core.
    Separate,
}

/// Compactly supported multiplicative potential bump used to perturb the
/// model operator on the collar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Perturbation {
    /// Support `[lo, hi]` in the global coordinate.
    pub lo: f64,
    pub hi: f64,
    pub amplitude: f64,
}

impl Perturbation {
    /// Smooth bump `amplitude * exp(1 - 1/(1-u^2))` with `u` the affine
    /// coordinate of `[lo, hi]` onto `[-1, 1]`; identically 0 outside.
    pub fn eval(&self, t: f64) -> f64 {
        let u = 2.0 * (t - self.lo) / (self.hi - self.lo) - 1.0;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        self.amplitude * (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

/// A surface with one cusp end, one funnel end, and circle cross-sections.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSurface {
    /// Dimension `n >= 2` (the ends are `n`-dimensional warped products).
    pub n: u32,
    /// Scaling angle `theta`, with `tan theta <= 1/2`.
    pub theta: f64,
    pub cusp: WarpProfile,
    pub funnel: WarpProfile,
    /// Length of the cusp cross-section circle.
    pub ell_cusp: f64,
    /// Length of the funnel cross-section circle.
    pub ell_funnel: f64,
    pub glue: GlueMode,
    pub perturbation: Option<Perturbation>,
}

impl ModelSurface {
    /// The parabolic cylinder `<z -> z+1> \ H^2`: both profiles constant 1,
    /// both circles of length `ell`, a single global chart.
    pub fn parabolic_cylinder(ell: f64, theta: f64, theta_max: f64) -> Self {
        ModelSurface {
            n: 2,
            theta,
            cusp: WarpProfile::constant_one(theta_max),
            funnel: WarpProfile::constant_one(theta_max),
            ell_cusp: ell,
            ell_funnel: ell,
            glue: GlueMode::Global,
            perturbation: None,
        }
    }

    pub fn profile(&self, end: End) -> &WarpProfile {
        match end {
            End::Cusp => &self.cusp,
            End::Funnel => &self.funnel,
        }
    }

    pub fn ell(&self, end: End) -> f64 {
        match end {
            End::Cusp => self.ell_cusp,
            End::Funnel => self.ell_funnel,
        }
    }

    /// Cross-section Laplacian eigenvalues `lambda_m = (2 pi m / ell)^2`
    /// for `m = 0, 1, ...`, each `m >= 1` listed twice (the circle modes
    /// `e^{+-2pi i m t / ell}`).
    pub fn mode_lambdas(&self, end: End, count: usize) -> Vec<f64> {
        let ell = self.ell(end);
        let mut out = Vec::with_capacity(count);
        let mut m = 0u64;
        while out.len() < count {
            let lam = (2.0 * PI * m as f64 / ell).powi(2);
            out.push(lam);
            if m > 0 && out.len() < count {
                out.push(lam);
            }
            m += 1;
        }
        out
    }

    /// Parse the key-value model format; see `examples` under the CLI crate.
    pub fn parse(text: &str) -> Result<Self, GeometryError> {
        parse_model(text)
    }
}

/// Sample grid used by `validate_surface`.
#[derive(Debug, Clone)]
pub struct HypothesisGrid {
    /// Radii sampled on the positive axis and along the cone rays.
    pub radii: Vec<f64>,
    /// Number of rays strictly inside the cone (split between both signs).
    pub rays: usize,
}

impl Default for HypothesisGrid {
    /// 2048 log-spaced radii in `[1e-3, 1e3]` and 32 interior cone rays.
    fn default() -> Self {
        let n = 2048;
        let (lo, hi) = (1e-3f64, 1e3f64);
        let radii = (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect();
        HypothesisGrid { radii, rays: 32 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub end: End,
    pub re: f64,
    pub im: f64,
    pub value: f64,
}

/// One hypothesis check: `margin` is the worst slack (negative = violated)
/// except for reported-only envelope fits, where it is the fitted constant.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub id: String,
    pub pass: bool,
    pub margin: f64,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<HypothesisCheck>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// One JSON object per line, one line per check.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&serde_json::to_string(c).expect("serializable check"));
            out.push('\n');
        }
        out
    }
}

struct WorstTracker {
    margin: f64,
    witness: Option<Witness>,
}

impl WorstTracker {
    fn new() -> Self {
        WorstTracker { margin: f64::INFINITY, witness: None }
    }

    fn update(&mut self, slack: f64, end: End, z: Complex64, value: f64) {
        if slack < self.margin {
            self.margin = slack;
            self.witness = Some(Witness { end, re: z.re, im: z.im, value });
        }
    }

    fn into_check(self, id: &str) -> HypothesisCheck {
        HypothesisCheck {
            id: id.to_string(),
            pass: self.margin >= 0.0,
            margin: self.margin,
            witness: self.witness,
        }
    }
}

/// Check the standing hypotheses on both profiles over the grid.
///
/// Asserted: the cone bound `|beta - 1| <= 1/3`, the angle bound
/// `tan theta <= 1/2`, and the real-axis envelope `|beta''| + |beta'| <= beta/2`.
/// Reported only (empirical constants as margins): the derivative-decay
/// envelopes `sup |z|^k |beta^(k)(z)|` for `k = 1, 2`.
pub fn validate_surface(m: &ModelSurface, grid: &HypothesisGrid) -> Result<ValidationReport, GeometryError> {
    let mut checks = Vec::new();

    // Angle bound, independent of the grid.
    let angle_slack = 0.5 - m.theta.tan();
    checks.push(HypothesisCheck {
        id: "angle-bound".into(),
        pass: angle_slack >= 0.0,
        margin: angle_slack,
        witness: None,
    });

    for end in [End::Cusp, End::Funnel] {
        let profile = m.profile(end);
        let tag = match end {
            End::Cusp => "cusp",
            End::Funnel => "funnel",
        };

        // Interior rays: stay at 90% of the cone half-angle so that the
        // Cauchy circles of user profiles fit inside the domain.
        let mut angles = vec![0.0f64];
        for i in 1..=(grid.rays / 2) {
            let a = 0.9 * profile.theta_max * i as f64 / (grid.rays / 2) as f64;
            angles.push(a);
            angles.push(-a);
        }

        let mut cone = WorstTracker::new();
        let mut c1 = 0.0f64;
        let mut c1_at = Complex64::new(0.0, 0.0);
        let mut c2 = 0.0f64;
        let mut c2_at = Complex64::new(0.0, 0.0);
        let mut real_env = WorstTracker::new();

        for &phi in &angles {
            for &r in &grid.radii {
                let z = Complex64::from_polar(r, phi);
                let (b, b1, b2) = profile.derivatives(z)?;
                let dev = (b - 1.0).norm();
                cone.update(1.0 / 3.0 - dev, end, z, dev);
                let e1 = z.norm() * b1.norm();
                if e1 > c1 {
                    c1 = e1;
                    c1_at = z;
                }
                let e2 = z.norm().powi(2) * b2.norm();
                if e2 > c2 {
                    c2 = e2;
                    c2_at = z;
                }
                if phi == 0.0 {
                    let slack = b.re / 2.0 - (b2.re.abs() + b1.re.abs());
                    real_env.update(slack, end, z, b2.re.abs() + b1.re.abs());
                }
            }
        }

        checks.push(cone.into_check(&format!("{tag}-cone-bound")));
        checks.push(HypothesisCheck {
            id: format!("{tag}-decay-c1"),
            pass: true,
            margin: c1,
            witness: Some(Witness { end, re: c1_at.re, im: c1_at.im, value: c1 }),
        });
        checks.push(HypothesisCheck {
            id: format!("{tag}-decay-c2"),
            pass: true,
            margin: c2,
            witness: Some(Witness { end, re: c2_at.re, im: c2_at.im, value: c2 }),
        });
        checks.push(real_env.into_check(&format!("{tag}-real-envelope")));
    }

    Ok(ValidationReport { checks })
}

/// Quadrature plan for the regularized 0-volume.
#[derive(Debug, Clone)]
pub struct ZeroVolumePlan {
    /// Volume of the compact core `X_0`.
    pub core_volume: f64,
    /// The funnel embeds in the exact hyperbolic funnel `X_F^0` as
    /// `{r >= cut}`; the defect integrates `cosh` over `[0, cut]`.
    pub funnel_cut: f64,
    /// Target for the Richardson error estimate.
    pub tol: f64,
}

impl Default for ZeroVolumePlan {
    fn default() -> Self {
        ZeroVolumePlan { core_volume: 0.0, funnel_cut: 1.0, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroVolumeResult {
    /// `vol(X_0) + vol(X_C) - vol(X_F^0 \ X_F)`.
    pub total: f64,
    pub cusp_part: f64,
    pub funnel_defect: f64,
    /// Richardson error estimate of the quadratures.
    pub error_estimate: f64,
}

/// Composite Simpson on `[a, b]` with `panels` panels (even count enforced).
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(2) + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Simpson value refined until the Richardson error estimate meets `tol`;
/// returns `(extrapolated value, error estimate)`.
fn simpson_richardson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let mut panels = 64;
    let mut coarse = simpson(f, a, b, panels);
    loop {
        panels *= 2;
        let fine = simpson(f, a, b, panels);
        let err = (fine - coarse).abs() / 15.0;
        if err <= tol || panels >= 1 << 22 {
            return (fine + (fine - coarse) / 15.0, err);
        }
        coarse = fine;
    }
}

/// Regularized 0-volume of the surface (surfaces only, `n = 2`):
/// `vol(X_0) + vol(X_C) - vol(X_F^0 \ X_F)` with
/// `vol(X_C) = ell_C int_0^oo e^{-r}/beta_C dr` and
/// `vol(X_F^0 \ X_F) = ell_F int_0^cut cosh r dr`.
pub fn zero_volume(m: &ModelSurface, plan: &ZeroVolumePlan) -> Result<ZeroVolumeResult, GeometryError> {
    if m.n != 2 {
        return Err(GeometryError::Invalid(format!(
            "0-volume is defined here for surfaces (n = 2), got n = {}",
            m.n
        )));
    }
    // Truncate the cusp integral where the integrand, bounded by
    // (3/2)e^{-r} under the cone bound, is below machine precision.
    let r_max = 60.0;
    let cusp_profile = m.cusp.clone();
    let integrand = move |r: f64| {
        let b = cusp_profile.eval_unchecked(Complex64::new(r, 0.0)).re;
        (-r).exp() / b
    };
    let (cusp_int, cusp_err) = simpson_richardson(&integrand, 0.0, r_max, plan.tol / 2.0);
    let cusp_part = m.ell_cusp * cusp_int;

    let (funnel_int, funnel_err) =
        simpson_richardson(&|r: f64| r.cosh(), 0.0, plan.funnel_cut, plan.tol / 2.0);
    let funnel_defect = m.ell_funnel * funnel_int;

    Ok(ZeroVolumeResult {
        total: plan.core_volume + cusp_part - funnel_defect,
        cusp_part,
        funnel_defect,
        error_estimate: m.ell_cusp * cusp_err + m.ell_funnel * funnel_err,
    })
}

fn parse_f64(line: usize, v: &str) -> Result<f64, GeometryError> {
    v.trim().parse::<f64>().map_err(|_| GeometryError::Parse {
        line,
        msg: format!("expected a number, got `{}`", v.trim()),
    })
}

/// Parse the model format: `[surface]`, `[cusp]`, `[funnel]`,
/// `[perturbation]` sections of `key = value` lines, `#` comments.
fn parse_model(text: &str) -> Result<ModelSurface, GeometryError> {
    let mut n = 2u32;
    let mut theta: Option<f64> = None;
    let mut glue = GlueMode::Global;
    let mut ell = [1.0f64, 1.0f64];
    let mut profile_kind: [Option<String>; 2] = [None, None];
    let mut shift = [0.0f64; 2];
    let mut scale = [1.0f64; 2];
    let mut theta_max = [f64::NAN; 2];
    let mut coeffs: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut pert: Option<(Option<f64>, Option<f64>, Option<f64>)> = None;

    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Surface,
        End(usize),
        Perturbation,
    }
    let mut section = Section::None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = match name.trim() {
                "surface" => Section::Surface,
                "cusp" => Section::End(0),
                "funnel" => Section::End(1),
                "perturbation" => {
                    pert = Some((None, None, None));
                    Section::Perturbation
                }
                other => {
                    return Err(GeometryError::Parse {
                        line: line_no,
                        msg: format!("unknown section `{other}`"),
                    })
                }
            };
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| GeometryError::Parse {
            line: line_no,
            msg: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        match (section, key) {
            (Section::Surface, "n") => {
                n = value.parse().map_err(|_| GeometryError::Parse {
                    line: line_no,
                    msg: format!("bad dimension `{value}`"),
                })?
            }
            (Section::Surface, "theta") => theta = Some(parse_f64(line_no, value)?),
            (Section::Surface, "glue") => {
                glue = match value {
                    "global" => GlueMode::Global,
                    "separate" => GlueMode::Separate,
                    other => {
                        return Err(GeometryError::Parse {
                            line: line_no,
                            msg: format!("unknown glue mode `{other}`"),
                        })
                    }
                }
            }
            (Section::End(i), "profile") => profile_kind[i] = Some(value.to_string()),
            (Section::End(i), "shift") => shift[i] = parse_f64(line_no, value)?,
            (Section::End(i), "scale") => scale[i] = parse_f64(line_no, value)?,
            (Section::End(i), "theta_max") => theta_max[i] = parse_f64(line_no, value)?,
            (Section::End(i), "ell") => ell[i] = parse_f64(line_no, value)?,
            (Section::End(i), "coeffs") => {
                coeffs[i] = value
                    .split_whitespace()
                    .map(|v| parse_f64(line_no, v))
                    .collect::<Result<_, _>>()?
            }
            (Section::Perturbation, "lo") => pert.as_mut().unwrap().0 = Some(parse_f64(line_no, value)?),
            (Section::Perturbation, "hi") => pert.as_mut().unwrap().1 = Some(parse_f64(line_no, value)?),
            (Section::Perturbation, "amplitude") => {
                pert.as_mut().unwrap().2 = Some(parse_f64(line_no, value)?)
            }
            _ => {
                return Err(GeometryError::Parse {
                    line: line_no,
                    msg: format!("unexpected key `{key}` here"),
                })
            }
        }
    }

    let theta = theta.ok_or_else(|| GeometryError::Invalid("missing [surface] theta".into()))?;
    let mut profiles = Vec::with_capacity(2);
    for i in 0..2 {
        let tm = if theta_max[i].is_nan() { theta.max(0.5) } else { theta_max[i] };
        let kind = match profile_kind[i].as_deref() {
            Some("constant-one") | None => WarpKind::ConstantOne,
            Some("hyperbolic-funnel") => WarpKind::HyperbolicFunnel { scale: scale[i], shift: shift[i] },
            Some("user-analytic") => WarpKind::UserAnalytic { coeffs: coeffs[i].clone() },
            Some(other) => {
                return Err(GeometryError::Invalid(format!("unknown profile kind `{other}`")))
            }
        };
        profiles.push(WarpProfile { kind, theta_max: tm });
    }
    let perturbation = match pert {
        None => None,
        Some((lo, hi, amp)) => {
            let lo = lo.ok_or_else(|| GeometryError::Invalid("perturbation missing lo".into()))?;
            let hi = hi.ok_or_else(|| GeometryError::Invalid("perturbation missing hi".into()))?;
            if !(hi > lo) {
                return Err(GeometryError::Invalid("perturbation needs hi > lo".into()));
            }
            Some(Perturbation {
                lo,
                hi,
                amplitude: amp.ok_or_else(|| GeometryError::Invalid("perturbation missing amplitude".into()))?,
            })
        }
    };
    if n < 2 {
        return Err(GeometryError::Invalid("dimension must be at least 2".into()));
    }
    Ok(ModelSurface {
        n,
        theta,
        funnel: profiles.pop().unwrap(),
        cusp: profiles.pop().unwrap(),
        ell_cusp: ell[0],
        ell_funnel: ell[1],
        glue,
        perturbation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_profile_is_one_everywhere() {
        let p = WarpProfile::constant_one(0.5);
        let z = Complex64::new(2.0, 0.3);
        let (b, b1, b2) = p.derivatives(z).unwrap();
        assert_eq!(b, Complex64::new(1.0, 0.0));
        assert_eq!(b1, Complex64::new(0.0, 0.0));
        assert_eq!(b2, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn hyperbolic_funnel_matches_direct_form() {
        let (scale, shift) = (std::f64::consts::E, 1.7);
        let p = WarpProfile::hyperbolic_funnel(scale, shift, 0.5);
        for &r in &[0.0f64, 0.7, 3.0, 40.0] {
            let direct = scale * r.exp() / (r + shift).cosh();
            let b = p.eval(Complex64::new(r, 0.0)).unwrap();
            assert_abs_diff_eq!(b.re, direct, epsilon = 1e-12);
            assert_abs_diff_eq!(b.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn cauchy_derivatives_match_closed_form_on_rational_profile() {
        // beta = 1 + c/(1+z)^2: differentiate by hand and compare.
        let c = 0.2;
        let p = WarpProfile::user_analytic(vec![0.0, c], 0.45);
        for &(r, phi) in &[(0.5, 0.0), (2.0, 0.3), (10.0, -0.4)] {
            let z = Complex64::from_polar(r, phi);
            let (b, b1, b2) = p.derivatives(z).unwrap();
            let w = z + 1.0;
            assert!((b - (1.0 + c / (w * w))).norm() < 1e-12);
            assert!((b1 - (-2.0 * c / (w * w * w))).norm() < 1e-10);
            assert!((b2 - (6.0 * c / (w * w * w * w))).norm() < 1e-9);
        }
    }

    #[test]
    fn outside_cone_is_an_error() {
        let p = WarpProfile::hyperbolic_funnel(1.0, 0.0, 0.3);
        assert!(p.eval(Complex64::new(1.0, 0.5)).is_err());
        assert!(p.eval(Complex64::new(-1.0, 0.0)).is_err());
        assert!(p.eval(Complex64::new(1.0, 0.1)).is_ok());
    }

    #[test]
    fn conjugation_weight_linear_for_constant_profile() {
        let p = WarpProfile::constant_one(0.5);
        assert_abs_diff_eq!(conjugation_weight(End::Cusp, &p, 2, 3.0).unwrap(), 1.5);
        assert_abs_diff_eq!(conjugation_weight(End::Funnel, &p, 2, 3.0).unwrap(), -1.5);
    }

    #[test]
    fn potential_vanishes_for_constant_profile() {
        let p = WarpProfile::constant_one(0.5);
        let v = potential_v(End::Cusp, &p, 2, Complex64::new(1.0, 0.2)).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn hyperbolic_funnel_metric_has_curvature_minus_one() {
        // e^r / beta_F = cosh(r + shift) / scale: radial curvature -1.
        let p = WarpProfile::hyperbolic_funnel(std::f64::consts::E, 1.7, 0.5);
        for &r in &[0.0, 1.0, 2.5] {
            let (kr, _) = end_curvatures(End::Funnel, &p, r).unwrap();
            assert_abs_diff_eq!(kr, -1.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn cusp_constant_profile_curvatures() {
        let p = WarpProfile::constant_one(0.5);
        let (kr, kt) = end_curvatures(End::Cusp, &p, 1.0).unwrap();
        assert_abs_diff_eq!(kr, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(kt, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn validation_passes_for_model_pair() {
        let mut m = ModelSurface::parabolic_cylinder(1.0, 0.4636, 0.46);
        m.funnel = WarpProfile::hyperbolic_funnel(std::f64::consts::E, 1.7, 0.46);
        let report = validate_surface(&m, &HypothesisGrid::default()).unwrap();
        assert!(report.pass(), "{}", report.to_json_lines());
    }

    #[test]
    fn validation_flags_large_deviation() {
        let mut m = ModelSurface::parabolic_cylinder(1.0, 0.4636, 0.45);
        m.cusp = WarpProfile::user_analytic(vec![2.0], 0.45);
        let report = validate_surface(&m, &HypothesisGrid::default()).unwrap();
        let cone = report
            .checks
            .iter()
            .find(|c| c.id == "cusp-cone-bound")
            .unwrap();
        assert!(!cone.pass);
        assert!(cone.margin < 0.0);
    }

    #[test]
    fn zero_volume_cusp_piece_is_one() {
        let m = ModelSurface::parabolic_cylinder(1.0, 0.4636, 0.5);
        let res = zero_volume(&m, &ZeroVolumePlan::default()).unwrap();
        assert_abs_diff_eq!(res.cusp_part, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(res.funnel_defect, 1.0f64.sinh(), epsilon = 1e-9);
        assert!(res.error_estimate < 1e-9);
    }

    #[test]
    fn model_roundtrip_through_parser() {
        let text = "
[surface]
n = 2
theta = 0.4636
glue = global

[cusp]
profile = constant-one
theta_max = 0.5
ell = 1.0

[funnel]
profile = hyperbolic-funnel
scale = 2.718281828459045
shift = 1.7
theta_max = 0.5
ell = 2.0

[perturbation]
lo = -1.0
hi = 1.0
amplitude = 0.1
";
        let m = ModelSurface::parse(text).unwrap();
        assert_eq!(m.n, 2);
        assert_eq!(m.glue, GlueMode::Global);
        assert_eq!(m.ell_funnel, 2.0);
        assert!(matches!(m.funnel.kind, WarpKind::HyperbolicFunnel { .. }));
        let p = m.perturbation.unwrap();
        assert_eq!(p.eval(-1.0), 0.0);
        assert!(p.eval(0.0) > 0.0);
    }

    #[test]
    fn parser_reports_line_numbers() {
        let err = ModelSurface::parse("[surface]\ntheta = abc\n").unwrap_err();
        match err {
            GeometryError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
