//! Geodesic flow on the model surfaces and nontrapping diagnostics.
//!
//! Per-mode Hamiltonians: `p = rho^2 + beta_F(r)^2 e^{-2r} alpha` on the
//! funnel and `p = rho^2 + beta_C(r)^2 e^{2r} alpha` on the cusp, with
//! `alpha >= 0` the cross-section Fourier parameter.  On globally glued
//! models a single chart `t in R` is used, with the cusp at `t -> +oo`
//! and the funnel at `t -> -oo`.
//!
//! The module integrates the flow with a fixed-step RK4 scheme guarded by
//! an energy-drift tolerance, classifies escape through either end,
//! counts cusp visits with hysteresis, and evaluates the tanh closed form
//! of `rho(t)` (with the profile correction integral accumulated along
//! the simultaneously integrated trajectory) for cross-validation.

use crate::geometry::{End, GeometryError, GlueMode, ModelSurface, WarpProfile};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("energy drift {drift:.3e} exceeded tolerance at t = {t}")]
    EnergyDrift { t: f64, drift: f64 },
    #[error("global chart requires a globally glued model")]
    NotGlued,
}

/// Coordinate chart a flow is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Chart {
    /// End chart `r >= 0` of the given end.
    End(End),
    /// Global chart `t in R`: cusp chart `r = t` for `t >= 0`, funnel
    /// chart `r = -t` for `t <= 0`.
    Global,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhasePoint {
    pub r: f64,
    pub rho: f64,
}

/// A Hamiltonian flow problem: chart, profiles, and the mode parameter.
pub struct FlowSetup<'a> {
    chart: Chart,
    cusp: &'a WarpProfile,
    funnel: &'a WarpProfile,
    alpha: f64,
}

impl<'a> FlowSetup<'a> {
    pub fn end(end: End, profile: &'a WarpProfile, alpha: f64) -> Self {
        FlowSetup { chart: Chart::End(end), cusp: profile, funnel: profile, alpha }
    }

    pub fn global(m: &'a ModelSurface, alpha: f64) -> Result<Self, DynamicsError> {
        if m.glue != GlueMode::Global {
            return Err(DynamicsError::NotGlued);
        }
        Ok(FlowSetup { chart: Chart::Global, cusp: &m.cusp, funnel: &m.funnel, alpha })
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    /// Warp weight `w` and its logarithmic derivative `w'/w` at the chart
    /// coordinate, where `p = rho^2 + w(r) alpha`.  In an end chart the
    /// profile argument is clamped at the chart boundary `r = 0`, extending
    /// `beta` by its boundary value for trajectories that exit inward.
    fn weight(&self, r: f64) -> (f64, f64) {
        let (end, rr) = match self.chart {
            Chart::End(e) => (e, r.max(0.0)),
            Chart::Global => {
                if r >= 0.0 {
                    (End::Cusp, r)
                } else {
                    (End::Funnel, -r)
                }
            }
        };
        let profile = match end {
            End::Cusp => self.cusp,
            End::Funnel => self.funnel,
        };
        let (b, b1, _) = profile
            .derivatives(Complex64::new(rr, 0.0))
            .expect("real axis is inside the cone");
        let (b, b1) = (b.re, b1.re);
        // Chart orientation: on the cusp (and global t >= 0) the weight is
        // beta^2 e^{2r}; on the funnel chart beta^2 e^{-2r}; in the global
        // chart the funnel coordinate is r = -t so both cases read e^{2t}.
        match (self.chart, end) {
            (Chart::End(End::Cusp), _) => (b * b * (2.0 * r).exp(), 2.0 * (1.0 + b1 / b)),
            (Chart::End(End::Funnel), _) => (b * b * (-2.0 * r).exp(), -2.0 * (1.0 - b1 / b)),
            (Chart::Global, End::Cusp) => (b * b * (2.0 * r).exp(), 2.0 * (1.0 + b1 / b)),
            (Chart::Global, End::Funnel) => (b * b * (2.0 * r).exp(), 2.0 * (1.0 - b1 / b)),
        }
    }

    /// Warp weight `w` and its logarithmic derivative `w'/w` at the chart
    /// coordinate, so that `p = rho^2 + w(r) alpha`.
    pub fn warp_weight(&self, r: f64) -> (f64, f64) {
        self.weight(r)
    }

    /// The Hamiltonian `p(r, rho)`.
    pub fn hamiltonian(&self, x: PhasePoint) -> f64 {
        let (w, _) = self.weight(x.r);
        x.rho * x.rho + w * self.alpha
    }

    /// Right-hand side `(dr/dt, drho/dt) = (2 rho, -alpha w'(r))`.
    fn rhs(&self, x: PhasePoint) -> (f64, f64) {
        let (w, dlog) = self.weight(x.r);
        (2.0 * x.rho, -self.alpha * w * dlog)
    }
}

/// Convenience wrapper for the per-mode Hamiltonian value in an end chart.
pub fn hamiltonian(end: End, profile: &WarpProfile, alpha: f64, r: f64, rho: f64) -> f64 {
    FlowSetup::end(end, profile, alpha).hamiltonian(PhasePoint { r, rho })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    EscapedFunnel,
    EscapedCusp,
    Bounded,
}

#[derive(Debug, Clone)]
pub struct IntegrateOpts {
    pub dt: f64,
    pub t_max: f64,
    /// Escape once the chart coordinate passes this magnitude.
    pub escape_r: f64,
    /// Allowed energy drift per unit time.
    pub drift_tol: f64,
    /// Hysteresis band half-width for cusp-visit counting.
    pub hysteresis: f64,
    /// Keep every `record_every`-th sample (plus the first and last).
    pub record_every: usize,
}

impl Default for IntegrateOpts {
    fn default() -> Self {
        IntegrateOpts {
            dt: 1e-3,
            t_max: 50.0,
            escape_r: 30.0,
            drift_tol: 1e-7,
            hysteresis: 0.1,
            record_every: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sample {
    pub t: f64,
    pub r: f64,
    pub rho: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub chart: Chart,
    pub alpha: f64,
    pub outcome: Outcome,
    pub escape_time: Option<f64>,
    pub cusp_visits: usize,
    pub max_drift: f64,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    /// CSV rows `t,r,rho,p,end` where `end` tags the chart region of the
    /// sample (`cusp`, `funnel`, or `core` near the gluing collar).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,r,rho,p,end\n");
        for s in &self.samples {
            let tag = match self.chart {
                Chart::End(End::Cusp) => "cusp",
                Chart::End(End::Funnel) => "funnel",
                Chart::Global => {
                    if s.r >= 1.0 {
                        "cusp"
                    } else if s.r <= -1.0 {
                        "funnel"
                    } else {
                        "core"
                    }
                }
            };
            out.push_str(&format!("{},{},{},{},{}\n", s.t, s.r, s.rho, s.p, tag));
        }
        out
    }
}

/// Track maximal excursions into `{r >= 0}` with hysteresis: a visit
/// starts when `r >= +band` while previously out, and ends once
/// `r <= -band`.
struct CuspVisitCounter {
    band: f64,
    inside: bool,
    visits: usize,
}

impl CuspVisitCounter {
    fn new(band: f64, r0: f64) -> Self {
        let inside = r0 >= band;
        CuspVisitCounter { band, inside, visits: usize::from(inside) }
    }

    fn observe(&mut self, r: f64) {
        if self.inside {
            if r <= -self.band {
                self.inside = false;
            }
        } else if r >= self.band {
            self.inside = true;
            self.visits += 1;
        }
    }
}

/// Fixed-step RK4 integration of the geodesic flow with an energy guard.
pub fn integrate(
    setup: &FlowSetup,
    x0: PhasePoint,
    opts: &IntegrateOpts,
) -> Result<Trajectory, DynamicsError> {
    let p0 = setup.hamiltonian(x0);
    let mut x = x0;
    let mut t = 0.0;
    let mut samples = vec![Sample { t, r: x.r, rho: x.rho, p: p0 }];
    let mut counter = CuspVisitCounter::new(opts.hysteresis, x0.r);
    let mut max_drift = 0.0f64;
    let mut outcome = Outcome::Bounded;
    let mut escape_time = None;
    let mut step = 0usize;

    let escaped = |x: &PhasePoint| match setup.chart {
        Chart::End(_) => x.r >= opts.escape_r,
        Chart::Global => x.r.abs() >= opts.escape_r,
    };

    while t < opts.t_max {
        let h = opts.dt.min(opts.t_max - t);
        let (k1r, k1p) = setup.rhs(x);
        let (k2r, k2p) = setup.rhs(PhasePoint { r: x.r + 0.5 * h * k1r, rho: x.rho + 0.5 * h * k1p });
        let (k3r, k3p) = setup.rhs(PhasePoint { r: x.r + 0.5 * h * k2r, rho: x.rho + 0.5 * h * k2p });
        let (k4r, k4p) = setup.rhs(PhasePoint { r: x.r + h * k3r, rho: x.rho + h * k3p });
        x = PhasePoint {
            r: x.r + h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r),
            rho: x.rho + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        };
        t += h;
        step += 1;

        let p = setup.hamiltonian(x);
        let drift = (p - p0).abs();
        max_drift = max_drift.max(drift);
        if drift > opts.drift_tol * (1.0 + t) {
            return Err(DynamicsError::EnergyDrift { t, drift });
        }
        if setup.chart == Chart::Global {
            counter.observe(x.r);
        } else if let Chart::End(End::Cusp) = setup.chart {
            counter.observe(x.r);
        }
        if step % opts.record_every == 0 {
            samples.push(Sample { t, r: x.r, rho: x.rho, p });
        }
        if escaped(&x) {
            outcome = match setup.chart {
                Chart::End(End::Cusp) => Outcome::EscapedCusp,
                Chart::End(End::Funnel) => Outcome::EscapedFunnel,
                Chart::Global => {
                    if x.r > 0.0 {
                        Outcome::EscapedCusp
                    } else {
                        Outcome::EscapedFunnel
                    }
                }
            };
            escape_time = Some(t);
            break;
        }
    }
    if samples.last().map(|s| s.t) != Some(t) {
        samples.push(Sample { t, r: x.r, rho: x.rho, p: setup.hamiltonian(x) });
    }
    Ok(Trajectory {
        chart: setup.chart,
        alpha: setup.alpha,
        outcome,
        escape_time,
        cusp_visits: counter.visits,
        max_drift,
        samples,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormRho {
    /// `rho(t_i)` from the tanh closed form at the requested times.
    pub rho: Vec<f64>,
    /// Set when `rho(0) = +- sqrt p` puts the trajectory on the separatrix
    /// ray, where the closed form degenerates to `rho == rho(0)`.
    pub separatrix: bool,
}

/// Evaluate the closed form
/// `rho(t) = sqrt(p) tanh[ +-2 sqrt(p) (t -+ J(t)) + atanh(rho(0)/sqrt p) ]`,
/// `J(t) = int_0^t beta'(r(s))/beta(r(s)) ds` (`+,-` on the funnel, `-,+`
/// on the cusp), accumulating `J` by quadrature along a simultaneously
/// integrated trajectory.  Times must be increasing from 0.
pub fn closed_form_rho(
    end: End,
    profile: &WarpProfile,
    alpha: f64,
    x0: PhasePoint,
    times: &[f64],
    dt: f64,
) -> Result<ClosedFormRho, DynamicsError> {
    let setup = FlowSetup::end(end, profile, alpha);
    let p = setup.hamiltonian(x0);
    let sp = p.sqrt();
    if x0.rho.abs() >= sp * (1.0 - 1e-12) {
        return Ok(ClosedFormRho { rho: times.iter().map(|_| x0.rho).collect(), separatrix: true });
    }
    let dlog = |r: f64| {
        let (b, b1, _) = profile
            .derivatives(Complex64::new(r.max(0.0), 0.0))
            .expect("real axis is inside the cone");
        b1.re / b.re
    };
    // Extended state (r, rho, J) advanced with the same RK4 step.
    let rhs = |r: f64, rho: f64| {
        let (dr, drho) = setup.rhs(PhasePoint { r, rho });
        (dr, drho, dlog(r))
    };
    let theta0 = (x0.rho / sp).atanh();
    let sign = match end {
        End::Funnel => 1.0,
        End::Cusp => -1.0,
    };
    let value = |t: f64, j: f64| sp * (sign * 2.0 * sp * (t - sign * j) + theta0).tanh();

    let (mut r, mut rho, mut j) = (x0.r, x0.rho, 0.0f64);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while t < target - 1e-15 {
            let h = dt.min(target - t);
            let (a1, b1, c1) = rhs(r, rho);
            let (a2, b2, c2) = rhs(r + 0.5 * h * a1, rho + 0.5 * h * b1);
            let (a3, b3, c3) = rhs(r + 0.5 * h * a2, rho + 0.5 * h * b2);
            let (a4, b4, c4) = rhs(r + h * a3, rho + h * b3);
            r += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            rho += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
            j += h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
            t += h;
        }
        out.push(value(t, j));
    }
    Ok(ClosedFormRho { rho: out, separatrix: false })
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub total: usize,
    pub escaped_funnel: usize,
    pub escaped_cusp: usize,
    pub bounded: usize,
    pub max_cusp_visits: usize,
    pub seed: u64,
    /// Indices of trajectories still bounded at the horizon.
    pub bounded_indices: Vec<usize>,
}

/// Integrate a batch of unit-energy initial conditions sampled from the
/// gluing region and classify their escape.  Sampling is per-index
/// deterministic, so reports are reproducible for a fixed seed and
/// independent of the worker count.
pub fn classify_batch(
    m: &ModelSurface,
    count: usize,
    seed: u64,
    opts: &IntegrateOpts,
) -> Result<BatchReport, DynamicsError> {
    if m.glue != GlueMode::Global {
        return Err(DynamicsError::NotGlued);
    }
    let results: Vec<(Outcome, usize)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let r0: f64 = rng.gen_range(-5.0..5.0);
            let rho0: f64 = rng.gen_range(-1.0..1.0);
            // Unit energy: alpha = (1 - rho^2) / w(r0) >= 0.
            let probe = FlowSetup::global(m, 0.0).expect("checked glue");
            let (w, _) = probe.weight(r0);
            let alpha = (1.0 - rho0 * rho0) / w;
            let setup = FlowSetup::global(m, alpha).expect("checked glue");
            let traj = integrate(&setup, PhasePoint { r: r0, rho: rho0 }, opts)?;
            Ok((traj.outcome, traj.cusp_visits))
        })
        .collect::<Result<_, DynamicsError>>()?;

    let mut report = BatchReport {
        total: count,
        escaped_funnel: 0,
        escaped_cusp: 0,
        bounded: 0,
        max_cusp_visits: 0,
        seed,
        bounded_indices: Vec::new(),
    };
    for (i, (outcome, visits)) in results.iter().enumerate() {
        match outcome {
            Outcome::EscapedFunnel => report.escaped_funnel += 1,
            Outcome::EscapedCusp => report.escaped_cusp += 1,
            Outcome::Bounded => {
                report.bounded += 1;
                report.bounded_indices.push(i);
            }
        }
        report.max_cusp_visits = report.max_cusp_visits.max(*visits);
    }
    Ok(report)
}
